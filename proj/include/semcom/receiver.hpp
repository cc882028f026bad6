#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/matrix.hpp"
#include "semcom/nn.hpp"

namespace semcom {

// Variational decoder q(z|y): one Rx network applied with shared weights to
// every agent's received vector, mean aggregation over agents, then a softmax
// head over the classes. Parameters live in one flat vector [shared_rx | head].
struct DecoderConfig {
    MlpSpec shared_rx;
    MlpSpec head;
    int n_agents = 1;
    int n_class = 4;

    std::size_t shared_param_count() const { return shared_rx.param_count(); }
    std::size_t total_params() const { return shared_rx.param_count() + head.param_count(); }

    std::span<const double> shared_params(std::span<const double> all) const {
        return all.subspan(0, shared_rx.param_count());
    }
    std::span<const double> head_params(std::span<const double> all) const {
        return all.subspan(shared_rx.param_count(), head.param_count());
    }

    void validate() const {
        shared_rx.validate();
        head.validate();
        if (n_agents < 1) throw ConfigError("DecoderConfig: n_agents must be >= 1");
        if (n_class < 2) throw ConfigError("DecoderConfig: n_class must be >= 2");
        if (head.input_width != shared_rx.output_width())
            throw ConfigError("DecoderConfig: head input must match shared_rx output");
        if (head.output_width() != static_cast<std::size_t>(n_class))
            throw ConfigError("DecoderConfig: head final width must equal n_class");
        if (head.activations.back() != Activation::kSoftmax)
            throw ConfigError("DecoderConfig: head must end in softmax");
    }
};

struct DecodeCache {
    std::vector<ForwardCache> shared;  // per agent
    Matrix pooled;
    ForwardCache head;
};

// Posterior batch: head(mean over agents of shared_rx(y_i)). Mean aggregation
// realizes the global average pool over the agent axis and makes the output
// invariant to agent permutations.
inline Matrix decode(const DecoderConfig& cfg, std::span<const double> params,
                     const std::vector<Matrix>& y, DecodeCache* cache = nullptr) {
    if (y.size() != static_cast<std::size_t>(cfg.n_agents))
        throw ConfigError("decode: agent count mismatch");
    const std::size_t batch = y[0].rows();
    if (cache) cache->shared.assign(y.size(), {});
    Matrix pooled(batch, cfg.shared_rx.output_width());
    for (std::size_t a = 0; a < y.size(); ++a) {
        Matrix h = mlp_forward(cfg.shared_rx, cfg.shared_params(params), y[a],
                               cache ? &cache->shared[a] : nullptr);
        for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t j = 0; j < h.cols(); ++j) pooled(n, j) += h(n, j);
    }
    const double inv_a = 1.0 / static_cast<double>(cfg.n_agents);
    for (double& v : pooled.data()) v *= inv_a;
    if (cache) cache->pooled = pooled;
    return mlp_forward(cfg.head, cfg.head_params(params), pooled,
                       cache ? &cache->head : nullptr);
}

// Probability floor applied inside the log so a collapsed posterior yields a
// large negative reward instead of -inf.
constexpr double kRewardClamp = 1e-30;

// ln q(z|y) for the true class; this is the RL reward and the negated
// per-sample cross-entropy term.
inline double reward(std::span<const double> posterior, int true_class) {
    return std::log(std::max(posterior[static_cast<std::size_t>(true_class)], kRewardClamp));
}

inline std::vector<double> rewards_batch(const Matrix& posteriors,
                                         const std::vector<int>& labels) {
    std::vector<double> r(labels.size());
    for (std::size_t n = 0; n < labels.size(); ++n)
        r[n] = reward(posteriors.row(n), labels[n]);
    return r;
}

// Maximum a posteriori class; ties broken toward the lowest index.
inline int classify(std::span<const double> posterior) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < posterior.size(); ++k)
        if (posterior[k] > posterior[best]) best = k;
    return static_cast<int>(best);
}

// Backward pass of the Monte Carlo cross entropy
//   L = -(1/N) sum_n ln q(z_n | y_n)
// w.r.t. decoder parameters and the per-agent inputs. The softmax+CE pair is
// fused at the head logits (gradient (q - onehot)/N), which stays finite even
// for collapsed posteriors.
struct DecodeBackwardResult {
    std::vector<double> param_grad;
    std::vector<Matrix> input_grad;  // dL/dy per agent
};

inline DecodeBackwardResult decode_backward_ce(const DecoderConfig& cfg,
                                               std::span<const double> params,
                                               const DecodeCache& cache,
                                               const Matrix& posteriors,
                                               const std::vector<int>& labels,
                                               double sample_weight) {
    const std::size_t batch = posteriors.rows();
    const std::size_t K = posteriors.cols();

    // Fused upstream at the softmax logits. mlp_backward for a softmax final
    // layer expects dL/d(probs); feeding u with u_z = -w/q_z reproduces the
    // fused form w*(q - onehot) exactly when q_z is representable, but fails
    // for q_z ~ 0. Instead we bypass the softmax by differentiating the head
    // as if its last activation were linear with upstream w*(q - onehot).
    Matrix logit_grad(batch, K);
    for (std::size_t n = 0; n < batch; ++n) {
        const auto z = static_cast<std::size_t>(labels[n]);
        for (std::size_t k = 0; k < K; ++k)
            logit_grad(n, k) = sample_weight * (posteriors(n, k) - (k == z ? 1.0 : 0.0));
    }

    MlpSpec head_linear = cfg.head;
    head_linear.activations.back() = Activation::kLinear;

    DecodeBackwardResult out;
    out.param_grad.assign(cfg.total_params(), 0.0);
    auto head_grad = std::span<double>(out.param_grad)
                         .subspan(cfg.shared_param_count(), cfg.head.param_count());
    Matrix pooled_grad = mlp_backward(head_linear, cfg.head_params(params), cache.head,
                                      logit_grad, head_grad);

    const double inv_a = 1.0 / static_cast<double>(cfg.n_agents);
    for (double& v : pooled_grad.data()) v *= inv_a;

    out.input_grad.resize(static_cast<std::size_t>(cfg.n_agents));
    std::vector<double> shared_accum(cfg.shared_param_count(), 0.0);
    std::vector<double> shared_tmp(cfg.shared_param_count());
    for (int a = 0; a < cfg.n_agents; ++a) {
        const auto ai = static_cast<std::size_t>(a);
        out.input_grad[ai] = mlp_backward(cfg.shared_rx, cfg.shared_params(params),
                                          cache.shared[ai], pooled_grad, shared_tmp);
        for (std::size_t i = 0; i < shared_accum.size(); ++i)
            shared_accum[i] += shared_tmp[i];
    }
    for (std::size_t i = 0; i < shared_accum.size(); ++i) out.param_grad[i] = shared_accum[i];
    return out;
}

}  // namespace semcom
