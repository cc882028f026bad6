#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/matrix.hpp"
#include "semcom/system.hpp"

namespace semcom {

enum class EstimatorKind { kDecoderSupervised, kReinforceChannel, kReparam, kSpg };

inline std::string estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::kDecoderSupervised: return "decoder_supervised";
        case EstimatorKind::kReinforceChannel: return "reinforce_channel";
        case EstimatorKind::kReparam: return "reparam";
        case EstimatorKind::kSpg: return "spg";
    }
    return "?";
}

// Mean gradient plus optional per-sample contributions (rows average to the
// mean). Retention is required only by variance probes and unbiasedness
// oracles.
struct GradEstimate {
    EstimatorKind kind = EstimatorKind::kDecoderSupervised;
    std::vector<double> mean_grad;
    std::optional<Matrix> per_sample;
};

namespace detail {

// Per-sample retention: replay each sample as a one-row batch and evaluate
// the single-sample gradient with the same estimator. The mean gradient is
// then the exact column mean of the rows.
template <typename GradFn>
void retain_per_sample(const SystemConfig& cfg, const SystemParams& params,
                       const SampleBatch& batch, std::size_t dim, GradFn&& single,
                       GradEstimate& out) {
    if (cfg.encoder && cfg.encoder->norm_mode == NormMode::kBatch)
        throw ConfigError(
            "per-sample gradients are undefined under batch-mode normalization");
    const std::size_t N = batch.size();
    out.per_sample = Matrix(N, dim);
    std::vector<double> mean(dim, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        SampleBatch one = slice_sample(cfg, params, batch, n);
        std::vector<double> g = single(one, n);
        out.per_sample->set_row(n, g);
        for (std::size_t i = 0; i < dim; ++i) mean[i] += g[i];
    }
    const double inv = 1.0 / static_cast<double>(N);
    for (double& v : mean) v *= inv;
    out.mean_grad = std::move(mean);
}

}  // namespace detail

// Supervised decoder gradient: exact backprop of the Monte Carlo cross
// entropy w.r.t. the decoder parameters.
inline GradEstimate grad_decoder(const SystemConfig& cfg, const SystemParams& params,
                                 const SampleBatch& batch, bool retain_per_sample = false) {
    GradEstimate out;
    out.kind = EstimatorKind::kDecoderSupervised;
    const double w = 1.0 / static_cast<double>(batch.size());
    out.mean_grad = decode_backward_ce(cfg.decoder, params.decoder, batch.dec_cache,
                                       batch.posteriors, batch.labels, w)
                        .param_grad;
    if (retain_per_sample) {
        detail::retain_per_sample(
            cfg, params, batch, cfg.decoder.total_params(),
            [&](const SampleBatch& one, std::size_t) {
                return decode_backward_ce(cfg.decoder, params.decoder, one.dec_cache,
                                          one.posteriors, one.labels, 1.0)
                    .param_grad;
            },
            out);
    }
    return out;
}

namespace detail {

// Common tail of the encoder-side estimators: push per-agent upstreams at
// x_bar down to the flat encoder parameter vector.
inline std::vector<double> encoder_grad_from_upstream(
    const SystemConfig& cfg, const SystemParams& params, const SampleBatch& batch,
    const std::vector<Matrix>& upstream_x_bar) {
    std::vector<double> g(cfg.encoder->total_params(), 0.0);
    encoder_backward(*cfg.encoder, params.encoder, batch.enc_cache, upstream_x_bar, g);
    return g;
}

}  // namespace detail

// Pathwise (reparametrization) gradient w.r.t. the encoder parameters:
// backprop through y = sqrt(1-var)*x_bar + sqrt(var)*eps_pi + sqrt(nv)*eps.
// With a deterministic policy this is the model-aware path.
inline GradEstimate grad_reparam(const SystemConfig& cfg, const SystemParams& params,
                                 const SampleBatch& batch, bool retain_per_sample = false) {
    if (!cfg.encoder) throw ConfigError("grad_reparam: system has no encoder");
    if (!batch.has_noise_records())
        throw TrainingError("grad_reparam: batch is missing noise records");
    GradEstimate out;
    out.kind = EstimatorKind::kReparam;

    auto compute = [&](const SampleBatch& b, double weight) {
        DecodeBackwardResult dec = decode_backward_ce(
            cfg.decoder, params.decoder, b.dec_cache, b.posteriors, b.labels, weight);
        const double a = std::sqrt(1.0 - b.sigma_pi2);
        for (Matrix& m : dec.input_grad)
            for (double& v : m.data()) v *= a;
        return detail::encoder_grad_from_upstream(cfg, params, b, dec.input_grad);
    };

    out.mean_grad = compute(batch, 1.0 / static_cast<double>(batch.size()));
    if (retain_per_sample) {
        detail::retain_per_sample(
            cfg, params, batch, cfg.encoder->total_params(),
            [&](const SampleBatch& one, std::size_t) { return compute(one, 1.0); }, out);
    }
    return out;
}

// Model-aware REINFORCE gradient through the channel density: the channel
// score (y - x_bar)/noise_var chained through the encoder, weighted by the
// reward. Defined only for the deterministic policy and positive noise.
inline GradEstimate grad_reinforce_channel(const SystemConfig& cfg,
                                           const SystemParams& params,
                                           const SampleBatch& batch,
                                           bool retain_per_sample = false) {
    if (!cfg.encoder) throw ConfigError("grad_reinforce_channel: system has no encoder");
    if (batch.sigma_pi2 != 0.0)
        throw TrainingError(
            "grad_reinforce_channel: stochastic policy active; estimators must not be mixed");
    for (const auto& nv : batch.noise_var)
        for (double v : nv)
            if (v <= 0.0)
                throw TrainingError(
                    "grad_reinforce_channel: undefined for zero channel noise");

    GradEstimate out;
    out.kind = EstimatorKind::kReinforceChannel;

    auto compute = [&](const SampleBatch& b, std::span<const double> rewards,
                       double weight) {
        std::vector<Matrix> upstream(b.x_bar.size());
        for (std::size_t a = 0; a < b.x_bar.size(); ++a) {
            Matrix score = log_channel_grad(b.x_bar[a], b.y[a], b.noise_var[a]);
            upstream[a] = Matrix(score.rows(), score.cols());
            for (std::size_t n = 0; n < score.rows(); ++n)
                for (std::size_t c = 0; c < score.cols(); ++c)
                    upstream[a](n, c) = -weight * rewards[n] * score(n, c);
        }
        return detail::encoder_grad_from_upstream(cfg, params, b, upstream);
    };

    out.mean_grad = compute(batch, batch.rewards, 1.0 / static_cast<double>(batch.size()));
    if (retain_per_sample) {
        detail::retain_per_sample(
            cfg, params, batch, cfg.encoder->total_params(),
            [&](const SampleBatch& one, std::size_t) {
                return compute(one, one.rewards, 1.0);
            },
            out);
    }
    return out;
}

// Stochastic policy gradient w.r.t. the encoder parameters. Rewards enter as
// opaque constants (they may arrive over the feedback link); no channel or
// decoder knowledge is used — only the policy score chained through the
// encoder and normalization.
inline GradEstimate grad_spg(const SystemConfig& cfg, const SystemParams& params,
                             const SampleBatch& batch, std::span<const double> rewards,
                             bool retain_per_sample = false) {
    if (!cfg.encoder) throw ConfigError("grad_spg: system has no encoder");
    if (batch.sigma_pi2 <= 0.0)
        throw TrainingError("grad_spg: deterministic policy has no score function");
    if (rewards.size() != batch.size())
        throw ConfigError("grad_spg: reward count does not match batch size");

    GradEstimate out;
    out.kind = EstimatorKind::kSpg;

    auto compute = [&](const SampleBatch& b, std::span<const double> r, double weight) {
        std::vector<Matrix> upstream(b.x_bar.size());
        for (std::size_t a = 0; a < b.x_bar.size(); ++a) {
            Matrix score = log_policy_grad(b.x_bar[a], b.x[a], b.sigma_pi2);
            upstream[a] = Matrix(score.rows(), score.cols());
            for (std::size_t n = 0; n < score.rows(); ++n)
                for (std::size_t c = 0; c < score.cols(); ++c)
                    upstream[a](n, c) = -weight * r[n] * score(n, c);
        }
        return detail::encoder_grad_from_upstream(cfg, params, b, upstream);
    };

    out.mean_grad = compute(batch, rewards, 1.0 / static_cast<double>(batch.size()));
    if (retain_per_sample) {
        detail::retain_per_sample(
            cfg, params, batch, cfg.encoder->total_params(),
            [&](const SampleBatch& one, std::size_t n) {
                const double r[1] = {rewards[n]};
                return compute(one, r, 1.0);
            },
            out);
    }
    return out;
}

inline GradEstimate grad_spg(const SystemConfig& cfg, const SystemParams& params,
                             const SampleBatch& batch, bool retain_per_sample = false) {
    return grad_spg(cfg, params, batch, batch.rewards, retain_per_sample);
}

// Surrogate objective -(1/N) sum ln p(x_i|x_bar_i) * r_i with rewards as
// constants; its parameter gradient is grad_spg by construction.
inline double surrogate_objective(const SystemConfig& cfg, const SampleBatch& batch,
                                  std::span<const double> rewards) {
    if (batch.sigma_pi2 <= 0.0)
        throw TrainingError("surrogate_objective: requires a stochastic policy");
    if (rewards.size() != batch.size())
        throw ConfigError("surrogate_objective: reward count mismatch");
    double total = 0.0;
    for (std::size_t n = 0; n < batch.size(); ++n) {
        double lp = 0.0;
        for (std::size_t a = 0; a < batch.x_bar.size(); ++a)
            lp += log_policy_density(batch.x_bar[a].row(n), batch.x[a].row(n),
                                     batch.sigma_pi2);
        total += lp * rewards[n];
    }
    return -total / static_cast<double>(batch.size());
}

inline double surrogate_objective(const SystemConfig& cfg, const SampleBatch& batch) {
    return surrogate_objective(cfg, batch, batch.rewards);
}

// Monte Carlo mutual-information lower-bound estimate: the raw expectation
// (1/N) sum ln q(z_i|y_i), and raw + H[z] when the label prior is known.
struct MilboEstimate {
    double raw = 0.0;
    std::optional<double> with_prior_entropy;
};

inline double prior_entropy(std::span<const double> prior) {
    double h = 0.0;
    for (double p : prior)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

inline MilboEstimate milbo_estimate(const SampleBatch& batch,
                                    std::span<const double> prior = {}) {
    MilboEstimate out;
    double s = 0.0;
    for (double r : batch.rewards) s += r;
    out.raw = s / static_cast<double>(batch.rewards.size());
    if (!prior.empty()) out.with_prior_entropy = out.raw + prior_entropy(prior);
    return out;
}

}  // namespace semcom
