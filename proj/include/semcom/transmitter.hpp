#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/matrix.hpp"
#include "semcom/nn.hpp"
#include "semcom/rng.hpp"

namespace semcom {

enum class NormMode { kDim, kBatch };

// Per-agent encoder: a dense feature network whose final linear layer has
// width n_tx, followed by power normalization. All agents share one MlpSpec;
// their parameter vectors are stored concatenated agent-major.
struct EncoderConfig {
    MlpSpec spec;
    int n_agents = 1;
    int n_tx = 2;
    NormMode norm_mode = NormMode::kDim;

    std::size_t params_per_agent() const { return spec.param_count(); }
    std::size_t total_params() const {
        return params_per_agent() * static_cast<std::size_t>(n_agents);
    }
    std::span<const double> agent_params(std::span<const double> all, int agent) const {
        return all.subspan(static_cast<std::size_t>(agent) * params_per_agent(),
                           params_per_agent());
    }
    std::span<double> agent_params(std::span<double> all, int agent) const {
        return all.subspan(static_cast<std::size_t>(agent) * params_per_agent(),
                           params_per_agent());
    }

    void validate() const {
        spec.validate();
        if (n_agents < 1) throw ConfigError("EncoderConfig: n_agents must be >= 1");
        if (n_tx < 1) throw ConfigError("EncoderConfig: n_tx must be >= 1");
        if (spec.output_width() != static_cast<std::size_t>(n_tx))
            throw ConfigError("EncoderConfig: final layer width must equal n_tx");
        if (spec.activations.back() != Activation::kLinear)
            throw ConfigError("EncoderConfig: final activation must be linear");
    }
};

// Gaussian exploration policy p(x|x_bar) = N(sqrt(1-var)*x_bar, var*I).
// var = 0 is the deterministic policy.
struct PolicyConfig {
    double exploration_variance = 0.0;

    bool deterministic() const { return exploration_variance == 0.0; }

    void validate() const {
        if (exploration_variance < 0.0 || exploration_variance >= 1.0)
            throw ConfigError("PolicyConfig: exploration variance must lie in [0, 1)");
    }
};

// ── power normalization ─────────────────────────────────────────────────────

struct NormCache {
    NormMode mode = NormMode::kDim;
    std::size_t n_tx = 0;
    std::vector<double> row_norm;  // dim mode: per-row ||v||
    double batch_scale = 1.0;      // batch mode: common scale s
    double batch_sumsq = 0.0;
};

constexpr double kNormFloor = 1e-12;

// Scale encoder outputs to average per-symbol power 1: dim mode makes every
// row satisfy ||x_bar||^2 = n_tx; batch mode applies one scale so the batch
// mean of ||x_bar||^2 / n_tx is 1. Zero inputs are handled by the 1e-12
// denominator floor rather than an error.
inline Matrix normalize_power(const Matrix& raw, NormMode mode, NormCache* cache = nullptr) {
    const std::size_t n_tx = raw.cols();
    const double root_n = std::sqrt(static_cast<double>(n_tx));
    Matrix out(raw.rows(), n_tx);
    if (cache) {
        cache->mode = mode;
        cache->n_tx = n_tx;
        cache->row_norm.clear();
    }
    if (mode == NormMode::kDim) {
        for (std::size_t r = 0; r < raw.rows(); ++r) {
            const double norm = std::sqrt(squared_norm(raw.row(r)));
            const double scale = root_n / (norm + kNormFloor);
            for (std::size_t c = 0; c < n_tx; ++c) out(r, c) = scale * raw(r, c);
            if (cache) cache->row_norm.push_back(norm);
        }
    } else {
        double sumsq = 0.0;
        for (std::size_t r = 0; r < raw.rows(); ++r) sumsq += squared_norm(raw.row(r));
        const double n_total = static_cast<double>(raw.rows() * n_tx);
        const double scale = std::sqrt(n_total / (sumsq + kNormFloor));
        for (std::size_t r = 0; r < raw.rows(); ++r)
            for (std::size_t c = 0; c < n_tx; ++c) out(r, c) = scale * raw(r, c);
        if (cache) {
            cache->batch_scale = scale;
            cache->batch_sumsq = sumsq;
        }
    }
    return out;
}

// dL/d(raw) given dL/d(x_bar).
inline Matrix normalize_power_backward(const Matrix& raw, const NormCache& cache,
                                       const Matrix& upstream) {
    const std::size_t n_tx = cache.n_tx;
    const double root_n = std::sqrt(static_cast<double>(n_tx));
    Matrix out(raw.rows(), n_tx);
    if (cache.mode == NormMode::kDim) {
        for (std::size_t r = 0; r < raw.rows(); ++r) {
            const double norm = cache.row_norm[r];
            const double denom = norm + kNormFloor;
            const double c1 = root_n / denom;
            const double uv = dot(upstream.row(r), raw.row(r));
            for (std::size_t c = 0; c < n_tx; ++c) {
                double g = c1 * upstream(r, c);
                if (norm > 0.0)
                    g -= root_n * uv * raw(r, c) / (denom * denom * norm);
                out(r, c) = g;
            }
        }
    } else {
        const double s = cache.batch_scale;
        const double n_total = static_cast<double>(raw.rows() * n_tx);
        double uv = 0.0;
        for (std::size_t r = 0; r < raw.rows(); ++r)
            uv += dot(upstream.row(r), raw.row(r));
        // ds/dv_j = -s^3 v_j / n_total
        const double coeff = -s * s * s * uv / n_total;
        for (std::size_t r = 0; r < raw.rows(); ++r)
            for (std::size_t c = 0; c < n_tx; ++c)
                out(r, c) = s * upstream(r, c) + coeff * raw(r, c);
    }
    return out;
}

// ── encoder pipeline (feature net + normalization) ──────────────────────────

struct EncodeCache {
    std::vector<ForwardCache> net;   // per agent
    std::vector<Matrix> raw;         // per agent, pre-normalization
    std::vector<NormCache> norm;     // per agent
};

// x_bar per agent from the agent observations.
inline std::vector<Matrix> encode_and_normalize(const EncoderConfig& cfg,
                                                std::span<const double> params,
                                                const std::vector<Matrix>& agent_parts,
                                                EncodeCache* cache = nullptr) {
    if (agent_parts.size() != static_cast<std::size_t>(cfg.n_agents))
        throw ConfigError("encode: agent count mismatch");
    std::vector<Matrix> x_bar(agent_parts.size());
    if (cache) {
        cache->net.assign(agent_parts.size(), {});
        cache->raw.assign(agent_parts.size(), {});
        cache->norm.assign(agent_parts.size(), {});
    }
    for (int a = 0; a < cfg.n_agents; ++a) {
        const auto ai = static_cast<std::size_t>(a);
        Matrix raw = mlp_forward(cfg.spec, cfg.agent_params(params, a), agent_parts[ai],
                                 cache ? &cache->net[ai] : nullptr);
        x_bar[ai] = normalize_power(raw, cfg.norm_mode, cache ? &cache->norm[ai] : nullptr);
        if (cache) cache->raw[ai] = std::move(raw);
    }
    return x_bar;
}

// Chain dL/d(x_bar) per agent back to the flat encoder parameter vector.
inline void encoder_backward(const EncoderConfig& cfg, std::span<const double> params,
                             const EncodeCache& cache,
                             const std::vector<Matrix>& upstream_x_bar,
                             std::span<double> param_grad) {
    if (param_grad.size() != cfg.total_params())
        throw ConfigError("encoder_backward: param_grad has wrong length");
    for (int a = 0; a < cfg.n_agents; ++a) {
        const auto ai = static_cast<std::size_t>(a);
        Matrix up_raw =
            normalize_power_backward(cache.raw[ai], cache.norm[ai], upstream_x_bar[ai]);
        mlp_backward(cfg.spec, cfg.agent_params(params, a), cache.net[ai], up_raw,
                     param_grad.subspan(ai * cfg.params_per_agent(),
                                        cfg.params_per_agent()));
    }
}

// ── Gaussian policy ─────────────────────────────────────────────────────────

struct PolicySample {
    Matrix x;    // transmitted symbols
    Matrix eps;  // recorded exploration noise (zero when deterministic)
};

// x = sqrt(1 - var) * x_bar + sqrt(var) * eps. The mean scaling keeps
// E[||x||^2] equal to the pre-sample power. var = 0 returns x_bar bitwise
// and consumes no randomness.
inline PolicySample sample_policy(const Matrix& x_bar, double exploration_variance,
                                  Rng& rng) {
    PolicyConfig{exploration_variance}.validate();
    PolicySample out;
    out.eps = Matrix(x_bar.rows(), x_bar.cols());
    if (exploration_variance == 0.0) {
        out.x = x_bar;
        return out;
    }
    const double a = std::sqrt(1.0 - exploration_variance);
    const double b = std::sqrt(exploration_variance);
    out.x = Matrix(x_bar.rows(), x_bar.cols());
    for (std::size_t r = 0; r < x_bar.rows(); ++r)
        for (std::size_t c = 0; c < x_bar.cols(); ++c) {
            const double e = rng.gaussian();
            out.eps(r, c) = e;
            out.x(r, c) = a * x_bar(r, c) + b * e;
        }
    return out;
}

// Replay of the policy map with recorded noise; used by gradient oracles.
inline Matrix policy_replay(const Matrix& x_bar, const Matrix& eps,
                            double exploration_variance) {
    if (exploration_variance == 0.0) return x_bar;
    const double a = std::sqrt(1.0 - exploration_variance);
    const double b = std::sqrt(exploration_variance);
    Matrix x(x_bar.rows(), x_bar.cols());
    for (std::size_t r = 0; r < x_bar.rows(); ++r)
        for (std::size_t c = 0; c < x_bar.cols(); ++c)
            x(r, c) = a * x_bar(r, c) + b * eps(r, c);
    return x;
}

// d ln p(x|x_bar) / d x_bar = sqrt(1-var) * (x - sqrt(1-var) x_bar) / var.
inline Matrix log_policy_grad(const Matrix& x_bar, const Matrix& x,
                              double exploration_variance) {
    if (exploration_variance <= 0.0)
        throw TrainingError("log_policy_grad: deterministic policy has no score function");
    const double a = std::sqrt(1.0 - exploration_variance);
    Matrix g(x_bar.rows(), x_bar.cols());
    for (std::size_t r = 0; r < x_bar.rows(); ++r)
        for (std::size_t c = 0; c < x_bar.cols(); ++c)
            g(r, c) = a * (x(r, c) - a * x_bar(r, c)) / exploration_variance;
    return g;
}

// ln N(x; sqrt(1-var) x_bar, var I) for one sample row.
inline double log_policy_density(std::span<const double> x_bar, std::span<const double> x,
                                 double exploration_variance) {
    if (exploration_variance <= 0.0)
        throw TrainingError("log_policy_density: deterministic policy has no density");
    const double a = std::sqrt(1.0 - exploration_variance);
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - a * x_bar[i];
        d2 += diff * diff;
    }
    const double n = static_cast<double>(x.size());
    return -0.5 * n * std::log(2.0 * std::numbers::pi * exploration_variance) -
           d2 / (2.0 * exploration_variance);
}

}  // namespace semcom
