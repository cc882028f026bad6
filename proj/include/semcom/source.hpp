#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/matrix.hpp"
#include "semcom/rng.hpp"

namespace semcom {

// Hidden semantic label: one of n_class classes, one-hot encodable.
struct SemanticLabel {
    int class_index = 0;

    std::vector<double> one_hot(int n_class) const {
        std::vector<double> v(static_cast<std::size_t>(n_class), 0.0);
        v[static_cast<std::size_t>(class_index)] = 1.0;
        return v;
    }
};

// Gaussian-mixture semantic channel: class k emits its mean plus isotropic
// noise. Observations split into n_agents contiguous equal blocks.
struct GmSourceSpec {
    int n_class = 4;
    int obs_dim = 4;
    int n_agents = 4;
    Matrix class_means;  // n_class x obs_dim
    double class_std = 0.5;
    std::vector<double> class_prior;

    int part_width() const { return obs_dim / n_agents; }

    void validate() const {
        if (n_class < 2) throw ConfigError("GmSourceSpec: n_class must be >= 2");
        if (obs_dim < 1) throw ConfigError("GmSourceSpec: obs_dim must be >= 1");
        if (n_agents < 1 || obs_dim % n_agents != 0)
            throw ConfigError("GmSourceSpec: n_agents must divide obs_dim");
        if (class_means.rows() != static_cast<std::size_t>(n_class) ||
            class_means.cols() != static_cast<std::size_t>(obs_dim))
            throw ConfigError("GmSourceSpec: class_means must be n_class x obs_dim");
        if (class_std < 0.0) throw ConfigError("GmSourceSpec: class_std must be >= 0");
        if (class_prior.size() != static_cast<std::size_t>(n_class))
            throw ConfigError("GmSourceSpec: class_prior length must equal n_class");
        double sum = 0.0;
        for (double p : class_prior) {
            if (p < 0.0) throw ConfigError("GmSourceSpec: negative prior entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw ConfigError("GmSourceSpec: class_prior must sum to 1 within 1e-12");
    }

    // Desk-scale default: 4 classes at +-1 hypercube corners in 4 dims, one
    // dim per agent; dims d carry class bit (d mod 2), so every agent is
    // informative and no single agent resolves the class alone.
    static GmSourceSpec desk_default() {
        GmSourceSpec s;
        s.n_class = 4;
        s.obs_dim = 4;
        s.n_agents = 4;
        s.class_std = 0.5;
        s.class_prior.assign(4, 0.25);
        s.class_means = Matrix(4, 4);
        for (int k = 0; k < 4; ++k)
            for (int d = 0; d < 4; ++d)
                s.class_means(static_cast<std::size_t>(k), static_cast<std::size_t>(d)) =
                    ((k >> (d % 2)) & 1) ? 1.0 : -1.0;
        return s;
    }
};

// A sampled batch of (label, observation) pairs, observations pre-split into
// per-agent views. `full` keeps the agent-order concatenation.
struct LabeledBatch {
    std::vector<int> labels;
    Matrix full;                      // N x obs_dim
    std::vector<Matrix> agent_parts;  // per agent: N x part_width

    std::size_t size() const { return labels.size(); }

    LabeledBatch row_copy(std::size_t n) const {
        LabeledBatch b;
        b.labels = {labels[n]};
        b.full = full.row_copy(n);
        b.agent_parts.reserve(agent_parts.size());
        for (const Matrix& m : agent_parts) b.agent_parts.push_back(m.row_copy(n));
        return b;
    }
};

inline int sample_class(std::span<const double> prior, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < prior.size(); ++k) {
        acc += prior[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(prior.size()) - 1;
}

// Draw labels i.i.d. from the prior and observations from p(s|z).
inline LabeledBatch sample_joint(const GmSourceSpec& spec, std::size_t batch_size,
                                 Rng& rng) {
    spec.validate();
    if (batch_size < 1) throw ConfigError("sample_joint: batch_size must be >= 1");
    LabeledBatch out;
    out.labels.resize(batch_size);
    out.full = Matrix(batch_size, static_cast<std::size_t>(spec.obs_dim));
    for (std::size_t n = 0; n < batch_size; ++n) {
        const int z = sample_class(spec.class_prior, rng);
        out.labels[n] = z;
        for (int d = 0; d < spec.obs_dim; ++d)
            out.full(n, static_cast<std::size_t>(d)) =
                spec.class_means(static_cast<std::size_t>(z), static_cast<std::size_t>(d)) +
                spec.class_std * rng.gaussian();
    }
    const std::size_t w = static_cast<std::size_t>(spec.part_width());
    out.agent_parts.assign(static_cast<std::size_t>(spec.n_agents),
                           Matrix(batch_size, w));
    for (std::size_t n = 0; n < batch_size; ++n)
        for (int a = 0; a < spec.n_agents; ++a)
            for (std::size_t d = 0; d < w; ++d)
                out.agent_parts[static_cast<std::size_t>(a)](n, d) =
                    out.full(n, static_cast<std::size_t>(a) * w + d);
    return out;
}

// Exact Bayes posterior for the identity-encoder pipeline
// y_eff = mean_scale * class_mean[z] + N(0, effective_variance * I).
// Stable under constant shifts of the squared distances (log-sum-exp form).
inline std::vector<double> gm_true_posterior(const GmSourceSpec& spec,
                                             std::span<const double> y_eff,
                                             double effective_variance,
                                             double mean_scale = 1.0) {
    if (effective_variance <= 0.0)
        throw ConfigError("gm_true_posterior: effective_variance must be > 0");
    if (y_eff.size() != static_cast<std::size_t>(spec.obs_dim))
        throw ConfigError("gm_true_posterior: y_eff width mismatch");
    const std::size_t K = static_cast<std::size_t>(spec.n_class);
    std::vector<double> log_post(K);
    double mx = -1e300;
    for (std::size_t k = 0; k < K; ++k) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < y_eff.size(); ++d) {
            const double diff = y_eff[d] - mean_scale * spec.class_means(k, d);
            d2 += diff * diff;
        }
        log_post[k] = std::log(std::max(spec.class_prior[k], 1e-300)) -
                      d2 / (2.0 * effective_variance);
        mx = std::max(mx, log_post[k]);
    }
    double sum = 0.0;
    for (double& lp : log_post) {
        lp = std::exp(lp - mx);
        sum += lp;
    }
    for (double& lp : log_post) lp /= sum;
    return log_post;
}

// Monte Carlo estimates of the oracle error rate / cross entropy when
// classifying z directly from s with the exact posterior.
struct GmOracleStats {
    double error_rate = 0.0;
    double ce_nats = 0.0;
};

inline GmOracleStats gm_bayes_oracle(const GmSourceSpec& spec, std::size_t n_samples,
                                     Rng& rng) {
    GmOracleStats st;
    std::size_t errors = 0;
    double ce = 0.0;
    const double var = spec.class_std * spec.class_std;
    LabeledBatch batch = sample_joint(spec, n_samples, rng);
    for (std::size_t n = 0; n < n_samples; ++n) {
        const auto post = gm_true_posterior(spec, batch.full.row(n), var);
        std::size_t best = 0;
        for (std::size_t k = 1; k < post.size(); ++k)
            if (post[k] > post[best]) best = k;
        if (static_cast<int>(best) != batch.labels[n]) ++errors;
        ce += -std::log(std::max(post[static_cast<std::size_t>(batch.labels[n])], 1e-30));
    }
    st.error_rate = static_cast<double>(errors) / static_cast<double>(n_samples);
    st.ce_nats = ce / static_cast<double>(n_samples);
    return st;
}

// ── image quadrant partitioning ─────────────────────────────────────────────

// Split a square image (row-major, even side) into quadrants ordered
// top-left, top-right, bottom-left, bottom-right; each part row-major.
inline std::vector<std::vector<double>> partition_quadrants(
    std::span<const double> image, std::size_t side) {
    if (side % 2 != 0)
        throw ConfigError("partition_quadrants: image side must be even");
    if (image.size() != side * side)
        throw ConfigError("partition_quadrants: image size does not match side");
    const std::size_t h = side / 2;
    std::vector<std::vector<double>> parts(4, std::vector<double>(h * h));
    for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t r0 = (q / 2) * h;
        const std::size_t c0 = (q % 2) * h;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < h; ++c)
                parts[q][r * h + c] = image[(r0 + r) * side + (c0 + c)];
    }
    return parts;
}

inline std::vector<double> reassemble_quadrants(
    const std::vector<std::vector<double>>& parts, std::size_t side) {
    const std::size_t h = side / 2;
    std::vector<double> image(side * side);
    for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t r0 = (q / 2) * h;
        const std::size_t c0 = (q % 2) * h;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < h; ++c)
                image[(r0 + r) * side + (c0 + c)] = parts[q][r * h + c];
    }
    return image;
}

}  // namespace semcom
