#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/matrix.hpp"
#include "semcom/rng.hpp"

namespace semcom {

enum class Activation { kRelu, kLinear, kSoftmax };

inline std::string activation_name(Activation a) {
    switch (a) {
        case Activation::kRelu: return "relu";
        case Activation::kLinear: return "linear";
        case Activation::kSoftmax: return "softmax";
    }
    return "?";
}

// Dense network spec: input width plus one (out_width, activation) pair per
// layer. Each layer owns an (in+1) x out weight block; the bias is the last
// row, applied to a constant-1 input, so parameters stay one flat vector.
struct MlpSpec {
    std::size_t input_width = 0;
    std::vector<std::size_t> layer_widths;
    std::vector<Activation> activations;

    std::size_t layer_count() const { return layer_widths.size(); }
    std::size_t output_width() const { return layer_widths.back(); }

    std::size_t layer_in(std::size_t l) const {
        return l == 0 ? input_width : layer_widths[l - 1];
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < layer_count(); ++l)
            n += (layer_in(l) + 1) * layer_widths[l];
        return n;
    }

    std::size_t layer_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) off += (layer_in(l) + 1) * layer_widths[l];
        return off;
    }

    void validate() const {
        if (input_width == 0) throw ConfigError("MlpSpec: input_width must be positive");
        if (layer_widths.empty()) throw ConfigError("MlpSpec: at least one layer required");
        if (layer_widths.size() != activations.size())
            throw ConfigError("MlpSpec: one activation per layer required");
        for (std::size_t l = 0; l < layer_count(); ++l) {
            if (layer_widths[l] == 0)
                throw ConfigError("MlpSpec: zero-width layer " + std::to_string(l));
            if (activations[l] == Activation::kSoftmax && l + 1 != layer_count())
                throw ConfigError("MlpSpec: softmax only permitted as final activation");
        }
    }
};

// Per-layer post-activation values; activations[0] is the input batch.
struct ForwardCache {
    std::vector<Matrix> activations;
};

namespace detail {

inline void apply_softmax_rows(Matrix& z) {
    for (std::size_t n = 0; n < z.rows(); ++n) {
        auto row = z.row(n);
        double mx = row[0];
        for (double v : row) mx = std::max(mx, v);
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

}  // namespace detail

// Forward pass over a batch (rows = samples), recording per-layer activations
// when `cache` is given.
inline Matrix mlp_forward(const MlpSpec& spec, std::span<const double> params,
                          const Matrix& input, ForwardCache* cache = nullptr) {
    if (input.cols() != spec.input_width)
        throw ConfigError("mlp_forward: input width " + std::to_string(input.cols()) +
                          " does not match spec input width " +
                          std::to_string(spec.input_width));
    if (params.size() != spec.param_count())
        throw ConfigError("mlp_forward: parameter vector has wrong length");

    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(input);
    }
    Matrix a = input;
    const std::size_t batch = input.rows();
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const std::size_t in_w = spec.layer_in(l);
        const std::size_t out_w = spec.layer_widths[l];
        const double* w = params.data() + spec.layer_offset(l);
        Matrix z(batch, out_w);
        for (std::size_t n = 0; n < batch; ++n) {
            const double* an = a.row(n).data();
            double* zn = z.row(n).data();
            // bias row first, then accumulate weights (ikj order)
            const double* bias = w + in_w * out_w;
            for (std::size_t j = 0; j < out_w; ++j) zn[j] = bias[j];
            for (std::size_t i = 0; i < in_w; ++i) {
                const double ai = an[i];
                if (ai == 0.0) continue;
                const double* wi = w + i * out_w;
                for (std::size_t j = 0; j < out_w; ++j) zn[j] += ai * wi[j];
            }
        }
        switch (spec.activations[l]) {
            case Activation::kRelu:
                for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
                break;
            case Activation::kLinear:
                break;
            case Activation::kSoftmax:
                detail::apply_softmax_rows(z);
                break;
        }
        a = std::move(z);
        if (cache) cache->activations.push_back(a);
    }
    return a;
}

// Exact reverse-mode pass. `upstream` is dL/d(output); fills dL/d(params)
// into `param_grad` (overwritten) and returns dL/d(input).
//
// Conventions: relu derivative at 0 is 0; softmax rows are differentiated
// through the full Jacobian, so any upstream is admissible.
inline Matrix mlp_backward(const MlpSpec& spec, std::span<const double> params,
                           const ForwardCache& cache, const Matrix& upstream,
                           std::span<double> param_grad) {
    if (cache.activations.size() != spec.layer_count() + 1)
        throw ConfigError("mlp_backward: cache does not match spec");
    if (upstream.rows() != cache.activations.back().rows() ||
        upstream.cols() != spec.output_width())
        throw ConfigError("mlp_backward: upstream gradient shape mismatch");
    if (param_grad.size() != spec.param_count())
        throw ConfigError("mlp_backward: param_grad has wrong length");

    std::fill(param_grad.begin(), param_grad.end(), 0.0);
    const std::size_t batch = upstream.rows();
    Matrix u = upstream;
    for (std::size_t li = spec.layer_count(); li-- > 0;) {
        const std::size_t in_w = spec.layer_in(li);
        const std::size_t out_w = spec.layer_widths[li];
        const double* w = params.data() + spec.layer_offset(li);
        double* gw = param_grad.data() + spec.layer_offset(li);
        const Matrix& a_in = cache.activations[li];
        const Matrix& a_out = cache.activations[li + 1];

        // dL/dz from dL/da
        Matrix g(batch, out_w);
        switch (spec.activations[li]) {
            case Activation::kRelu:
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t j = 0; j < out_w; ++j)
                        g(n, j) = a_out(n, j) > 0.0 ? u(n, j) : 0.0;
                break;
            case Activation::kLinear:
                g = u;
                break;
            case Activation::kSoftmax:
                for (std::size_t n = 0; n < batch; ++n) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < out_w; ++k) s += u(n, k) * a_out(n, k);
                    for (std::size_t j = 0; j < out_w; ++j)
                        g(n, j) = a_out(n, j) * (u(n, j) - s);
                }
                break;
        }

        // weight and bias gradients
        for (std::size_t n = 0; n < batch; ++n) {
            const double* an = a_in.row(n).data();
            const double* gn = g.row(n).data();
            for (std::size_t i = 0; i < in_w; ++i) {
                const double ai = an[i];
                if (ai == 0.0) continue;
                double* gwi = gw + i * out_w;
                for (std::size_t j = 0; j < out_w; ++j) gwi[j] += ai * gn[j];
            }
            double* gb = gw + in_w * out_w;
            for (std::size_t j = 0; j < out_w; ++j) gb[j] += gn[j];
        }

        // propagate to layer input
        Matrix u_prev(batch, in_w);
        for (std::size_t n = 0; n < batch; ++n) {
            const double* gn = g.row(n).data();
            double* un = u_prev.row(n).data();
            for (std::size_t i = 0; i < in_w; ++i) {
                const double* wi = w + i * out_w;
                double s = 0.0;
                for (std::size_t j = 0; j < out_w; ++j) s += wi[j] * gn[j];
                un[i] = s;
            }
        }
        u = std::move(u_prev);
    }
    return u;
}

// He-style init for relu layers, 1/sqrt(fan_in) otherwise; biases start at 0.
inline std::vector<double> init_params(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<double> p(spec.param_count());
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const std::size_t in_w = spec.layer_in(l);
        const std::size_t out_w = spec.layer_widths[l];
        const double scale = spec.activations[l] == Activation::kRelu
                               ? std::sqrt(2.0 / static_cast<double>(in_w))
                               : std::sqrt(1.0 / static_cast<double>(in_w));
        double* w = p.data() + spec.layer_offset(l);
        for (std::size_t i = 0; i < in_w * out_w; ++i) w[i] = scale * rng.gaussian();
        // bias row stays zero
    }
    return p;
}

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;

    void validate() const {
        if (learning_rate <= 0.0) throw ConfigError("Adam: learning_rate must be > 0");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw ConfigError("Adam: betas must lie in [0, 1)");
        if (epsilon <= 0.0) throw ConfigError("Adam: epsilon must be > 0");
        if (weight_decay < 0.0) throw ConfigError("Adam: weight_decay must be >= 0");
    }
};

struct AdamState {
    AdamConfig config;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step_count = 0;

    AdamState() = default;
    AdamState(std::size_t dim, const AdamConfig& cfg)
        : config(cfg), first_moment(dim, 0.0), second_moment(dim, 0.0) {
        config.validate();
    }
};

// One Adam update. The L2 term enters as weight_decay * params added to the
// gradient before the moment update.
inline void adam_step(std::span<double> params, std::span<const double> grad,
                      AdamState& state) {
    if (params.size() != grad.size() || params.size() != state.first_moment.size())
        throw ConfigError("adam_step: shape mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i]))
            throw TrainingError("adam_step: non-finite gradient at coordinate " +
                                std::to_string(i) + " (value " + std::to_string(grad[i]) +
                                ")");

    const AdamConfig& c = state.config;
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] + c.weight_decay * params[i];
        state.first_moment[i] = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g;
        state.second_moment[i] =
            c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = state.first_moment[i] / bc1;
        const double v_hat = state.second_moment[i] / bc2;
        params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

}  // namespace semcom
