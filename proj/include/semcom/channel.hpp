#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/matrix.hpp"
#include "semcom/rng.hpp"

namespace semcom {

// AWGN channel p(y|x) with SNR either fixed or drawn uniformly in dB.
// snr = 1 / noise variance; receive dimension equals transmit dimension.
struct ChannelConfig {
    enum class SnrMode { kFixed, kUniform };
    SnrMode mode = SnrMode::kFixed;
    double snr_db = 0.0;      // fixed mode
    double snr_db_lo = -4.0;  // uniform mode
    double snr_db_hi = 6.0;

    static ChannelConfig fixed(double db) {
        ChannelConfig c;
        c.mode = SnrMode::kFixed;
        c.snr_db = db;
        return c;
    }
    static ChannelConfig uniform(double lo_db, double hi_db) {
        ChannelConfig c;
        c.mode = SnrMode::kUniform;
        c.snr_db_lo = lo_db;
        c.snr_db_hi = hi_db;
        return c;
    }

    void validate() const {
        if (mode == SnrMode::kUniform && snr_db_lo > snr_db_hi)
            throw ConfigError("ChannelConfig: snr_db_lo must be <= snr_db_hi");
    }
};

inline double snr_to_noise_variance(double snr_db) {
    return std::pow(10.0, -snr_db / 10.0);
}

// One channel pass; noise and per-sample variances are recorded so the
// mapping y = x + sqrt(var) * eps can be replayed exactly.
struct ChannelDraw {
    Matrix y;
    Matrix eps;
    std::vector<double> noise_var;  // one entry per batch row
};

// SNR is drawn once per batch element (uniform mode); each call is one
// physical link, so per-agent calls draw independently.
inline ChannelDraw transmit(const Matrix& x, const ChannelConfig& cfg, Rng& rng) {
    cfg.validate();
    ChannelDraw out;
    out.y = Matrix(x.rows(), x.cols());
    out.eps = Matrix(x.rows(), x.cols());
    out.noise_var.resize(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double db = cfg.mode == ChannelConfig::SnrMode::kFixed
                              ? cfg.snr_db
                              : rng.uniform_range(cfg.snr_db_lo, cfg.snr_db_hi);
        const double var = snr_to_noise_variance(db);
        out.noise_var[r] = var;
        const double sd = std::sqrt(var);
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double e = rng.gaussian();
            out.eps(r, c) = e;
            out.y(r, c) = x(r, c) + sd * e;
        }
    }
    return out;
}

inline Matrix channel_replay(const Matrix& x, const Matrix& eps,
                             const std::vector<double>& noise_var) {
    Matrix y(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double sd = std::sqrt(noise_var[r]);
        for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = x(r, c) + sd * eps(r, c);
    }
    return y;
}

// d ln p(y|x_bar) / d x_bar = (y - x_bar) / noise_var, the channel score used
// by the model-aware REINFORCE estimator (deterministic encoder case).
inline Matrix log_channel_grad(const Matrix& x_bar, const Matrix& y,
                               const std::vector<double>& noise_var) {
    Matrix g(x_bar.rows(), x_bar.cols());
    for (std::size_t r = 0; r < x_bar.rows(); ++r) {
        if (noise_var[r] <= 0.0)
            throw TrainingError("log_channel_grad: noise variance must be > 0");
        for (std::size_t c = 0; c < x_bar.cols(); ++c)
            g(r, c) = (y(r, c) - x_bar(r, c)) / noise_var[r];
    }
    return g;
}

}  // namespace semcom
