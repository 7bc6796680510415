#ifndef AMSELAB_CHANNEL_SAMPLER_HPP
#define AMSELAB_CHANNEL_SAMPLER_HPP

#include "amselab/channel/correlation.hpp"

#include <cstdint>
#include <random>
#include <utility>

namespace amselab {

inline constexpr double kSqrtRegularization = 1e-10;

/// One N×M frequency-response grid.
struct ChannelFrame {
    CMatrix h;
    std::uint64_t index = 0;
    EffectiveChannelParams params;
};

/// Received pilots Y_p and their real-stacked form x_in = [Re(Y_p); Im(Y_p)].
struct PilotObservation {
    CVector yp;
    Vector x_in;
    double snr_db = 0.0;

    static PilotObservation from_pilots(CVector yp, double snr_db) {
        Vector x = linalg::real_stack(yp);
        return {std::move(yp), std::move(x), snr_db};
    }
};

/// Hermitian square root with a single diagonal-regularized retry.
inline CMatrix covariance_sqrt(const CMatrix& r) {
    try {
        return linalg::hermitian_sqrt(r);
    } catch (const NumericalError&) {
        CMatrix reg = r;
        reg.diagonal().array() += kSqrtRegularization;
        return linalg::hermitian_sqrt(reg);
    }
}

/// Standard circular complex Gaussian matrix, CN(0, 1) entries filled
/// column by column.
inline CMatrix complex_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    CMatrix out(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) {
            const double re = g(rng);
            const double im = g(rng);
            out(i, j) = cdouble(re, im);
        }
    return out;
}

/// Draws H = R_f^{1/2} G (R_t^{1/2})ᵀ. Square roots are computed once.
class ChannelSampler {
public:
    explicit ChannelSampler(const SeparableCovariance& cov)
        : rf_sqrt_(covariance_sqrt(cov.rf)), rt_sqrt_t_(covariance_sqrt(cov.rt).transpose()) {}

    CMatrix draw(std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        const CMatrix g = complex_gaussian(rf_sqrt_.rows(), rt_sqrt_t_.rows(), rng);
        return rf_sqrt_ * g * rt_sqrt_t_;
    }

private:
    CMatrix rf_sqrt_;
    CMatrix rt_sqrt_t_;
};

inline ChannelFrame sample_channel(const SeparableCovariance& cov, std::uint64_t seed) {
    return {ChannelSampler(cov).draw(seed), 0, {}};
}

/// Y_p[i] = H[𝒫_i]·X[𝒫_i] + Z_i with unit pilots and Z_i ~ CN(0, 10^{−snr/10}).
inline PilotObservation observe_pilots(const CMatrix& h, const PilotPattern& pattern, double snr_db,
                                       std::uint64_t seed) {
    require_shape(h.rows() == pattern.subcarriers() && h.cols() == pattern.symbols(),
                  "observe_pilots: channel " + shape_of(h) + " does not match pattern grid");
    std::mt19937_64 rng(seed);
    const double sigma = std::sqrt(noise_variance(snr_db) / 2.0);
    std::normal_distribution<double> g(0.0, 1.0);
    CVector yp(pattern.size());
    for (int i = 0; i < pattern.size(); ++i) {
        const PilotPosition& p = pattern[i];
        const double re = g(rng);
        const double im = g(rng);
        yp(i) = h(p.subcarrier, p.symbol) + sigma * cdouble(re, im);
    }
    return PilotObservation::from_pilots(std::move(yp), snr_db);
}

/// Pilot entries of H in pattern order (the noiseless Y_p).
inline CVector pilot_values(const CMatrix& h, const PilotPattern& pattern) {
    CVector out(pattern.size());
    for (int i = 0; i < pattern.size(); ++i) out(i) = h(pattern[i].subcarrier, pattern[i].symbol);
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_CHANNEL_SAMPLER_HPP
