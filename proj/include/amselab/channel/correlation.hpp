#ifndef AMSELAB_CHANNEL_CORRELATION_HPP
#define AMSELAB_CHANNEL_CORRELATION_HPP

#include "amselab/channel/grid.hpp"
#include "amselab/channel/scenario.hpp"
#include "amselab/numerics/linalg.hpp"

#include <cmath>
#include <numbers>

namespace amselab {

/// r_f(Δn) for an exponential power-delay profile.
inline cdouble frequency_correlation(double delay_spread_s, double subcarrier_spacing_hz, int dn) {
    return 1.0 / cdouble(1.0, 2.0 * std::numbers::pi * subcarrier_spacing_hz * delay_spread_s * dn);
}

/// r_t(Δm): Jakes diffuse part plus a Rician line-of-sight Doppler tone.
inline cdouble temporal_correlation(double doppler_hz, double symbol_duration_s, double k_factor_db, int dm) {
    const double k = std::pow(10.0, k_factor_db / 10.0);
    const double x = 2.0 * std::numbers::pi * doppler_hz * symbol_duration_s * dm;
    const double diffuse = std::cyl_bessel_j(0.0, std::abs(x));
    return (k * std::polar(1.0, x) + diffuse) / (k + 1.0);
}

/// N×N Toeplitz matrix with (i, j) = r_f(i − j).
inline CMatrix build_frequency_correlation(double delay_spread_s, double subcarrier_spacing_hz, int n) {
    if (delay_spread_s < 0.0) throw ConfigError("frequency correlation: negative delay spread");
    if (n < 1) throw ConfigError("frequency correlation: size must be >= 1");
    CMatrix r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = frequency_correlation(delay_spread_s, subcarrier_spacing_hz, i - j);
    return r;
}

/// M×M Toeplitz matrix with (i, j) = r_t(i − j).
inline CMatrix build_temporal_correlation(double doppler_hz, double symbol_duration_s, int m, double k_factor_db) {
    if (doppler_hz < 0.0) throw ConfigError("temporal correlation: negative Doppler");
    if (m < 1) throw ConfigError("temporal correlation: size must be >= 1");
    CMatrix r(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) r(i, j) = temporal_correlation(doppler_hz, symbol_duration_s, k_factor_db, i - j);
    return r;
}

/// Second-order statistics of one frame: vec(H) ~ CN(0, R_t ⊗ R_f).
struct SeparableCovariance {
    CMatrix rf;  // N×N
    CMatrix rt;  // M×M
    double noise_var = 0.0;

    int subcarriers() const { return static_cast<int>(rf.rows()); }
    int symbols() const { return static_cast<int>(rt.rows()); }

    /// Covariance of column-major vec(H).
    CMatrix full() const { return linalg::kron(rt, rf); }

    /// Single entry of full() without forming it.
    cdouble entry(int row, int col) const {
        const int n = subcarriers();
        return rt(row / n, col / n) * rf(row % n, col % n);
    }
};

inline double noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

/// Covariance for a scenario at given effective (τ_rms, f_D).
inline SeparableCovariance scenario_covariance(const ScenarioConfig& s, const GridSpec& grid,
                                               const EffectiveChannelParams& eff, double noise_var = 0.0) {
    s.validate();
    grid.validate();
    return {build_frequency_correlation(eff.delay_spread_s, grid.subcarrier_spacing_hz, grid.subcarriers),
            build_temporal_correlation(eff.doppler_hz, grid.symbol_duration_s, grid.symbols, s.k_factor_db),
            noise_var};
}

inline SeparableCovariance scenario_covariance(const ScenarioConfig& s, const GridSpec& grid, double noise_var = 0.0) {
    return scenario_covariance(s, grid, EffectiveChannelParams{s.delay_spread_s, s.max_doppler_hz()}, noise_var);
}

/// Grid matching a scenario's numerology.
inline GridSpec scenario_grid(const ScenarioConfig& s, int subcarriers = 24, int symbols = 14) {
    return {subcarriers, symbols, s.subcarrier_spacing_hz, nr_symbol_duration(s.subcarrier_spacing_hz)};
}

/// (R_cross, R_pp) obtained by indexing the Kronecker structure.
struct PilotCovariances {
    CMatrix cross;  // NM×L
    CMatrix pp;     // L×L
};

inline PilotCovariances pilot_covariances(const SeparableCovariance& cov, const PilotPattern& pattern) {
    require_shape(pattern.subcarriers() == cov.subcarriers() && pattern.symbols() == cov.symbols(),
                  "pilot_covariances: pattern grid does not match covariance");
    const int nm = cov.subcarriers() * cov.symbols();
    const int l = pattern.size();
    const std::vector<int> idx = pattern.vec_indices();
    PilotCovariances out{CMatrix(nm, l), CMatrix(l, l)};
    for (int j = 0; j < l; ++j) {
        for (int i = 0; i < nm; ++i) out.cross(i, j) = cov.entry(i, idx[j]);
        for (int i = 0; i < l; ++i) out.pp(i, j) = cov.entry(idx[i], idx[j]);
    }
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_CHANNEL_CORRELATION_HPP
