#ifndef AMSELAB_CHANNEL_SCENARIO_HPP
#define AMSELAB_CHANNEL_SCENARIO_HPP

#include "amselab/numerics/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace amselab {

inline constexpr double kSpeedOfLight = 3.0e8;

/// Maximum Doppler shift f_D = v·f_c/c.
inline double doppler_frequency(double velocity_mps, double carrier_hz) {
    if (velocity_mps < 0.0) throw ConfigError("doppler: negative velocity");
    if (!(carrier_hz > 0.0)) throw ConfigError("doppler: carrier frequency must be positive");
    return velocity_mps * carrier_hz / kSpeedOfLight;
}

inline double kmh_to_mps(double kmh) { return kmh / 3.6; }

/// Non-stationary modulation of the delay spread and Doppler over frames:
/// scale(k) = 1 + amplitude·sin(2πk/period) + walk(k), where walk is an
/// optional Gaussian random walk with per-frame step `walk_step`.
struct DriftParams {
    double delay_amplitude = 0.0;
    double doppler_amplitude = 0.0;
    double period_frames = 1000.0;
    double walk_step = 0.0;
    std::uint64_t walk_seed = 0;

    bool stationary() const { return delay_amplitude == 0.0 && doppler_amplitude == 0.0 && walk_step == 0.0; }

    void validate() const {
        for (double v : {delay_amplitude, doppler_amplitude, period_frames, walk_step})
            if (!std::isfinite(v)) throw ConfigError("drift: parameters must be finite");
        if (!(period_frames > 0.0)) throw ConfigError("drift: period must be positive");
        if (walk_step < 0.0) throw ConfigError("drift: walk step must be non-negative");
    }
};

struct ScenarioConfig {
    std::string name = "semi-urban";
    double carrier_hz = 3.5e9;
    double delay_spread_s = 1000e-9;
    double subcarrier_spacing_hz = 30e3;
    double velocity_mps = kmh_to_mps(40.0);
    double k_factor_db = 3.0;
    DriftParams drift;

    double max_doppler_hz() const { return doppler_frequency(velocity_mps, carrier_hz); }

    void validate() const {
        if (!(carrier_hz > 0.0) || !(subcarrier_spacing_hz > 0.0))
            throw ConfigError("scenario: carrier and subcarrier spacing must be positive");
        if (delay_spread_s < 0.0 || velocity_mps < 0.0)
            throw ConfigError("scenario: delay spread and velocity must be non-negative");
        if (!std::isfinite(k_factor_db)) throw ConfigError("scenario: K-factor must be finite");
        drift.validate();
    }
};

/// Table presets (carrier, delay spread, SCS, speed, K-factor).
inline ScenarioConfig semi_urban_scenario() { return ScenarioConfig{}; }

inline ScenarioConfig high_speed_rail_scenario() {
    ScenarioConfig s;
    s.name = "hsr";
    s.carrier_hz = 5e9;
    s.delay_spread_s = 100e-9;
    s.subcarrier_spacing_hz = 60e3;
    s.velocity_mps = kmh_to_mps(350.0);
    s.k_factor_db = 13.0;
    return s;
}

inline ScenarioConfig scenario_preset(const std::string& name) {
    if (name == "semi-urban" || name == "su") return semi_urban_scenario();
    if (name == "hsr" || name == "high-speed-rail") return high_speed_rail_scenario();
    throw ConfigError("unknown scenario preset '" + name + "' (expected semi-urban or hsr)");
}

struct EffectiveChannelParams {
    double delay_spread_s = 0.0;
    double doppler_hz = 0.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Independent sub-seed for (master seed, frame index, stream).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0) {
    return detail::splitmix64(detail::splitmix64(master ^ detail::splitmix64(stream + 0x51ED270B27A3ull)) + index);
}

/// Random-walk offset after `frame` steps. Each step is a standard normal
/// drawn from its own sub-seed, so the value depends only on (seed, frame).
inline double drift_walk(const DriftParams& d, std::uint64_t frame) {
    if (d.walk_step == 0.0) return 0.0;
    double acc = 0.0;
    for (std::uint64_t i = 0; i < frame; ++i) {
        std::mt19937_64 rng(derive_seed(d.walk_seed, i, 7));
        acc += std::normal_distribution<double>(0.0, d.walk_step)(rng);
    }
    return acc;
}

/// Multiplicative drift factors for (delay spread, Doppler) at a frame.
inline std::pair<double, double> drift_scales(const DriftParams& d, std::uint64_t frame, double walk = 0.0) {
    const double phase = std::sin(2.0 * std::numbers::pi * static_cast<double>(frame) / d.period_frames);
    const double delay = 1.0 + d.delay_amplitude * phase + walk;
    const double doppler = 1.0 + d.doppler_amplitude * phase + walk;
    return {std::max(delay, 0.0), std::max(doppler, 0.0)};
}

/// Effective (τ_rms, f_D) for a frame. Frame 0 returns the nominal values.
inline EffectiveChannelParams apply_drift(const ScenarioConfig& s, std::uint64_t frame) {
    s.drift.validate();
    const auto [ds, fs] = drift_scales(s.drift, frame, drift_walk(s.drift, frame));
    return {s.delay_spread_s * ds, s.max_doppler_hz() * fs};
}

/// apply_drift for frames [0, count), computing the random walk incrementally.
inline std::vector<EffectiveChannelParams> drift_trajectory(const ScenarioConfig& s, std::uint64_t count) {
    s.drift.validate();
    std::vector<EffectiveChannelParams> out;
    out.reserve(count);
    double walk = 0.0;
    for (std::uint64_t k = 0; k < count; ++k) {
        const auto [ds, fs] = drift_scales(s.drift, k, walk);
        out.push_back({s.delay_spread_s * ds, s.max_doppler_hz() * fs});
        if (s.drift.walk_step != 0.0) {
            std::mt19937_64 rng(derive_seed(s.drift.walk_seed, k, 7));
            walk += std::normal_distribution<double>(0.0, s.drift.walk_step)(rng);
        }
    }
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_CHANNEL_SCENARIO_HPP
