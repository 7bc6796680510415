#ifndef AMSELAB_TRAINING_DATASET_HPP
#define AMSELAB_TRAINING_DATASET_HPP

#include "amselab/channel/correlation.hpp"
#include "amselab/channel/sampler.hpp"
#include "amselab/util/parallel.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace amselab {

// Sub-seed streams derived from the master seed.
inline constexpr std::uint64_t kChannelStream = 0;
inline constexpr std::uint64_t kNoiseStream = 1;
inline constexpr std::uint64_t kSnrStream = 2;

/// Per-frame SNR: a fixed value, or uniform in [min_db, max_db] when mixed.
struct SnrPolicy {
    double fixed_db = 20.0;
    bool mixed = false;
    double min_db = 0.0;
    double max_db = 35.0;

    void validate() const {
        if (!std::isfinite(fixed_db)) throw ConfigError("snr policy: fixed SNR must be finite");
        if (mixed && !(min_db <= max_db)) throw ConfigError("snr policy: min_db must not exceed max_db");
    }

    double snr_for(std::uint64_t seed, std::uint64_t frame) const {
        if (!mixed) return fixed_db;
        std::mt19937_64 rng(derive_seed(seed, frame, kSnrStream));
        return std::uniform_real_distribution<double>(min_db, max_db)(rng);
    }
};

struct FrameRecord {
    CMatrix h;  // N×M
    CVector yp;  // L
    double snr_db = 0.0;
    std::uint64_t index = 0;
};

/// Pilot layout description sufficient to rebuild the PilotPattern.
struct PilotLayout {
    std::vector<int> symbols{2, 11};
    int comb = 2;
    int offset = 0;

    PilotPattern build(const GridSpec& grid) const { return build_pilot_pattern(grid, symbols, comb, offset); }
};

struct Dataset {
    GridSpec grid;
    PilotLayout layout;
    ScenarioConfig scenario;
    std::uint64_t seed = 0;
    std::vector<FrameRecord> frames;

    std::size_t size() const { return frames.size(); }
    PilotPattern pattern() const { return layout.build(grid); }
};

/// Frames 0..count−1, each drawn from the drifted covariance of its index
/// with its own sub-seeds, so any frame can be regenerated in isolation.
inline Dataset generate_dataset(const ScenarioConfig& scenario, const GridSpec& grid, const PilotLayout& layout,
                                std::size_t count, const SnrPolicy& snr, std::uint64_t seed, unsigned threads = 1) {
    if (count < 1) throw ConfigError("generate_dataset: frame count must be >= 1");
    scenario.validate();
    grid.validate();
    snr.validate();
    const PilotPattern pattern = layout.build(grid);
    const std::vector<EffectiveChannelParams> trajectory = drift_trajectory(scenario, count);
    Dataset ds{grid, layout, scenario, seed, std::vector<FrameRecord>(count)};
    parallel_for(count, threads, [&](std::size_t k) {
        const SeparableCovariance cov = scenario_covariance(scenario, grid, trajectory[k]);
        FrameRecord& f = ds.frames[k];
        f.index = k;
        f.snr_db = snr.snr_for(seed, k);
        f.h = ChannelSampler(cov).draw(derive_seed(seed, k, kChannelStream));
        f.yp = observe_pilots(f.h, pattern, f.snr_db, derive_seed(seed, k, kNoiseStream)).yp;
    });
    return ds;
}

/// Same channels, fresh noise at a new SNR. The noise stream is keyed by the
/// SNR so every estimator sees identical observations.
inline std::vector<FrameRecord> reobserve(const std::vector<FrameRecord>& frames, const PilotPattern& pattern,
                                          double snr_db, std::uint64_t seed, unsigned threads = 1) {
    std::vector<FrameRecord> out(frames.size());
    const auto snr_key = static_cast<std::uint64_t>(std::llround(snr_db * 1000.0));
    parallel_for(frames.size(), threads, [&](std::size_t i) {
        out[i].h = frames[i].h;
        out[i].index = frames[i].index;
        out[i].snr_db = snr_db;
        out[i].yp = observe_pilots(frames[i].h, pattern, snr_db,
                                   derive_seed(seed ^ detail::splitmix64(snr_key), frames[i].index, kNoiseStream))
                        .yp;
    });
    return out;
}

struct SplitFractions {
    double train = 36.0 / 44.0;
    double validation = 4.0 / 44.0;
    double test = 4.0 / 44.0;
};

struct DatasetSplit {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Contiguous, order-preserving split: earliest frames train, then
/// validation, then test. Sizes are round(fraction · count).
inline DatasetSplit temporal_split(const Dataset& ds, const SplitFractions& f) {
    if (!(f.train > 0.0) || !(f.validation > 0.0) || !(f.test > 0.0))
        throw ConfigError("temporal_split: fractions must be positive");
    if (f.train + f.validation + f.test > 1.0 + 1e-12) throw ConfigError("temporal_split: fractions sum above 1");
    // Boundaries are rounded cumulatively so the parts never overlap or overrun.
    const double n = static_cast<double>(ds.size());
    auto bound = [&](double frac) { return std::min(ds.size(), static_cast<std::size_t>(std::llround(frac * n))); };
    const std::size_t b1 = bound(f.train), b2 = bound(f.train + f.validation),
                      b3 = bound(f.train + f.validation + f.test);
    const std::size_t n_train = b1, n_val = b2 - b1, n_test = b3 - b2;
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw ConfigError("temporal_split: a split of " + std::to_string(ds.size()) + " frames would be empty");
    auto slice = [&](std::size_t lo, std::size_t count) {
        Dataset out{ds.grid, ds.layout, ds.scenario, ds.seed, {}};
        out.frames.assign(ds.frames.begin() + static_cast<std::ptrdiff_t>(lo),
                          ds.frames.begin() + static_cast<std::ptrdiff_t>(lo + count));
        return out;
    };
    return {slice(0, n_train), slice(n_train, n_val), slice(n_train + n_val, n_test)};
}

}  // namespace amselab

#endif  // AMSELAB_TRAINING_DATASET_HPP
