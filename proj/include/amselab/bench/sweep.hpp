#ifndef AMSELAB_BENCH_SWEEP_HPP
#define AMSELAB_BENCH_SWEEP_HPP

#include "amselab/ammse/filter.hpp"
#include "amselab/classical/interpolation.hpp"
#include "amselab/classical/lmmse.hpp"
#include "amselab/classical/oned_lmmse.hpp"
#include "amselab/training/dataset.hpp"
#include "amselab/util/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace amselab {

/// ‖H − Ĥ‖²_F / ‖H‖²_F.
inline double nmse(const CMatrix& estimate, const CMatrix& h) {
    require_shape(estimate.rows() == h.rows() && estimate.cols() == h.cols(),
                  "nmse: estimate " + shape_of(estimate) + " vs channel " + shape_of(h));
    const double den = h.squaredNorm();
    if (!(den > 0.0)) throw ConfigError("nmse: channel has zero energy");
    return (h - estimate).squaredNorm() / den;
}

/// Per-frame estimator prepared for one SNR point.
using FrameEstimator = std::function<CMatrix(const FrameRecord&)>;

/// An estimator: a tag plus a factory that builds the per-frame map for an SNR.
struct Estimator {
    std::string tag;
    std::function<FrameEstimator(double snr_db)> prepare;
};

struct SweepRow {
    std::string estimator;
    double snr_db = 0.0;
    double nmse = 0.0;             // ratio of sums over frames
    double nmse_mean_ratio = 0.0;  // mean of per-frame ratios
    double std_error = 0.0;        // standard error of the per-frame ratios
    std::uint64_t frames = 0;
};

struct SweepResult {
    std::string scenario;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<SweepRow> rows;

    const SweepRow& row(const std::string& estimator, double snr_db) const {
        for (const SweepRow& r : rows)
            if (r.estimator == estimator && r.snr_db == snr_db) return r;
        throw ConfigError("sweep result: no row for " + estimator + " at " + std::to_string(snr_db) + " dB");
    }
};

/// Frame-level reduction; the per-frame values are stored by index so the
/// result does not depend on thread count or scheduling.
inline SweepRow evaluate_frames(const std::string& tag, double snr_db, const FrameEstimator& est,
                                const std::vector<FrameRecord>& frames, unsigned threads = 1) {
    if (frames.empty()) throw ConfigError("evaluate_frames: no frames");
    std::vector<double> num(frames.size()), den(frames.size());
    parallel_for(frames.size(), threads, [&](std::size_t i) {
        const CMatrix e = est(frames[i]);
        require_shape(e.rows() == frames[i].h.rows() && e.cols() == frames[i].h.cols(),
                      "evaluate_frames: estimator " + tag + " returned " + shape_of(e));
        num[i] = (frames[i].h - e).squaredNorm();
        den[i] = frames[i].h.squaredNorm();
    });
    double sn = 0.0, sd = 0.0, sr = 0.0, sr2 = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!(den[i] > 0.0)) throw ConfigError("evaluate_frames: zero-energy channel frame");
        const double r = num[i] / den[i];
        sn += num[i];
        sd += den[i];
        sr += r;
        sr2 += r * r;
    }
    const double n = static_cast<double>(frames.size());
    const double mean = sr / n;
    const double var = n > 1.0 ? std::max(0.0, (sr2 - n * mean * mean) / (n - 1.0)) : 0.0;
    return {tag, snr_db, sn / sd, mean, std::sqrt(var / n), static_cast<std::uint64_t>(frames.size())};
}

/// Every estimator at every SNR. Noise is redrawn per SNR from the same
/// channel frames, so all estimators share realizations at each point.
inline SweepResult snr_sweep(const std::vector<Estimator>& estimators, const std::vector<FrameRecord>& channels,
                             const PilotPattern& pattern, const std::vector<double>& snr_grid, std::uint64_t seed,
                             unsigned threads = 1) {
    if (estimators.empty()) throw ConfigError("snr_sweep: no estimators");
    if (snr_grid.empty()) throw ConfigError("snr_sweep: empty SNR grid");
    SweepResult out;
    out.seed = seed;
    for (double snr : snr_grid) {
        const std::vector<FrameRecord> frames = reobserve(channels, pattern, snr, seed, threads);
        for (const Estimator& e : estimators) out.rows.push_back(evaluate_frames(e.tag, snr, e.prepare(snr), frames, threads));
    }
    return out;
}

// Standard estimators.

inline Estimator ls_bilinear_estimator(const PilotPattern& pattern) {
    return {"ls", [pattern](double) -> FrameEstimator {
                return [pattern](const FrameRecord& f) {
                    return bilinear_interpolate(ls_estimate(f.yp, CVector::Ones(f.yp.size())), pattern);
                };
            }};
}

/// LMMSE with a covariance fixed in advance (oracle on stationary channels,
/// or mismatched when built from sample covariances) and the true σ².
inline Estimator lmmse_estimator(std::string tag, const PilotCovariances& pc, const PilotPattern& pattern,
                                 Provenance provenance) {
    return {std::move(tag), [pc, pattern, provenance](double snr) -> FrameEstimator {
                auto f = std::make_shared<LmmseFilter>(lmmse_filter(pc, noise_variance(snr), provenance));
                return [f, pattern](const FrameRecord& r) {
                    return apply_filter(f->w, r.yp, pattern.subcarriers(), pattern.symbols());
                };
            }};
}

/// Oracle LMMSE that uses each frame's own (possibly drifted) covariance.
inline Estimator per_frame_oracle_estimator(const ScenarioConfig& scenario, const GridSpec& grid,
                                            const PilotPattern& pattern, std::size_t frame_count) {
    if (scenario.drift.stationary())
        return lmmse_estimator("lmmse-oracle", pilot_covariances(scenario_covariance(scenario, grid), pattern), pattern,
                               Provenance::oracle);
    auto trajectory = std::make_shared<std::vector<EffectiveChannelParams>>(drift_trajectory(scenario, frame_count));
    return {"lmmse-oracle", [=](double snr) -> FrameEstimator {
                return [=](const FrameRecord& r) {
                    if (r.index >= trajectory->size()) throw ConfigError("oracle estimator: frame index beyond trajectory");
                    const SeparableCovariance cov = scenario_covariance(scenario, grid, (*trajectory)[r.index]);
                    const LmmseFilter f = lmmse_filter(pilot_covariances(cov, pattern), noise_variance(snr));
                    return apply_filter(f.w, r.yp, pattern.subcarriers(), pattern.symbols());
                };
            }};
}

inline Estimator oned_lmmse_estimator(const CMatrix& rf, const PilotPattern& pattern) {
    return {"1d-lmmse", [rf, pattern](double snr) -> FrameEstimator {
                auto f = std::make_shared<OneDLmmse>(rf, noise_variance(snr), pattern);
                return [f](const FrameRecord& r) { return f->estimate(ls_estimate(r.yp, CVector::Ones(r.yp.size()))); };
            }};
}

/// A fixed exported filter, the same at every SNR.
inline Estimator filter_estimator(std::string tag, const AmmseFilter& filter) {
    auto f = std::make_shared<AmmseFilter>(filter);
    return {std::move(tag), [f](double) -> FrameEstimator {
                return [f](const FrameRecord& r) { return estimate(*f, r.yp); };
            }};
}

/// Checkpoint evaluation across an SNR grid relative to the oracle.
struct RobustnessEntry {
    std::string tag;
    double train_snr_db = 0.0;
    double worst_nmse = 0.0;
    double worst_nmse_snr_db = 0.0;
    double worst_regret = 0.0;  // max over SNR of NMSE / NMSE_oracle
    double worst_regret_snr_db = 0.0;
};

struct RobustnessReport {
    SweepResult sweep;
    std::vector<RobustnessEntry> entries;
};

/// Each fixed-SNR filter evaluated at every grid SNR next to the oracle LMMSE.
inline RobustnessReport mismatch_robustness(const std::vector<std::pair<double, AmmseFilter>>& filters,
                                            const Estimator& oracle, const std::vector<FrameRecord>& channels,
                                            const PilotPattern& pattern, const std::vector<double>& snr_grid,
                                            std::uint64_t seed, unsigned threads = 1) {
    if (filters.size() < 2) throw ConfigError("mismatch_robustness: need at least two checkpoints");
    std::vector<Estimator> ests{oracle};
    for (const auto& [snr, f] : filters) ests.push_back(filter_estimator("ammse@" + std::to_string(static_cast<int>(std::lround(snr))) + "dB", f));
    RobustnessReport rep{snr_sweep(ests, channels, pattern, snr_grid, seed, threads), {}};
    for (std::size_t k = 0; k < filters.size(); ++k) {
        RobustnessEntry e{ests[k + 1].tag, filters[k].first, 0.0, 0.0, 0.0, 0.0};
        for (double snr : snr_grid) {
            const double v = rep.sweep.row(e.tag, snr).nmse;
            const double regret = v / rep.sweep.row(oracle.tag, snr).nmse;
            if (v > e.worst_nmse) {
                e.worst_nmse = v;
                e.worst_nmse_snr_db = snr;
            }
            if (regret > e.worst_regret) {
                e.worst_regret = regret;
                e.worst_regret_snr_db = snr;
            }
        }
        rep.entries.push_back(e);
    }
    return rep;
}

}  // namespace amselab

#endif  // AMSELAB_BENCH_SWEEP_HPP
