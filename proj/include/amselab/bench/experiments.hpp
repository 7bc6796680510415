#ifndef AMSELAB_BENCH_EXPERIMENTS_HPP
#define AMSELAB_BENCH_EXPERIMENTS_HPP

#include "amselab/ammse/flops.hpp"
#include "amselab/bench/sweep.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace amselab {

/// Average true pilot covariances over the frames of a (drifting) split.
inline PilotCovariances average_true_covariances(const ScenarioConfig& scenario, const GridSpec& grid,
                                                 const PilotPattern& pattern, const std::vector<FrameRecord>& frames) {
    if (frames.empty()) throw ConfigError("average_true_covariances: no frames");
    std::uint64_t last = 0;
    for (const FrameRecord& f : frames) last = std::max(last, f.index);
    const std::vector<EffectiveChannelParams> traj = drift_trajectory(scenario, last + 1);
    PilotCovariances acc{CMatrix::Zero(Index{grid.subcarriers} * grid.symbols, pattern.size()),
                         CMatrix::Zero(pattern.size(), pattern.size())};
    for (const FrameRecord& f : frames) {
        const PilotCovariances pc = pilot_covariances(scenario_covariance(scenario, grid, traj[f.index]), pattern);
        acc.cross += pc.cross;
        acc.pp += pc.pp;
    }
    acc.cross /= static_cast<double>(frames.size());
    acc.pp /= static_cast<double>(frames.size());
    return acc;
}

struct DriftReport {
    SweepResult sweep;
    double snr_db = 0.0;
    double mismatch_penalty = 0.0;  // Δ_mis of the sample-covariance filter on the test split
    double reduction_vs_mismatched = 0.0;  // 1 − NMSE(A-MMSE)/NMSE(mismatched LMMSE)
};

/// Evaluates on the temporally later test split: the per-frame oracle, the
/// LMMSE built from train-split sample covariances, LS, and the A-MMSE filter
/// trained on the same corpus.
inline DriftReport drift_experiment(const DatasetSplit& split, const AmmseFilter& ammse, double snr_db,
                                    std::uint64_t seed, unsigned threads = 1) {
    const Dataset& train = split.train;
    const PilotPattern pattern = train.pattern();
    std::vector<CMatrix> hs;
    hs.reserve(train.frames.size());
    for (const FrameRecord& f : train.frames) hs.push_back(f.h);
    const SampleCovariance sc = sample_covariance(hs, pattern);

    std::uint64_t last = 0;
    for (const FrameRecord& f : split.test.frames) last = std::max(last, f.index);
    const std::vector<Estimator> ests{
        ls_bilinear_estimator(pattern),
        per_frame_oracle_estimator(train.scenario, train.grid, pattern, last + 1),
        lmmse_estimator("lmmse-mismatched", sc.covariances(), pattern, Provenance::mismatched),
        filter_estimator("ammse", ammse),
    };
    DriftReport rep;
    rep.snr_db = snr_db;
    rep.sweep = snr_sweep(ests, split.test.frames, pattern, {snr_db}, seed, threads);
    rep.sweep.scenario = train.scenario.name;

    const double s2 = noise_variance(snr_db);
    const PilotCovariances truth = average_true_covariances(train.scenario, train.grid, pattern, split.test.frames);
    const LmmseFilter w_star = lmmse_filter(truth, s2);
    const LmmseFilter w_mis = lmmse_filter(sc.covariances(), s2, Provenance::mismatched);
    CMatrix sigma = truth.pp;
    sigma.diagonal().array() += s2;
    rep.mismatch_penalty = mismatch_penalty(w_mis.w, w_star.w, sigma);
    rep.reduction_vs_mismatched =
        1.0 - rep.sweep.row("ammse", snr_db).nmse / rep.sweep.row("lmmse-mismatched", snr_db).nmse;
    return rep;
}

struct TradeoffPoint {
    std::string estimator;
    std::uint64_t flops = 0;
    double mean_nmse = 0.0;
    std::string reported_flops;  // reported table value, empty if none
};

/// Pairs each swept estimator with its per-inference FLOPs; estimators with
/// no entry in `flops_by_tag` are skipped.
inline std::vector<TradeoffPoint> tradeoff_report(const SweepResult& sweep,
                                                  const std::map<std::string, std::uint64_t>& flops_by_tag,
                                                  const std::map<std::string, std::string>& reported = {}) {
    std::vector<TradeoffPoint> out;
    std::vector<std::string> order;
    for (const SweepRow& r : sweep.rows)
        if (std::find(order.begin(), order.end(), r.estimator) == order.end()) order.push_back(r.estimator);
    for (const std::string& tag : order) {
        const auto it = flops_by_tag.find(tag);
        if (it == flops_by_tag.end()) continue;
        if (it->second == 0) throw ConfigError("tradeoff_report: zero FLOPs for " + tag);
        double sum = 0.0;
        int count = 0;
        for (const SweepRow& r : sweep.rows)
            if (r.estimator == tag) {
                sum += r.nmse;
                ++count;
            }
        const auto rep = reported.find(tag);
        out.push_back({tag, it->second, sum / count, rep == reported.end() ? "" : rep->second});
    }
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_BENCH_EXPERIMENTS_HPP
