#ifndef AMSELAB_TRAINING_TRAINER_HPP
#define AMSELAB_TRAINING_TRAINER_HPP

#include "amselab/ammse/graph.hpp"
#include "amselab/numerics/adam.hpp"
#include "amselab/numerics/losses.hpp"
#include "amselab/training/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace amselab {

/// Huber threshold: δ = clamp(10^{−snr/20}, 0.01, 1) or a fixed value.
struct HuberDeltaPolicy {
    bool fixed = false;
    double value = 0.1;
};

inline double huber_delta(double snr_db, const HuberDeltaPolicy& policy = {}) {
    if (policy.fixed) {
        if (!(policy.value > 0.0)) throw ConfigError("huber delta: fixed value must be positive");
        return policy.value;
    }
    return std::clamp(std::pow(10.0, -snr_db / 20.0), 0.01, 1.0);
}

enum class LrSchedule { constant, cosine };

inline std::string to_string(LrSchedule s) { return s == LrSchedule::constant ? "constant" : "cosine"; }

inline LrSchedule parse_lr_schedule(const std::string& s) {
    if (s == "constant") return LrSchedule::constant;
    if (s == "cosine") return LrSchedule::cosine;
    throw ConfigError("unknown learning-rate schedule '" + s + "' (expected constant or cosine)");
}

struct TrainConfig {
    int epochs = 15;
    int batch_size = 32;
    AdamHyper adam{3e-3, 0.9, 0.999, 1e-8};
    LrSchedule schedule = LrSchedule::cosine;
    LossKind loss = LossKind::huber;
    HuberDeltaPolicy delta;
    std::uint64_t seed = 7;
    int patience = 10;          // epochs without validation improvement; 0 disables
    int checkpoint_every = 0;   // epochs between checkpoint callbacks; 0 disables
    int joint_rank = 0;         // > 0 trains a rank adapter jointly with the network
    std::size_t monitor_frames = 512;  // strided training frames forming the monitored fixed filter

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
        if (!(adam.learning_rate > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
            !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0))
            throw ConfigError("train: invalid Adam hyper-parameters");
        if (monitor_frames < 1) throw ConfigError("train: monitor_frames must be >= 1");
        if (patience < 0 || checkpoint_every < 0 || joint_rank < 0)
            throw ConfigError("train: patience, checkpoint cadence and joint rank must be non-negative");
    }

    /// Step size for a (0-based) global step out of `total` steps.
    double learning_rate_at(std::int64_t step, std::int64_t total) const {
        if (schedule == LrSchedule::constant || total <= 0) return adam.learning_rate;
        const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
        return 0.5 * adam.learning_rate * (1.0 + std::cos(std::numbers::pi * t));
    }
};

/// Training state: current parameters and optimizer, the best-validation
/// parameters so far, and per-epoch histories.
struct Checkpoint {
    AmmseConfig network;
    NetworkParams params;
    std::optional<RankAdapter> adapter;  // jointly trained adapter, if any
    AdamState adam;
    int epoch = 0;  // completed epochs
    std::vector<double> train_loss;
    std::vector<double> validation_nmse;
    NetworkParams best_params;
    std::optional<RankAdapter> best_adapter;
    int best_epoch = 0;
    double best_validation_nmse = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;
};

struct TrainingDiverged : NumericalError {
    TrainingDiverged(const std::string& what, Checkpoint last) : NumericalError(what), last_finite(std::move(last)) {}
    Checkpoint last_finite;
};

struct EpochReport {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_nmse = 0.0;
    bool improved = false;
};

struct TrainHooks {
    std::function<void(const EpochReport&)> on_epoch;
    std::function<void(const Checkpoint&)> on_checkpoint;
};

namespace detail {

inline Matrix stack_inputs(const std::vector<FrameRecord>& frames, const std::vector<std::size_t>& idx) {
    require_shape(!idx.empty(), "stack_inputs: empty batch");
    const Index l = frames[idx.front()].yp.size();
    Matrix x(static_cast<Index>(idx.size()), 2 * l);
    for (std::size_t b = 0; b < idx.size(); ++b) x.row(static_cast<Index>(b)) = linalg::real_stack(frames[idx[b]].yp).transpose();
    return x;
}

/// Rows [2b, 2b+1] = [Re vec(H_b); Im vec(H_b)].
inline Matrix stack_targets(const std::vector<FrameRecord>& frames, const std::vector<std::size_t>& idx) {
    const Index nm = frames[idx.front()].h.size();
    Matrix t(2 * static_cast<Index>(idx.size()), nm);
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const CVector v = linalg::vec(frames[idx[b]].h);
        t.row(2 * static_cast<Index>(b)) = v.real().transpose();
        t.row(2 * static_cast<Index>(b) + 1) = v.imag().transpose();
    }
    return t;
}

inline double batch_delta(const std::vector<FrameRecord>& frames, const std::vector<std::size_t>& idx,
                          const HuberDeltaPolicy& policy) {
    double snr = 0.0;
    for (std::size_t i : idx) snr += frames[i].snr_db;
    return huber_delta(snr / static_cast<double>(idx.size()), policy);
}

}  // namespace detail

struct StepResult {
    double loss = 0.0;
    std::vector<Matrix> gradients;  // network tensors, then U and V when an adapter is present
};

/// Loss and gradients of one mini-batch: x_in → W_i, Ĥ_i = unvec(W_i·Y_p,i),
/// loss averaged over the batch and all 2·N·M real components.
inline StepResult batch_loss_and_gradients(const NetworkParams& params, const RankAdapter* adapter,
                                           const AmmseConfig& cfg, const std::vector<FrameRecord>& frames,
                                           const std::vector<std::size_t>& idx, LossKind kind,
                                           const HuberDeltaPolicy& policy) {
    ad::Tape tape;
    const GraphParams g = bind_params(tape, params, true);
    ad::Var y = forward_graph(tape, g, cfg, detail::stack_inputs(frames, idx));
    ad::Var u, v;
    if (adapter != nullptr) {
        u = tape.variable(adapter->u);
        v = tape.variable(adapter->v);
        y = adapt_rows(y, u, v);
    }
    std::vector<Matrix> coeffs;
    for (std::size_t i : idx) coeffs.push_back(estimate_coefficients(frames[i].yp));
    const ad::Var h_hat = ad::block_left_multiply(coeffs, y);
    const ad::Var l = ad::loss(h_hat, detail::stack_targets(frames, idx), kind, detail::batch_delta(frames, idx, policy));
    tape.backward(l);
    StepResult r{tape.value(l)(0, 0), {}};
    for (ad::Var p : g.all) r.gradients.push_back(tape.grad(p));
    if (adapter != nullptr) {
        r.gradients.push_back(tape.grad(u));
        r.gradients.push_back(tape.grad(v));
    }
    return r;
}

/// Per-frame network filters W_i for a list of frames, in chunks.
inline std::vector<CMatrix> network_filters(const NetworkParams& params, const RankAdapter* adapter,
                                            const AmmseConfig& cfg, const std::vector<FrameRecord>& frames,
                                            std::size_t chunk = 64) {
    std::vector<CMatrix> out;
    out.reserve(frames.size());
    for (std::size_t lo = 0; lo < frames.size(); lo += chunk) {
        std::vector<std::size_t> idx(std::min(chunk, frames.size() - lo));
        std::iota(idx.begin(), idx.end(), lo);
        for (const Matrix& y : forward_batch(params, cfg, detail::stack_inputs(frames, idx))) {
            CMatrix w = assemble_filter(y, cfg.subcarriers, cfg.symbols).w;
            if (adapter != nullptr) w = w * (adapter->u * adapter->v.transpose()).cast<cdouble>();
            out.push_back(std::move(w));
        }
    }
    return out;
}

/// At most `count` frames taken at an even stride across the whole list.
inline std::vector<FrameRecord> strided_subset(const std::vector<FrameRecord>& frames, std::size_t count) {
    if (count == 0) throw ConfigError("strided_subset: count must be >= 1");
    if (frames.size() <= count) return frames;
    std::vector<FrameRecord> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back(frames[k * frames.size() / count]);
    return out;
}

/// One fixed filter: the entrywise mean of the per-frame network outputs.
inline AmmseFilter extract_filter(const NetworkParams& params, const AmmseConfig& cfg,
                                  const std::vector<FrameRecord>& calibration, const RankAdapter* adapter = nullptr) {
    if (calibration.empty()) throw ConfigError("extract_filter: no calibration frames");
    const std::vector<CMatrix> ws = network_filters(params, adapter, cfg, calibration);
    CMatrix mean = CMatrix::Zero(ws.front().rows(), ws.front().cols());
    for (const CMatrix& w : ws) mean += w;
    mean /= static_cast<double>(ws.size());
    AmmseFilter f;
    f.w = std::move(mean);
    f.subcarriers = cfg.subcarriers;
    f.symbols = cfg.symbols;
    return f;
}

inline AmmseFilter extract_filter(const Checkpoint& c, const std::vector<FrameRecord>& calibration) {
    return extract_filter(c.best_params, c.network, calibration, c.best_adapter ? &*c.best_adapter : nullptr);
}

/// Ratio-of-sums NMSE of a fixed filter over frames.
inline double fixed_filter_nmse(const CMatrix& w, const std::vector<FrameRecord>& frames) {
    double num = 0.0, den = 0.0;
    for (const FrameRecord& f : frames) {
        const CVector v = linalg::vec(f.h);
        num += (w * f.yp - v).squaredNorm();
        den += v.squaredNorm();
    }
    if (!(den > 0.0)) throw ConfigError("fixed_filter_nmse: zero channel energy");
    return num / den;
}

inline Checkpoint initial_checkpoint(const AmmseConfig& cfg, const TrainConfig& tc) {
    Checkpoint c;
    c.network = cfg;
    c.params = init_params(cfg);
    if (tc.joint_rank > 0) {
        if (tc.joint_rank > cfg.pilots) throw ConfigError("train: joint rank exceeds L");
        Matrix basis = Matrix::Identity(cfg.pilots, tc.joint_rank);
        c.adapter = RankAdapter{basis, basis};
    }
    c.adam = AdamState(tc.adam);
    c.best_params = c.params;
    c.best_adapter = c.adapter;
    return c;
}

/// Adam training on mini-batch estimation losses with early stopping on the
/// validation NMSE of the fixed filter extracted from a strided subset of the
/// training frames. Continuing from a
/// checkpoint reproduces the uninterrupted trajectory exactly.
inline Checkpoint train(const Dataset& train_set, const Dataset& validation, const AmmseConfig& cfg,
                        const TrainConfig& tc, std::optional<Checkpoint> resume = std::nullopt,
                        const TrainHooks& hooks = {}) {
    tc.validate();
    cfg.validate();
    if (train_set.frames.empty()) throw ConfigError("train: empty training set");
    if (validation.frames.empty()) throw ConfigError("train: empty validation set");
    const PilotPattern pattern = train_set.pattern();
    require_shape(pattern.size() == cfg.pilots && train_set.grid.subcarriers == cfg.subcarriers &&
                      train_set.grid.symbols == cfg.symbols,
                  "train: dataset grid/pilots do not match the network configuration");

    Checkpoint c = resume ? std::move(*resume) : initial_checkpoint(cfg, tc);
    check_param_shapes(c.params, cfg);
    const std::vector<FrameRecord> calibration = strided_subset(train_set.frames, tc.monitor_frames);
    const std::size_t n = train_set.frames.size();
    const std::size_t batch = static_cast<std::size_t>(tc.batch_size);
    const std::int64_t steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
    const std::int64_t total_steps = steps_per_epoch * tc.epochs;

    while (c.epoch < tc.epochs) {
        if (tc.patience > 0 && c.epochs_since_best >= tc.patience) break;
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(derive_seed(tc.seed, static_cast<std::uint64_t>(c.epoch), 11));
        std::shuffle(order.begin(), order.end(), rng);

        const Checkpoint before = c;
        double loss_sum = 0.0;
        std::int64_t batches = 0;
        for (std::size_t lo = 0; lo < n; lo += batch) {
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                               order.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + batch)));
            RankAdapter* adapter = c.adapter ? &*c.adapter : nullptr;
            StepResult r = batch_loss_and_gradients(c.params, adapter, cfg, train_set.frames, idx, tc.loss, tc.delta);
            bool finite = std::isfinite(r.loss);
            for (const Matrix& gm : r.gradients) finite = finite && gm.allFinite();
            if (!finite)
                throw TrainingDiverged("train: non-finite loss or gradient at epoch " + std::to_string(c.epoch + 1) +
                                           ", batch " + std::to_string(batches + 1),
                                       before);
            std::vector<Matrix*> ptrs = c.params.tensors();
            if (adapter != nullptr) {
                ptrs.push_back(&adapter->u);
                ptrs.push_back(&adapter->v);
            }
            c.adam.hyper.learning_rate = tc.learning_rate_at(c.adam.step, total_steps);
            adam_step(ptrs, r.gradients, c.adam);
            loss_sum += r.loss;
            ++batches;
        }
        if (!c.params.finite()) throw TrainingDiverged("train: parameters became non-finite", before);

        const double train_loss = loss_sum / static_cast<double>(batches);
        const AmmseFilter f = extract_filter(c.params, cfg, calibration, c.adapter ? &*c.adapter : nullptr);
        const double val = fixed_filter_nmse(f.w, validation.frames);
        if (!std::isfinite(val)) throw TrainingDiverged("train: non-finite validation NMSE", before);
        ++c.epoch;
        c.train_loss.push_back(train_loss);
        c.validation_nmse.push_back(val);
        const bool improved = val < c.best_validation_nmse;
        if (improved) {
            c.best_validation_nmse = val;
            c.best_epoch = c.epoch;
            c.best_params = c.params;
            c.best_adapter = c.adapter;
            c.epochs_since_best = 0;
        } else {
            ++c.epochs_since_best;
        }
        if (hooks.on_epoch) hooks.on_epoch({c.epoch, train_loss, val, improved});
        if (hooks.on_checkpoint && tc.checkpoint_every > 0 && c.epoch % tc.checkpoint_every == 0)
            hooks.on_checkpoint(c);
    }
    return c;
}

}  // namespace amselab

#endif  // AMSELAB_TRAINING_TRAINER_HPP
