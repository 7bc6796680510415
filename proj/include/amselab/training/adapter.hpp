#ifndef AMSELAB_TRAINING_ADAPTER_HPP
#define AMSELAB_TRAINING_ADAPTER_HPP

// Fine-tuning of the rank adapter (U_r, V_r) against a frozen fixed filter.

#include "amselab/ammse/filter.hpp"
#include "amselab/numerics/adam.hpp"
#include "amselab/numerics/losses.hpp"
#include "amselab/training/trainer.hpp"

#include <numeric>
#include <random>
#include <vector>

namespace amselab {

struct AdapterTrainConfig {
    int epochs = 30;
    int batch_size = 32;
    AdamHyper adam{3e-3, 0.9, 0.999, 1e-8};
    LrSchedule schedule = LrSchedule::cosine;
    LossKind loss = LossKind::huber;
    HuberDeltaPolicy delta;
    std::uint64_t seed = 13;

    void validate() const {
        if (epochs < 1 || batch_size < 1) throw ConfigError("adapter training: epochs and batch size must be >= 1");
        if (!(adam.learning_rate > 0.0)) throw ConfigError("adapter training: learning rate must be positive");
    }
};

struct AdapterGradient {
    double loss = 0.0;
    Matrix du;
    Matrix dv;
};

/// Loss of Ĥ_b = W·U·Vᵀ·Y_p,b over a batch and its gradients in U and V.
/// With Z = VᵀY and A = W·U (both split into real and imaginary parts):
///   Ĥ_r = A_r Z_r − A_i Z_i,  Ĥ_i = A_r Z_i + A_i Z_r.
inline AdapterGradient adapter_loss_and_gradients(const CMatrix& w, const RankAdapter& adapter,
                                                  const std::vector<FrameRecord>& frames,
                                                  const std::vector<std::size_t>& idx, LossKind kind, double delta) {
    adapter.validate(w.cols());
    const Index l = w.cols(), nm = w.rows(), b = static_cast<Index>(idx.size());
    Eigen::MatrixXd yr(l, b), yi(l, b), hr(nm, b), hi(nm, b);
    for (Index k = 0; k < b; ++k) {
        const FrameRecord& f = frames[idx[static_cast<std::size_t>(k)]];
        yr.col(k) = f.yp.real();
        yi.col(k) = f.yp.imag();
        const CVector v = linalg::vec(f.h);
        hr.col(k) = v.real();
        hi.col(k) = v.imag();
    }
    const Eigen::MatrixXd wr = w.real(), wi = w.imag();
    const Eigen::MatrixXd u = adapter.u, v = adapter.v;
    const Eigen::MatrixXd ar = wr * u, ai = wi * u;
    const Eigen::MatrixXd zr = v.transpose() * yr, zi = v.transpose() * yi;
    const Eigen::MatrixXd er = ar * zr - ai * zi, ei = ar * zi + ai * zr;

    // Stack residuals as a (2B × NM) real matrix so the loss convention
    // matches the network training loss.
    Matrix residual(2 * b, nm);
    for (Index k = 0; k < b; ++k) {
        residual.row(2 * k) = (er.col(k) - hr.col(k)).transpose();
        residual.row(2 * k + 1) = (ei.col(k) - hi.col(k)).transpose();
    }
    LossResult lr;
    if (kind == LossKind::huber) {
        lr = huber_loss(residual, delta);
    } else {
        lr = mse_loss(residual, Matrix::Zero(residual.rows(), residual.cols()));
    }
    Eigen::MatrixXd gr(nm, b), gi(nm, b);
    for (Index k = 0; k < b; ++k) {
        gr.col(k) = lr.gradient.row(2 * k).transpose();
        gi.col(k) = lr.gradient.row(2 * k + 1).transpose();
    }
    const Eigen::MatrixXd dar = gr * zr.transpose() + gi * zi.transpose();
    const Eigen::MatrixXd dai = gi * zr.transpose() - gr * zi.transpose();
    const Eigen::MatrixXd dzr = ar.transpose() * gr + ai.transpose() * gi;
    const Eigen::MatrixXd dzi = ar.transpose() * gi - ai.transpose() * gr;
    AdapterGradient out;
    out.loss = lr.value;
    out.du = wr.transpose() * dar + wi.transpose() * dai;
    out.dv = yr * dzr.transpose() + yi * dzi.transpose();
    return out;
}

/// Trains (U_r, V_r) from the principal-subspace start with W frozen.
inline RankAdapter finetune_adapter(const CMatrix& w, int rank, const std::vector<FrameRecord>& frames,
                                    const AdapterTrainConfig& tc) {
    tc.validate();
    if (frames.empty()) throw ConfigError("adapter training: no frames");
    RankAdapter adapter = principal_adapter(w, rank);
    AdamState adam(tc.adam);
    const std::size_t n = frames.size(), batch = static_cast<std::size_t>(tc.batch_size);
    const std::int64_t total = static_cast<std::int64_t>((n + batch - 1) / batch) * tc.epochs;
    TrainConfig schedule;
    schedule.adam = tc.adam;
    schedule.schedule = tc.schedule;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(derive_seed(tc.seed, static_cast<std::uint64_t>(epoch), 17));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t lo = 0; lo < n; lo += batch) {
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                               order.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + batch)));
            const double delta = detail::batch_delta(frames, idx, tc.delta);
            AdapterGradient g = adapter_loss_and_gradients(w, adapter, frames, idx, tc.loss, delta);
            if (!std::isfinite(g.loss) || !g.du.allFinite() || !g.dv.allFinite())
                throw NumericalError("adapter training: non-finite loss or gradient");
            std::vector<Matrix*> ptrs{&adapter.u, &adapter.v};
            const std::vector<Matrix> grads{g.du, g.dv};
            adam.hyper.learning_rate = schedule.learning_rate_at(adam.step, total);
            adam_step(ptrs, grads, adam);
        }
    }
    return adapter;
}

}  // namespace amselab

#endif  // AMSELAB_TRAINING_ADAPTER_HPP
