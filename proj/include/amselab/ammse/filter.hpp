#ifndef AMSELAB_AMMSE_FILTER_HPP
#define AMSELAB_AMMSE_FILTER_HPP

#include "amselab/ammse/inference.hpp"
#include "amselab/channel/sampler.hpp"
#include "amselab/numerics/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <string>
#include <vector>

namespace amselab {

/// Linear estimator vec(Ĥ) = W·Y_p, optionally held as W = A·Bᵀ.
struct AmmseFilter {
    CMatrix w;  // NM×L
    CMatrix a;  // NM×r, empty when not factored
    CMatrix b;  // L×r
    int subcarriers = 0;
    int symbols = 0;

    bool factored() const { return a.size() > 0; }
    int rank() const { return factored() ? static_cast<int>(a.cols()) : 0; }
    Index pilots() const { return factored() ? b.rows() : w.cols(); }

    /// The effective NM×L matrix.
    CMatrix effective() const { return factored() ? CMatrix(a * b.transpose()) : w; }
};

/// Y_Dec (2L × NM) → W = (Y_Dec[0:L] + j·Y_Dec[L:2L])ᵀ.
inline AmmseFilter assemble_filter(const Matrix& y_dec, int subcarriers, int symbols) {
    if (y_dec.rows() % 2 != 0) throw ShapeError("assemble_filter: odd row count " + std::to_string(y_dec.rows()));
    require_shape(y_dec.cols() == Index{subcarriers} * symbols,
                  "assemble_filter: " + shape_of(y_dec) + " for a " + shape_str(subcarriers, symbols) + " grid");
    const Index l = y_dec.rows() / 2;
    AmmseFilter f;
    f.w.resize(y_dec.cols(), l);
    for (Index i = 0; i < l; ++i)
        for (Index j = 0; j < y_dec.cols(); ++j) f.w(j, i) = cdouble(y_dec(i, j), y_dec(l + i, j));
    f.subcarriers = subcarriers;
    f.symbols = symbols;
    return f;
}

/// Inverse of assemble_filter for a full filter.
inline Matrix disassemble_filter(const CMatrix& w) {
    const Index l = w.cols();
    Matrix y(2 * l, w.rows());
    for (Index i = 0; i < l; ++i)
        for (Index j = 0; j < w.rows(); ++j) {
            y(i, j) = w(j, i).real();
            y(l + i, j) = w(j, i).imag();
        }
    return y;
}

/// Inference stages: {W} for a full filter, {Bᵀ, A} for a factored one.
inline std::vector<CMatrix> inference_stages(const AmmseFilter& f) {
    if (f.factored()) return {f.b.transpose(), f.a};
    return {f.w};
}

/// vec(Ĥ) = W·Y_p or A·(Bᵀ·Y_p), reshaped to N×M.
inline CMatrix estimate(const AmmseFilter& f, const CVector& yp) {
    require_shape(yp.size() == f.pilots(), "estimate: " + std::to_string(yp.size()) + " pilots for a filter over " +
                                               std::to_string(f.pilots()));
    const LinearInference<double> kernel(inference_stages(f));
    return linalg::unvec(kernel.apply(yp), f.subcarriers, f.symbols);
}

inline CMatrix estimate(const AmmseFilter& f, const PilotObservation& obs) { return estimate(f, obs.yp); }

/// Truncated SVD factors: A = U_r Σ_r, B = conj(V_r), so A·Bᵀ = U_r Σ_r V_rᴴ.
inline AmmseFilter factor_svd(const AmmseFilter& f, int r) {
    const CMatrix w = f.effective();
    const int max_rank = static_cast<int>(std::min(w.rows(), w.cols()));
    if (r < 1 || r > max_rank)
        throw ConfigError("factor_svd: rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) + "]");
    Eigen::JacobiSVD<CMatrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    AmmseFilter out = f;
    out.a = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
    out.b = svd.matrixV().leftCols(r).conjugate();
    out.w = w;
    return out;
}

/// Real L×r factors; the effective filter is W·U_r·V_rᵀ.
struct RankAdapter {
    Matrix u;
    Matrix v;

    int rank() const { return static_cast<int>(u.cols()); }
    Index pilots() const { return u.rows(); }

    void validate(Index l) const {
        require_shape(u.rows() == l && v.rows() == l && u.cols() == v.cols(),
                      "rank adapter: U " + shape_of(u) + ", V " + shape_of(v) + " for L = " + std::to_string(l));
        if (u.cols() < 1 || u.cols() > l) throw ConfigError("rank adapter: rank " + std::to_string(u.cols()) +
                                                            " outside [1, " + std::to_string(l) + "]");
        if (!u.allFinite() || !v.allFinite()) throw NumericalError("rank adapter: non-finite entries");
    }
};

inline RankAdapter identity_adapter(Index l) { return {Matrix::Identity(l, l), Matrix::Identity(l, l)}; }

/// U_r = V_r = leading eigenvectors of Re(WᴴW): the real rank-r projector
/// that keeps the most filter energy.
inline RankAdapter principal_adapter(const CMatrix& w, int r) {
    const Index l = w.cols();
    if (r < 1 || r > l) throw ConfigError("principal_adapter: rank " + std::to_string(r) + " outside [1, " +
                                          std::to_string(l) + "]");
    const Eigen::MatrixXd gram = (w.adjoint() * w).real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    Matrix basis = es.eigenvectors().rightCols(r).rowwise().reverse();
    return {basis, basis};
}

/// Factored filter A = W·U_r (NM×r), B = V_r (L×r).
inline AmmseFilter rank_adapt(const AmmseFilter& f, const RankAdapter& adapter) {
    const CMatrix w = f.effective();
    adapter.validate(w.cols());
    const int max_rank = static_cast<int>(std::min(w.rows(), w.cols()));
    if (adapter.rank() > max_rank)
        throw ConfigError("rank_adapt: rank " + std::to_string(adapter.rank()) + " exceeds min(NM, L) = " +
                          std::to_string(max_rank));
    AmmseFilter out;
    out.subcarriers = f.subcarriers;
    out.symbols = f.symbols;
    out.w = w;
    out.a = w * adapter.u.cast<cdouble>();
    out.b = adapter.v.cast<cdouble>();
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_AMMSE_FILTER_HPP
