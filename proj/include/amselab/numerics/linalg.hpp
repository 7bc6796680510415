#ifndef AMSELAB_NUMERICS_LINALG_HPP
#define AMSELAB_NUMERICS_LINALG_HPP

#include "amselab/numerics/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace amselab::linalg {

inline constexpr double kPinvTolerance = 1e-10;

/// Kronecker product, a ⊗ b.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

/// Principal square root of a Hermitian PSD matrix. Negative eigenvalues
/// (round-off) are clamped to zero.
inline CMatrix hermitian_sqrt(const CMatrix& a) {
    require_shape(a.rows() == a.cols(), "hermitian_sqrt: matrix not square " + shape_of(a));
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a));
    if (es.info() != Eigen::Success) throw NumericalError("hermitian_sqrt: eigendecomposition failed");
    Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

inline Vector hermitian_eigenvalues(const CMatrix& a) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline CMatrix pinv(const CMatrix& a, double tol = kPinvTolerance) {
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol * (s.size() > 0 ? s(0) : 0.0);
    Vector inv(s.size());
    for (Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff && s(i) > 0.0 ? 1.0 / s(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

struct SolveResult {
    CMatrix x;
    bool used_pinv = false;
};

/// Solves x·A = b for Hermitian A (right division), i.e. x = b·A⁻¹.
/// Uses a Cholesky factorization when A is numerically positive definite and
/// falls back to the pseudo-inverse otherwise.
inline SolveResult right_solve_hermitian(const CMatrix& b, const CMatrix& a) {
    require_shape(a.rows() == a.cols() && b.cols() == a.rows(),
                  "right_solve_hermitian: " + shape_of(b) + " / " + shape_of(a));
    Eigen::LLT<CMatrix> llt(hermitian_part(a));
    if (llt.info() == Eigen::Success) {
        const double scale = a.diagonal().real().cwiseAbs().maxCoeff();
        const double min_pivot = llt.matrixLLT().diagonal().real().minCoeff();
        if (min_pivot * min_pivot > kPinvTolerance * std::max(scale, 1e-300)) {
            // (A⁻¹ bᴴ)ᴴ = b A⁻¹ since A is Hermitian.
            return {llt.solve(b.adjoint()).adjoint(), false};
        }
    }
    return {b * pinv(a), true};
}

/// Column-major vectorization, vec(H)[n + N·m] = H[n, m].
inline CVector vec(const CMatrix& h) { return h.reshaped(); }

inline CMatrix unvec(const CVector& v, Index rows, Index cols) {
    require_shape(v.size() == rows * cols, "unvec: length " + std::to_string(v.size()) +
                                               " does not fit " + shape_str(rows, cols));
    return v.reshaped(rows, cols);
}

/// [Re(z); Im(z)] as a real vector of length 2·len(z).
inline Vector real_stack(const CVector& z) {
    Vector out(2 * z.size());
    out.head(z.size()) = z.real();
    out.tail(z.size()) = z.imag();
    return out;
}

inline CVector complex_unstack(const Vector& x) {
    require_shape(x.size() % 2 == 0, "complex_unstack: odd length " + std::to_string(x.size()));
    const Index n = x.size() / 2;
    CVector z(n);
    for (Index i = 0; i < n; ++i) z(i) = cdouble(x(i), x(n + i));
    return z;
}

inline Vector singular_values(const CMatrix& a) {
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues();
}

}  // namespace amselab::linalg

#endif  // AMSELAB_NUMERICS_LINALG_HPP
