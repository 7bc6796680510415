#ifndef AMSELAB_AMMSE_INFERENCE_HPP
#define AMSELAB_AMMSE_INFERENCE_HPP

// Inference through an exported filter, written once over a generic real
// scalar so the same code can run on double or on an auditing type.

#include "amselab/numerics/types.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace amselab {

/// Complex matrix held as separate row-major real and imaginary planes.
template <typename T>
struct SplitComplexMatrix {
    Index rows = 0;
    Index cols = 0;
    std::vector<T> re;
    std::vector<T> im;

    static SplitComplexMatrix from(const CMatrix& m) {
        SplitComplexMatrix s;
        s.rows = m.rows();
        s.cols = m.cols();
        s.re.reserve(static_cast<std::size_t>(m.size()));
        s.im.reserve(static_cast<std::size_t>(m.size()));
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) {
                s.re.push_back(T(m(i, j).real()));
                s.im.push_back(T(m(i, j).imag()));
            }
        return s;
    }
};

/// out = M·x over split complex data: each complex multiply-accumulate is
/// four real multiplies and four real additions.
template <typename T>
void split_matvec(const SplitComplexMatrix<T>& m, const std::vector<T>& xr, const std::vector<T>& xi,
                  std::vector<T>& outr, std::vector<T>& outi) {
    require_shape(static_cast<Index>(xr.size()) == m.cols && xi.size() == xr.size(),
                  "split_matvec: vector of length " + std::to_string(xr.size()) + " for " + shape_str(m.rows, m.cols));
    outr.assign(static_cast<std::size_t>(m.rows), T(0.0));
    outi.assign(static_cast<std::size_t>(m.rows), T(0.0));
    for (Index i = 0; i < m.rows; ++i) {
        T accr(0.0), acci(0.0);
        const std::size_t row = static_cast<std::size_t>(i * m.cols);
        for (Index j = 0; j < m.cols; ++j) {
            const std::size_t k = row + static_cast<std::size_t>(j);
            const std::size_t jj = static_cast<std::size_t>(j);
            accr = accr + m.re[k] * xr[jj];
            accr = accr - m.im[k] * xi[jj];
            acci = acci + m.re[k] * xi[jj];
            acci = acci + m.im[k] * xr[jj];
        }
        outr[static_cast<std::size_t>(i)] = accr;
        outi[static_cast<std::size_t>(i)] = acci;
    }
}

/// A chain of complex matrix-vector products applied to Y_p:
/// one stage (W) for a full filter, two (Bᵀ then A) for a factored one.
template <typename T>
class LinearInference {
public:
    explicit LinearInference(std::vector<CMatrix> stages) {
        require_shape(!stages.empty(), "LinearInference: no stages");
        for (std::size_t s = 1; s < stages.size(); ++s)
            require_shape(stages[s].cols() == stages[s - 1].rows(), "LinearInference: stage shapes do not chain");
        for (const CMatrix& m : stages) stages_.push_back(SplitComplexMatrix<T>::from(m));
    }

    Index input_size() const { return stages_.front().cols; }
    Index output_size() const { return stages_.back().rows; }

    void apply(const std::vector<T>& yr, const std::vector<T>& yi, std::vector<T>& outr, std::vector<T>& outi) const {
        std::vector<T> ar = yr, ai = yi;
        for (const SplitComplexMatrix<T>& m : stages_) {
            split_matvec(m, ar, ai, outr, outi);
            ar = outr;
            ai = outi;
        }
    }

    CVector apply(const CVector& yp) const {
        std::vector<T> yr, yi, outr, outi;
        for (Index i = 0; i < yp.size(); ++i) {
            yr.push_back(T(yp(i).real()));
            yi.push_back(T(yp(i).imag()));
        }
        apply(yr, yi, outr, outi);
        CVector out(static_cast<Index>(outr.size()));
        for (std::size_t i = 0; i < outr.size(); ++i)
            out(static_cast<Index>(i)) = cdouble(static_cast<double>(outr[i]), static_cast<double>(outi[i]));
        return out;
    }

private:
    std::vector<SplitComplexMatrix<T>> stages_;
};

/// Real scalar that tallies the primitive operations applied to it. Any
/// operation other than multiply/add/subtract is tallied as nonlinear.
struct OpTally {
    std::uint64_t multiplies = 0;
    std::uint64_t additions = 0;
    std::uint64_t nonlinear = 0;

    std::uint64_t total() const { return multiplies + additions + nonlinear; }
};

inline OpTally& op_tally() {
    thread_local OpTally t;
    return t;
}

class AuditedReal {
public:
    AuditedReal() = default;
    explicit AuditedReal(double v) : v_(v) {}
    explicit operator double() const { return v_; }
    double value() const { return v_; }

    friend AuditedReal operator+(AuditedReal a, AuditedReal b) {
        ++op_tally().additions;
        return AuditedReal(a.v_ + b.v_);
    }
    friend AuditedReal operator-(AuditedReal a, AuditedReal b) {
        ++op_tally().additions;
        return AuditedReal(a.v_ - b.v_);
    }
    friend AuditedReal operator*(AuditedReal a, AuditedReal b) {
        ++op_tally().multiplies;
        return AuditedReal(a.v_ * b.v_);
    }
    friend AuditedReal operator/(AuditedReal a, AuditedReal b) {
        ++op_tally().nonlinear;
        return AuditedReal(a.v_ / b.v_);
    }

private:
    double v_ = 0.0;
};

inline AuditedReal exp(AuditedReal a) {
    ++op_tally().nonlinear;
    return AuditedReal(std::exp(a.value()));
}
inline AuditedReal sqrt(AuditedReal a) {
    ++op_tally().nonlinear;
    return AuditedReal(std::sqrt(a.value()));
}
inline AuditedReal tanh(AuditedReal a) {
    ++op_tally().nonlinear;
    return AuditedReal(std::tanh(a.value()));
}
inline AuditedReal max(AuditedReal a, AuditedReal b) {
    ++op_tally().nonlinear;
    return AuditedReal(a.value() > b.value() ? a.value() : b.value());
}

}  // namespace amselab

#endif  // AMSELAB_AMMSE_INFERENCE_HPP
