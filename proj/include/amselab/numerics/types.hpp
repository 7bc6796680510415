#ifndef AMSELAB_NUMERICS_TYPES_HPP
#define AMSELAB_NUMERICS_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace amselab {

using cdouble = std::complex<double>;

// Real tensors are row-major so that one row is one token / one feature vector.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

using Index = Eigen::Index;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string shape_str(Index rows, Index cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename A>
std::string shape_of(const A& a) {
    return shape_str(a.rows(), a.cols());
}

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

template <typename A>
bool all_finite(const A& a) {
    return a.allFinite();
}

}  // namespace amselab

#endif  // AMSELAB_NUMERICS_TYPES_HPP
