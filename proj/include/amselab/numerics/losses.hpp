#ifndef AMSELAB_NUMERICS_LOSSES_HPP
#define AMSELAB_NUMERICS_LOSSES_HPP

#include "amselab/numerics/types.hpp"

#include <cmath>
#include <string>

namespace amselab {

enum class LossKind { huber, mse };

/// Scalar loss value together with d(loss)/d(prediction).
struct LossResult {
    double value = 0.0;
    Matrix gradient;
};

inline double huber_value(double a, double delta) {
    const double m = std::abs(a);
    return m <= delta ? 0.5 * a * a : delta * (m - 0.5 * delta);
}

inline double huber_slope(double a, double delta) {
    if (std::abs(a) <= delta) return a;
    return a > 0.0 ? delta : -delta;
}

/// Mean Huber loss over every element of `residuals`.
inline LossResult huber_loss(const Matrix& residuals, double delta) {
    if (!(delta > 0.0)) throw ConfigError("huber_loss: threshold must be positive, got " + std::to_string(delta));
    if (residuals.size() == 0) throw ShapeError("huber_loss: empty residuals");
    const double n = static_cast<double>(residuals.size());
    LossResult r;
    r.value = residuals.unaryExpr([delta](double a) { return huber_value(a, delta); }).sum() / n;
    r.gradient = residuals.unaryExpr([delta, n](double a) { return huber_slope(a, delta) / n; });
    return r;
}

/// Mean squared residual, averaged over every real component.
inline LossResult mse_loss(const Matrix& estimate, const Matrix& target) {
    require_shape(estimate.rows() == target.rows() && estimate.cols() == target.cols(),
                  "mse_loss: " + shape_of(estimate) + " vs " + shape_of(target));
    if (estimate.size() == 0) throw ShapeError("mse_loss: empty input");
    const double n = static_cast<double>(estimate.size());
    const Matrix a = estimate - target;
    return {a.squaredNorm() / n, (2.0 / n) * a};
}

inline LossKind parse_loss_kind(const std::string& s) {
    if (s == "huber") return LossKind::huber;
    if (s == "mse") return LossKind::mse;
    throw ConfigError("unknown loss kind '" + s + "' (expected huber or mse)");
}

inline std::string to_string(LossKind k) { return k == LossKind::huber ? "huber" : "mse"; }

}  // namespace amselab

#endif  // AMSELAB_NUMERICS_LOSSES_HPP
