#ifndef AMSELAB_NUMERICS_ADAM_HPP
#define AMSELAB_NUMERICS_ADAM_HPP

#include "amselab/numerics/types.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace amselab {

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::int64_t step = 0;

    AdamState() = default;
    explicit AdamState(AdamHyper h) : hyper(h) {}
};

/// One bias-corrected Adam update of every tensor in `params`.
/// Moments are lazily sized on the first call.
inline void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state) {
    require_shape(params.size() == grads.size(), "adam_step: parameter/gradient count mismatch");
    if (state.first_moment.empty()) {
        for (const Matrix* p : params) {
            state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
            state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    }
    require_shape(state.first_moment.size() == params.size(), "adam_step: state was built for other parameters");

    ++state.step;
    const AdamHyper& h = state.hyper;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(h.beta1, t);
    const double c2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& p = *params[i];
        const Matrix& g = grads[i];
        require_shape(g.rows() == p.rows() && g.cols() == p.cols(), "adam_step: gradient " + shape_of(g) +
                                                                        " for parameter " + shape_of(p));
        Matrix& m = state.first_moment[i];
        Matrix& v = state.second_moment[i];
        m = h.beta1 * m + (1.0 - h.beta1) * g;
        v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseProduct(g);
        p.array() -= h.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + h.epsilon);
    }
}

}  // namespace amselab

#endif  // AMSELAB_NUMERICS_ADAM_HPP
