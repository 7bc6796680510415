#ifndef AMSELAB_NUMERICS_LAYERS_HPP
#define AMSELAB_NUMERICS_LAYERS_HPP

// Forward-only transformer primitives over row-major real matrices.
// Rows are tokens, columns are features. The differentiable versions in
// autodiff.hpp call into these kernels for their forward pass.

#include "amselab/numerics/types.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace amselab {

enum class Activation { relu, gelu };

inline double activate(double x, Activation a) {
    if (a == Activation::relu) return x > 0.0 ? x : 0.0;
    return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

inline double activate_derivative(double x, Activation a) {
    if (a == Activation::relu) return x > 0.0 ? 1.0 : 0.0;
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) + x * pdf;
}

inline Matrix apply_activation(const Matrix& x, Activation a) {
    return x.unaryExpr([a](double v) { return activate(v, a); });
}

/// Row-wise softmax with max subtraction.
inline Matrix softmax_rows(const Matrix& s) {
    Matrix p(s.rows(), s.cols());
    for (Index i = 0; i < s.rows(); ++i) {
        const double m = s.row(i).maxCoeff();
        p.row(i) = (s.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

/// softmax(Q·Kᵀ/√d_k)·V
inline Matrix scaled_dot_product_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    require_shape(q.cols() == k.cols() && q.cols() > 0,
                  "attention: Q " + shape_of(q) + " and K " + shape_of(k) + " disagree on d_k");
    require_shape(k.rows() == v.rows(), "attention: K " + shape_of(k) + " and V " + shape_of(v) +
                                            " disagree on sequence length");
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix scores = (q * k.transpose()) * scale;
    return softmax_rows(scores) * v;
}

/// Multi-head attention weights. Head i uses column block i of wq, wk, wv
/// (each d × d, block width d/heads); wo merges the concatenated heads.
struct MhaParams {
    Matrix wq, wk, wv, wo;
    int heads = 1;

    Index model_dim() const { return wq.rows(); }
    Index head_dim() const { return wq.cols() / heads; }

    void validate(Index d) const {
        if (heads < 1 || d % heads != 0)
            throw ConfigError("multi-head attention: width " + std::to_string(d) +
                              " not divisible by " + std::to_string(heads) + " heads");
        for (const Matrix* w : {&wq, &wk, &wv, &wo})
            require_shape(w->rows() == d && w->cols() == d,
                          "multi-head attention: projection " + shape_of(*w) + ", expected " +
                              shape_str(d, d));
    }
};

/// Self-attention of x (s × d) with itself.
inline Matrix multi_head_attention(const Matrix& x, const MhaParams& p) {
    p.validate(x.cols());
    const Index dk = p.head_dim();
    const Matrix q = x * p.wq, k = x * p.wk, v = x * p.wv;
    Matrix concat(x.rows(), x.cols());
    for (int h = 0; h < p.heads; ++h) {
        concat.middleCols(h * dk, dk) = scaled_dot_product_attention(
            q.middleCols(h * dk, dk), k.middleCols(h * dk, dk), v.middleCols(h * dk, dk));
    }
    return concat * p.wo;
}

inline constexpr double kLayerNormEpsilon = 1e-5;

/// Per-row standardization followed by gain ∘ (·) + bias.
inline Matrix layer_norm(const Matrix& x, const RowVector& gain, const RowVector& bias,
                         double eps = kLayerNormEpsilon) {
    require_shape(gain.size() == x.cols() && bias.size() == x.cols(),
                  "layer_norm: gain/bias width does not match " + shape_of(x));
    if (!(eps > 0.0)) throw ConfigError("layer_norm: epsilon must be positive");
    Matrix out(x.rows(), x.cols());
    const double n = static_cast<double>(x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + eps);
        out.row(i) = ((x.row(i).array() - mean) * inv * gain.array() + bias.array()).matrix();
    }
    return out;
}

/// y = x·w + b, with b broadcast over rows.
inline Matrix affine_rows(const Matrix& x, const Matrix& w, const RowVector& b) {
    require_shape(x.cols() == w.rows() && w.cols() == b.size(),
                  "affine: " + shape_of(x) + " · " + shape_of(w) + " + bias " +
                      std::to_string(b.size()));
    Matrix y = x * w;
    y.rowwise() += b;
    return y;
}

/// Position-wise two-layer network: act(x·w1 + b1)·w2 + b2.
struct FfnParams {
    Matrix w1;
    RowVector b1;
    Matrix w2;
    RowVector b2;
};

inline Matrix feed_forward(const Matrix& x, const FfnParams& p, Activation act = Activation::relu) {
    require_shape(p.w2.cols() == x.cols(), "feed_forward: output width " + std::to_string(p.w2.cols()) +
                                               " differs from input " + shape_of(x));
    return affine_rows(apply_activation(affine_rows(x, p.w1, p.b1), act), p.w2, p.b2);
}

}  // namespace amselab

#endif  // AMSELAB_NUMERICS_LAYERS_HPP
