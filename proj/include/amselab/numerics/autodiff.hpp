#ifndef AMSELAB_NUMERICS_AUTODIFF_HPP
#define AMSELAB_NUMERICS_AUTODIFF_HPP

// Minimal tape-based reverse-mode differentiation over real matrices.
//
// A Tape records nodes in creation order; backward() walks them in reverse.
// Only the operations the estimation network needs are provided. Attention
// and layer norm carry hand-written adjoints instead of being decomposed
// into elementwise primitives.

#include "amselab/numerics/layers.hpp"
#include "amselab/numerics/losses.hpp"
#include "amselab/numerics/types.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace amselab::ad {

class Tape;

/// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;
};

struct DiffNode {
    Matrix value;
    Matrix gradient;  // same shape as value once backward() has run
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;  // accumulates into inputs' gradients
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Constant input; no gradient is tracked.
    Var constant(Matrix value) { return push(std::move(value), false, {}); }

    /// Leaf whose gradient is wanted.
    Var variable(Matrix value) { return push(std::move(value), true, {}); }

    const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
    const Matrix& grad(Var v) const { return nodes_.at(v.id).gradient; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Accumulates `g` into the gradient of `v` (no-op for constants).
    void accumulate(Var v, const Matrix& g) {
        DiffNode& n = nodes_[v.id];
        if (!n.requires_grad) return;
        n.gradient += g;
    }

    Var push(Matrix value, bool requires_grad, std::function<void(Tape&)> backprop) {
        nodes_.push_back(DiffNode{std::move(value), Matrix(), requires_grad, std::move(backprop)});
        return Var{this, nodes_.size() - 1};
    }

    /// Reverse pass from a 1×1 node. Every gradient is re-zeroed first.
    void backward(Var loss) {
        const DiffNode& l = nodes_.at(loss.id);
        if (l.value.rows() != 1 || l.value.cols() != 1)
            throw ShapeError("backward: loss must be scalar, got " + shape_of(l.value));
        for (DiffNode& n : nodes_) {
            if (n.requires_grad) n.gradient = Matrix::Zero(n.value.rows(), n.value.cols());
        }
        if (!l.requires_grad) return;
        nodes_[loss.id].gradient(0, 0) = 1.0;
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            DiffNode& n = nodes_[i];
            if (n.requires_grad && n.backprop) n.backprop(*this);
        }
    }

private:
    std::vector<DiffNode> nodes_;
};

namespace detail {

inline bool any_grad(Tape& t, std::initializer_list<Var> vs) {
    for (Var v : vs)
        if (t.requires_grad(v)) return true;
    return false;
}

inline Tape& same_tape(std::initializer_list<Var> vs) {
    Tape* t = vs.begin()->tape;
    for (Var v : vs)
        if (v.tape != t) throw std::logic_error("autodiff: operands live on different tapes");
    return *t;
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
    Tape& t = detail::same_tape({a, b});
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    require_shape(av.cols() == bv.rows(), "matmul: " + shape_of(av) + " · " + shape_of(bv));
    Matrix out = av * bv;
    const std::size_t self = t.size();
    return t.push(std::move(out), detail::any_grad(t, {a, b}), [a, b, self](Tape& tp) {
        const Matrix& g = tp.grad(Var{&tp, self});
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
        if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

inline Var add(Var a, Var b) {
    Tape& t = detail::same_tape({a, b});
    require_shape(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(),
                  "add: " + shape_of(t.value(a)) + " + " + shape_of(t.value(b)));
    Matrix out = t.value(a) + t.value(b);
    const std::size_t self = t.size();
    return t.push(std::move(out), detail::any_grad(t, {a, b}), [a, b, self](Tape& tp) {
        const Matrix& g = tp.grad(Var{&tp, self});
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

/// x + bias with a 1×d bias broadcast over rows.
inline Var add_row(Var x, Var bias) {
    Tape& t = detail::same_tape({x, bias});
    const Matrix& bv = t.value(bias);
    require_shape(bv.rows() == 1 && bv.cols() == t.value(x).cols(),
                  "add_row: bias " + shape_of(bv) + " for " + shape_of(t.value(x)));
    Matrix out = t.value(x);
    out.rowwise() += bv.row(0);
    const std::size_t self = t.size();
    return t.push(std::move(out), detail::any_grad(t, {x, bias}), [x, bias, self](Tape& tp) {
        const Matrix& g = tp.grad(Var{&tp, self});
        tp.accumulate(x, g);
        if (tp.requires_grad(bias)) tp.accumulate(bias, g.colwise().sum());
    });
}

/// x (r×1) · row (1×d): the outer-product broadcast used by scalar embeddings.
inline Var outer(Var column, Var row) { return matmul(column, row); }

/// Adds a full matrix `table` whose row count divides the row count of x,
/// repeating it down the rows (one copy per stacked sample).
inline Var add_tiled(Var x, Var table) {
    Tape& t = detail::same_tape({x, table});
    const Matrix& tv = t.value(table);
    const Matrix& xv = t.value(x);
    require_shape(tv.cols() == xv.cols() && tv.rows() > 0 && xv.rows() % tv.rows() == 0,
                  "add_tiled: table " + shape_of(tv) + " for " + shape_of(xv));
    Matrix out = xv;
    const Index block = tv.rows();
    for (Index r = 0; r < xv.rows(); r += block) out.middleRows(r, block) += tv;
    const std::size_t self = t.size();
    return t.push(std::move(out), detail::any_grad(t, {x, table}), [x, table, block, self](Tape& tp) {
        const Matrix& g = tp.grad(Var{&tp, self});
        tp.accumulate(x, g);
        if (tp.requires_grad(table)) {
            Matrix acc = Matrix::Zero(block, g.cols());
            for (Index r = 0; r < g.rows(); r += block) acc += g.middleRows(r, block);
            tp.accumulate(table, acc);
        }
    });
}

inline Var activation(Var x, Activation act) {
    Tape& t = *x.tape;
    Matrix out = apply_activation(t.value(x), act);
    const std::size_t self = t.size();
    return t.push(std::move(out), t.requires_grad(x), [x, act, self](Tape& tp) {
        const Matrix& g = tp.grad(Var{&tp, self});
        const Matrix d = tp.value(x).unaryExpr([act](double v) { return activate_derivative(v, act); });
        tp.accumulate(x, g.cwiseProduct(d));
    });
}

/// Row-wise layer normalization with learned gain and bias (both 1×d).
inline Var layer_norm(Var x, Var gain, Var bias, double eps = kLayerNormEpsilon) {
    Tape& t = detail::same_tape({x, gain, bias});
    const Matrix& xv = t.value(x);
    const Index d = xv.cols();
    require_shape(t.value(gain).cols() == d && t.value(bias).cols() == d,
                  "layer_norm: gain/bias width does not match " + shape_of(xv));
    Matrix xhat(xv.rows(), d);
    Vector inv_std(xv.rows());
    for (Index i = 0; i < xv.rows(); ++i) {
        const double mean = xv.row(i).mean();
        const double var = (xv.row(i).array() - mean).square().sum() / static_cast<double>(d);
        inv_std(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (xv.row(i).array() - mean) * inv_std(i);
    }
    Matrix out = xhat;
    out.array().rowwise() *= t.value(gain).row(0).array();
    out.rowwise() += t.value(bias).row(0);
    const std::size_t self = t.size();
    return t.push(std::move(out), detail::any_grad(t, {x, gain, bias}),
                  [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), self](Tape& tp) {
                      const Matrix& g = tp.grad(Var{&tp, self});
                      if (tp.requires_grad(gain)) tp.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                      if (tp.requires_grad(bias)) tp.accumulate(bias, g.colwise().sum());
                      if (!tp.requires_grad(x)) return;
                      Matrix dxhat = g;
                      dxhat.array().rowwise() *= tp.value(gain).row(0).array();
                      Matrix dx(g.rows(), g.cols());
                      for (Index i = 0; i < g.rows(); ++i) {
                          const double m1 = dxhat.row(i).mean();
                          const double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
                          dx.row(i) = inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
                      }
                      tp.accumulate(x, dx);
                  });
}

/// Multi-head self-attention applied independently to consecutive blocks of
/// `block_rows` rows (one block per stacked sample). Head h uses column block
/// h of the d×d projections.
inline Var multi_head_attention(Var x, Var wq, Var wk, Var wv, Var wo, int heads, Index block_rows) {
    Tape& t = detail::same_tape({x, wq, wk, wv, wo});
    const Matrix& xv = t.value(x);
    const Index d = xv.cols();
    if (heads < 1 || d % heads != 0)
        throw ConfigError("multi-head attention: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
    for (Var w : {wq, wk, wv, wo})
        require_shape(t.value(w).rows() == d && t.value(w).cols() == d,
                      "multi-head attention: projection " + shape_of(t.value(w)));
    require_shape(block_rows > 0 && xv.rows() % block_rows == 0,
                  "multi-head attention: " + std::to_string(xv.rows()) + " rows not a multiple of block " +
                      std::to_string(block_rows));

    const Index dk = d / heads;
    const Index blocks = xv.rows() / block_rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    Matrix q = xv * t.value(wq), k = xv * t.value(wk), v = xv * t.value(wv);
    Matrix concat(xv.rows(), d);
    std::vector<Matrix> probs(static_cast<std::size_t>(blocks * heads));
    for (Index b = 0; b < blocks; ++b) {
        for (int h = 0; h < heads; ++h) {
            const Index r0 = b * block_rows, c0 = h * dk;
            Matrix p = softmax_rows(q.block(r0, c0, block_rows, dk) * k.block(r0, c0, block_rows, dk).transpose() *
                                    scale);
            concat.block(r0, c0, block_rows, dk).noalias() = p * v.block(r0, c0, block_rows, dk);
            probs[static_cast<std::size_t>(b * heads + h)] = std::move(p);
        }
    }
    Matrix out = concat * t.value(wo);
    const std::size_t self = t.size();
    auto backprop = [=, q = std::move(q), k = std::move(k), v = std::move(v), concat = std::move(concat),
                     probs = std::move(probs)](Tape& tp) {
        const Matrix& g = tp.grad(Var{&tp, self});
        if (tp.requires_grad(wo)) tp.accumulate(wo, concat.transpose() * g);
        const bool need_inner = tp.requires_grad(x) || tp.requires_grad(wq) || tp.requires_grad(wk) ||
                                tp.requires_grad(wv);
        if (!need_inner) return;
        const Matrix dconcat = g * tp.value(wo).transpose();
        Matrix dq(q.rows(), d), dk_(k.rows(), d), dv(v.rows(), d);
        for (Index b = 0; b < blocks; ++b) {
            for (int h = 0; h < heads; ++h) {
                const Index r0 = b * block_rows, c0 = h * dk;
                const Matrix& p = probs[static_cast<std::size_t>(b * heads + h)];
                const auto dout = dconcat.block(r0, c0, block_rows, dk);
                const Matrix dp = dout * v.block(r0, c0, block_rows, dk).transpose();
                dv.block(r0, c0, block_rows, dk).noalias() = p.transpose() * dout;
                Matrix ds = p.cwiseProduct(dp);
                const Vector rowdot = ds.rowwise().sum();
                ds -= p.cwiseProduct(rowdot.replicate(1, block_rows));
                ds *= scale;
                dq.block(r0, c0, block_rows, dk).noalias() = ds * k.block(r0, c0, block_rows, dk);
                dk_.block(r0, c0, block_rows, dk).noalias() = ds.transpose() * q.block(r0, c0, block_rows, dk);
            }
        }
        const Matrix& xval = tp.value(x);
        if (tp.requires_grad(wq)) tp.accumulate(wq, xval.transpose() * dq);
        if (tp.requires_grad(wk)) tp.accumulate(wk, xval.transpose() * dk_);
        if (tp.requires_grad(wv)) tp.accumulate(wv, xval.transpose() * dv);
        if (tp.requires_grad(x)) {
            Matrix dx = dq * tp.value(wq).transpose();
            dx.noalias() += dk_ * tp.value(wk).transpose();
            dx.noalias() += dv * tp.value(wv).transpose();
            tp.accumulate(x, dx);
        }
    };
    return t.push(std::move(out), detail::any_grad(t, {x, wq, wk, wv, wo}), std::move(backprop));
}

/// Block-diagonal left multiplication: block b of the output is
/// coeffs[b] · x[rows of block b], where every coeffs[b] is c×block_rows.
/// The coefficients are constants.
inline Var block_left_multiply(const std::vector<Matrix>& coeffs, Var x) {
    Tape& t = *x.tape;
    const Matrix& xv = t.value(x);
    require_shape(!coeffs.empty(), "block_left_multiply: no blocks");
    const Index out_rows = coeffs.front().rows();
    const Index block_rows = coeffs.front().cols();
    require_shape(xv.rows() == block_rows * static_cast<Index>(coeffs.size()),
                  "block_left_multiply: " + std::to_string(coeffs.size()) + " blocks of " +
                      std::to_string(block_rows) + " rows vs " + shape_of(xv));
    Matrix out(out_rows * static_cast<Index>(coeffs.size()), xv.cols());
    for (std::size_t b = 0; b < coeffs.size(); ++b) {
        require_shape(coeffs[b].rows() == out_rows && coeffs[b].cols() == block_rows,
                      "block_left_multiply: ragged coefficient blocks");
        out.middleRows(static_cast<Index>(b) * out_rows, out_rows).noalias() =
            coeffs[b] * xv.middleRows(static_cast<Index>(b) * block_rows, block_rows);
    }
    const std::size_t self = t.size();
    return t.push(std::move(out), t.requires_grad(x), [x, coeffs, out_rows, block_rows, self](Tape& tp) {
        const Matrix& g = tp.grad(Var{&tp, self});
        Matrix dx(block_rows * static_cast<Index>(coeffs.size()), g.cols());
        for (std::size_t b = 0; b < coeffs.size(); ++b)
            dx.middleRows(static_cast<Index>(b) * block_rows, block_rows).noalias() =
                coeffs[b].transpose() * g.middleRows(static_cast<Index>(b) * out_rows, out_rows);
        tp.accumulate(x, dx);
    });
}

/// Right multiplication by a constant matrix.
inline Var matmul_const(Var x, const Matrix& c) {
    Tape& t = *x.tape;
    require_shape(t.value(x).cols() == c.rows(), "matmul_const: " + shape_of(t.value(x)) + " · " + shape_of(c));
    Matrix out = t.value(x) * c;
    const std::size_t self = t.size();
    return t.push(std::move(out), t.requires_grad(x), [x, c, self](Tape& tp) {
        tp.accumulate(x, tp.grad(Var{&tp, self}) * c.transpose());
    });
}

/// Scalar loss between a prediction node and a constant target.
inline Var loss(Var prediction, const Matrix& target, LossKind kind, double huber_delta) {
    Tape& t = *prediction.tape;
    const Matrix& pv = t.value(prediction);
    require_shape(pv.rows() == target.rows() && pv.cols() == target.cols(),
                  "loss: prediction " + shape_of(pv) + " vs target " + shape_of(target));
    LossResult r = kind == LossKind::huber ? huber_loss(pv - target, huber_delta) : mse_loss(pv, target);
    Matrix out(1, 1);
    out(0, 0) = r.value;
    const std::size_t self = t.size();
    return t.push(std::move(out), t.requires_grad(prediction),
                  [prediction, grad = std::move(r.gradient), self](Tape& tp) {
                      tp.accumulate(prediction, tp.grad(Var{&tp, self})(0, 0) * grad);
                  });
}

/// Sum of all entries, as a 1×1 node.
inline Var sum(Var x) {
    Tape& t = *x.tape;
    Matrix out(1, 1);
    out(0, 0) = t.value(x).sum();
    const std::size_t self = t.size();
    return t.push(std::move(out), t.requires_grad(x), [x, self](Tape& tp) {
        const Matrix& xv = tp.value(x);
        tp.accumulate(x, Matrix::Constant(xv.rows(), xv.cols(), tp.grad(Var{&tp, self})(0, 0)));
    });
}

}  // namespace amselab::ad

#endif  // AMSELAB_NUMERICS_AUTODIFF_HPP
