#ifndef AMSELAB_AMMSE_GRAPH_HPP
#define AMSELAB_AMMSE_GRAPH_HPP

// Batched forward pass recorded on an autodiff tape. Samples are stacked
// along rows: rows [b·2L, (b+1)·2L) belong to sample b.

#include "amselab/ammse/filter.hpp"
#include "amselab/ammse/network.hpp"
#include "amselab/numerics/autodiff.hpp"

#include <array>
#include <vector>

namespace amselab {

struct EncoderVars {
    ad::Var wq, wk, wv, wo, ln1_gain, ln1_bias, ffn_w1, ffn_b1, ffn_w2, ffn_b2, ln2_gain, ln2_bias;
};

/// Tape handles for every parameter tensor, in NetworkParams::tensors() order.
struct GraphParams {
    std::vector<ad::Var> all;
    ad::Var emb_w, emb_b, pos;
    bool has_pos = false;
    EncoderVars freq;
    ad::Var proj_w, proj_b;
    EncoderVars temporal;
    std::vector<std::array<ad::Var, 4>> decoder;
};

inline GraphParams bind_params(ad::Tape& tape, const NetworkParams& p, bool trainable) {
    GraphParams g;
    for (const Matrix* m : p.tensors()) g.all.push_back(trainable ? tape.variable(*m) : tape.constant(*m));
    std::size_t i = 0;
    auto next = [&] { return g.all[i++]; };
    auto encoder = [&](EncoderVars& e) {
        for (ad::Var* v : {&e.wq, &e.wk, &e.wv, &e.wo, &e.ln1_gain, &e.ln1_bias, &e.ffn_w1, &e.ffn_b1, &e.ffn_w2,
                           &e.ffn_b2, &e.ln2_gain, &e.ln2_bias})
            *v = next();
    };
    g.emb_w = next();
    g.emb_b = next();
    g.has_pos = p.pos.size() > 0;
    if (g.has_pos) g.pos = next();
    encoder(g.freq);
    g.proj_w = next();
    g.proj_b = next();
    encoder(g.temporal);
    for (std::size_t b = 0; b < p.decoder.size(); ++b) g.decoder.push_back({next(), next(), next(), next()});
    return g;
}

inline ad::Var encoder_graph(ad::Var x, const EncoderVars& e, int heads, Index block_rows, Activation act) {
    ad::Var a = ad::multi_head_attention(x, e.wq, e.wk, e.wv, e.wo, heads, block_rows);
    a = ad::layer_norm(ad::add(x, a), e.ln1_gain, e.ln1_bias);
    ad::Var f = ad::add_row(ad::matmul(a, e.ffn_w1), e.ffn_b1);
    f = ad::add_row(ad::matmul(ad::activation(f, act), e.ffn_w2), e.ffn_b2);
    return ad::layer_norm(ad::add(a, f), e.ln2_gain, e.ln2_bias);
}

/// x_batch (B × 2L) → stacked Y_Dec (B·2L × NM).
inline ad::Var forward_graph(ad::Tape& tape, const GraphParams& g, const AmmseConfig& cfg, const Matrix& x_batch) {
    require_shape(x_batch.cols() == cfg.tokens(), "forward_graph: batch " + shape_of(x_batch) + ", expected " +
                                                      std::to_string(cfg.tokens()) + " columns");
    const Index tokens = cfg.tokens();
    Matrix column(x_batch.rows() * tokens, 1);
    for (Index b = 0; b < x_batch.rows(); ++b) column.middleRows(b * tokens, tokens) = x_batch.row(b).transpose();
    ad::Var z = ad::add_row(ad::outer(tape.constant(std::move(column)), g.emb_w), g.emb_b);
    if (g.has_pos) z = ad::add_tiled(z, g.pos);
    z = encoder_graph(z, g.freq, cfg.resolved_freq_heads(), tokens, cfg.activation);
    z = ad::add_row(ad::matmul(z, g.proj_w), g.proj_b);
    z = encoder_graph(z, g.temporal, cfg.resolved_temporal_heads(), tokens, cfg.activation);
    for (const auto& blk : g.decoder) {
        ad::Var h = ad::activation(ad::add_row(ad::matmul(z, blk[0]), blk[1]), cfg.activation);
        z = ad::add(z, ad::add_row(ad::matmul(h, blk[2]), blk[3]));
    }
    return z;
}

/// Left-multiplies the real and imaginary halves of every 2L-row block by
/// V·Uᵀ, which turns the assembled filter W into W·U·Vᵀ.
inline ad::Var adapt_rows(ad::Var y, ad::Var u, ad::Var v) {
    ad::Tape& t = *y.tape;
    const Matrix& uv = t.value(u);
    const Matrix& vv = t.value(v);
    const Index l = uv.rows();
    require_shape(vv.rows() == l && vv.cols() == uv.cols() && t.value(y).rows() % (2 * l) == 0,
                  "adapt_rows: U " + shape_of(uv) + ", V " + shape_of(vv) + ", input " + shape_of(t.value(y)));
    const Matrix pt = vv * uv.transpose();
    const Matrix& yv = t.value(y);
    Matrix out(yv.rows(), yv.cols());
    for (Index r = 0; r < yv.rows(); r += l) out.middleRows(r, l).noalias() = pt * yv.middleRows(r, l);
    const std::size_t self = t.size();
    const bool grad = t.requires_grad(y) || t.requires_grad(u) || t.requires_grad(v);
    return t.push(std::move(out), grad, [y, u, v, l, pt, self](ad::Tape& tp) {
        const Matrix& g = tp.grad(ad::Var{&tp, self});
        const Matrix& yv = tp.value(y);
        if (tp.requires_grad(u) || tp.requires_grad(v)) {
            Matrix dpt = Matrix::Zero(l, l);
            for (Index r = 0; r < g.rows(); r += l) dpt.noalias() += g.middleRows(r, l) * yv.middleRows(r, l).transpose();
            if (tp.requires_grad(v)) tp.accumulate(v, dpt * tp.value(u));
            if (tp.requires_grad(u)) tp.accumulate(u, dpt.transpose() * tp.value(v));
        }
        if (tp.requires_grad(y)) {
            Matrix dy(g.rows(), g.cols());
            for (Index r = 0; r < g.rows(); r += l) dy.middleRows(r, l).noalias() = pt.transpose() * g.middleRows(r, l);
            tp.accumulate(y, dy);
        }
    });
}

/// Coefficients C_b = [[Re y, −Im y], [Im y, Re y]] (2 × 2L) so that
/// C_b·Y_Dec,b = [Re vec(Ĥ_b); Im vec(Ĥ_b)] for Ĥ_b = W_b·Y_p,b.
inline Matrix estimate_coefficients(const CVector& yp) {
    const Index l = yp.size();
    Matrix c(2, 2 * l);
    c.block(0, 0, 1, l) = yp.real().transpose();
    c.block(0, l, 1, l) = -yp.imag().transpose();
    c.block(1, 0, 1, l) = yp.imag().transpose();
    c.block(1, l, 1, l) = yp.real().transpose();
    return c;
}

/// Per-sample network outputs Y_Dec for a batch of inputs (no gradients).
inline std::vector<Matrix> forward_batch(const NetworkParams& p, const AmmseConfig& cfg, const Matrix& x_batch) {
    ad::Tape tape;
    const GraphParams g = bind_params(tape, p, false);
    const Matrix& y = tape.value(forward_graph(tape, g, cfg, x_batch));
    std::vector<Matrix> out;
    for (Index b = 0; b < x_batch.rows(); ++b) out.push_back(y.middleRows(b * cfg.tokens(), cfg.tokens()));
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_AMMSE_GRAPH_HPP
