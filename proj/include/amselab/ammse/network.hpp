#ifndef AMSELAB_AMMSE_NETWORK_HPP
#define AMSELAB_AMMSE_NETWORK_HPP

#include "amselab/ammse/config.hpp"
#include "amselab/numerics/layers.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace amselab {

/// One post-norm encoder block: MHA → Add&Norm → FFN → Add&Norm.
struct EncoderParams {
    Matrix wq, wk, wv, wo;
    Matrix ln1_gain, ln1_bias;
    Matrix ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    Matrix ln2_gain, ln2_bias;

    std::vector<Matrix*> tensors() {
        return {&wq, &wk, &wv, &wo, &ln1_gain, &ln1_bias, &ffn_w1, &ffn_b1, &ffn_w2, &ffn_b2, &ln2_gain, &ln2_bias};
    }
    static std::vector<std::string> names(const std::string& prefix) {
        std::vector<std::string> out;
        for (const char* n : {"wq", "wk", "wv", "wo", "ln1_gain", "ln1_bias", "ffn_w1", "ffn_b1", "ffn_w2", "ffn_b2",
                              "ln2_gain", "ln2_bias"})
            out.push_back(prefix + "." + n);
        return out;
    }
};

/// Residual block x + (act(x·w1 + b1)·w2 + b2).
struct ResBlockParams {
    Matrix w1, b1, w2, b2;

    std::vector<Matrix*> tensors() { return {&w1, &b1, &w2, &b2}; }
};

struct NetworkParams {
    Matrix emb_w, emb_b;  // 1×d_e each
    Matrix pos;           // 2L×d_e, empty when the position table is disabled
    EncoderParams freq;
    Matrix proj_w, proj_b;  // N×d_p, 1×d_p
    EncoderParams temporal;
    std::vector<ResBlockParams> decoder;

    /// Every learnable tensor in a fixed order (the serialization order).
    std::vector<Matrix*> tensors() {
        std::vector<Matrix*> out{&emb_w, &emb_b};
        if (pos.size() > 0) out.push_back(&pos);
        for (Matrix* m : freq.tensors()) out.push_back(m);
        out.push_back(&proj_w);
        out.push_back(&proj_b);
        for (Matrix* m : temporal.tensors()) out.push_back(m);
        for (ResBlockParams& b : decoder)
            for (Matrix* m : b.tensors()) out.push_back(m);
        return out;
    }

    std::vector<const Matrix*> tensors() const {
        std::vector<const Matrix*> out;
        for (Matrix* m : const_cast<NetworkParams*>(this)->tensors()) out.push_back(m);
        return out;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out{"emb_w", "emb_b"};
        if (pos.size() > 0) out.push_back("pos");
        for (auto& n : EncoderParams::names("freq")) out.push_back(n);
        out.push_back("proj_w");
        out.push_back("proj_b");
        for (auto& n : EncoderParams::names("temporal")) out.push_back(n);
        for (std::size_t b = 0; b < decoder.size(); ++b)
            for (const char* n : {"w1", "b1", "w2", "b2"}) out.push_back("decoder" + std::to_string(b) + "." + n);
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Matrix* m : tensors()) n += static_cast<std::size_t>(m->size());
        return n;
    }

    bool finite() const {
        for (const Matrix* m : tensors())
            if (!m->allFinite()) return false;
        return true;
    }
};

namespace detail {

inline Matrix uniform_fan_in(Index rows, Index cols, Index fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

inline EncoderParams init_encoder(Index d, Index ffn, std::mt19937_64& rng) {
    EncoderParams e;
    e.wq = uniform_fan_in(d, d, d, rng);
    e.wk = uniform_fan_in(d, d, d, rng);
    e.wv = uniform_fan_in(d, d, d, rng);
    e.wo = uniform_fan_in(d, d, d, rng);
    e.ln1_gain = Matrix::Ones(1, d);
    e.ln1_bias = Matrix::Zero(1, d);
    e.ffn_w1 = uniform_fan_in(d, ffn, d, rng);
    e.ffn_b1 = Matrix::Zero(1, ffn);
    e.ffn_w2 = uniform_fan_in(ffn, d, ffn, rng);
    e.ffn_b2 = Matrix::Zero(1, d);
    e.ln2_gain = Matrix::Ones(1, d);
    e.ln2_bias = Matrix::Zero(1, d);
    return e;
}

}  // namespace detail

/// Uniform fan-in initialization U(±1/√fan_in) for weights, zero biases,
/// unit layer-norm gains. Deterministic in cfg.init_seed.
inline NetworkParams init_params(const AmmseConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.init_seed);
    const Index de = cfg.embed_dim(), dp = cfg.proj_dim(), hidden = cfg.resolved_decoder_hidden();
    NetworkParams p;
    p.emb_w = detail::uniform_fan_in(1, de, 1, rng);
    p.emb_b = Matrix::Zero(1, de);
    if (cfg.position_table) p.pos = detail::uniform_fan_in(cfg.tokens(), de, 1, rng);
    p.freq = detail::init_encoder(de, cfg.freq_ffn_width(), rng);
    p.proj_w = detail::uniform_fan_in(de, dp, de, rng);
    p.proj_b = Matrix::Zero(1, dp);
    p.temporal = detail::init_encoder(dp, cfg.temporal_ffn_width(), rng);
    for (int b = 0; b < cfg.decoder_blocks; ++b) {
        ResBlockParams r;
        r.w1 = detail::uniform_fan_in(dp, hidden, dp, rng);
        r.b1 = Matrix::Zero(1, hidden);
        r.w2 = detail::uniform_fan_in(hidden, dp, hidden, rng);
        r.b2 = Matrix::Zero(1, dp);
        p.decoder.push_back(std::move(r));
    }
    return p;
}

/// Throws unless every tensor has the shape implied by cfg.
inline void check_param_shapes(const NetworkParams& p, const AmmseConfig& cfg) {
    NetworkParams ref = init_params(cfg);
    const auto got = p.tensors();
    const auto want = ref.tensors();
    require_shape(got.size() == want.size(), "network parameters: " + std::to_string(got.size()) +
                                                 " tensors, expected " + std::to_string(want.size()));
    const auto names = ref.names();
    for (std::size_t i = 0; i < got.size(); ++i)
        require_shape(got[i]->rows() == want[i]->rows() && got[i]->cols() == want[i]->cols(),
                      "network parameter " + names[i] + ": " + shape_of(*got[i]) + ", expected " + shape_of(*want[i]));
}

// Single-sample forward stages, composed from the numerics primitives.

/// Row i = x_i·P_emb + b_emb.
inline Matrix embed_pilots(const Vector& x_in, const Matrix& emb_w, const Matrix& emb_b) {
    require_shape(emb_w.rows() == 1 && emb_b.rows() == 1 && emb_w.cols() == emb_b.cols(),
                  "embed_pilots: P_emb " + shape_of(emb_w) + ", b_emb " + shape_of(emb_b));
    Matrix out = x_in * emb_w;
    out.rowwise() += emb_b.row(0);
    return out;
}

inline Matrix encoder_block(const Matrix& x, const EncoderParams& e, int heads, Activation act) {
    const MhaParams mha{e.wq, e.wk, e.wv, e.wo, heads};
    const Matrix a = layer_norm(x + multi_head_attention(x, mha), e.ln1_gain.row(0), e.ln1_bias.row(0));
    const FfnParams ffn{e.ffn_w1, e.ffn_b1.row(0), e.ffn_w2, e.ffn_b2.row(0)};
    return layer_norm(a + feed_forward(a, ffn, act), e.ln2_gain.row(0), e.ln2_bias.row(0));
}

inline Matrix frequency_encode(const Matrix& x_emb, const NetworkParams& p, const AmmseConfig& cfg) {
    require_shape(x_emb.rows() == cfg.tokens() && x_emb.cols() == cfg.embed_dim(),
                  "frequency_encode: input " + shape_of(x_emb) + ", expected " +
                      shape_str(cfg.tokens(), cfg.embed_dim()));
    return encoder_block(x_emb, p.freq, cfg.resolved_freq_heads(), cfg.activation);
}

/// Row i = y_i·P_proj + b_proj.
inline Matrix project(const Matrix& y_freq, const Matrix& proj_w, const Matrix& proj_b) {
    return affine_rows(y_freq, proj_w, proj_b.row(0));
}

inline Matrix temporal_encode(const Matrix& x_proj, const NetworkParams& p, const AmmseConfig& cfg) {
    require_shape(x_proj.rows() == cfg.tokens() && x_proj.cols() == cfg.proj_dim(),
                  "temporal_encode: input " + shape_of(x_proj) + ", expected " +
                      shape_str(cfg.tokens(), cfg.proj_dim()));
    return encoder_block(x_proj, p.temporal, cfg.resolved_temporal_heads(), cfg.activation);
}

inline Matrix decode(const Matrix& y_temp, const std::vector<ResBlockParams>& blocks, Activation act) {
    Matrix x = y_temp;
    for (const ResBlockParams& b : blocks)
        x += affine_rows(apply_activation(affine_rows(x, b.w1, b.b1.row(0)), act), b.w2, b.b2.row(0));
    return x;
}

/// x_in (2L) → Y_Dec (2L × NM).
inline Matrix forward(const NetworkParams& p, const AmmseConfig& cfg, const Vector& x_in) {
    require_shape(x_in.size() == cfg.tokens(), "forward: x_in length " + std::to_string(x_in.size()) +
                                                  ", expected " + std::to_string(cfg.tokens()));
    Matrix z = embed_pilots(x_in, p.emb_w, p.emb_b);
    if (p.pos.size() > 0) z += p.pos;
    z = frequency_encode(z, p, cfg);
    z = project(z, p.proj_w, p.proj_b);
    z = temporal_encode(z, p, cfg);
    return decode(z, p.decoder, cfg.activation);
}

}  // namespace amselab

#endif  // AMSELAB_AMMSE_NETWORK_HPP
