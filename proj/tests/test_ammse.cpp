#include "amselab/ammse/filter.hpp"
#include "amselab/ammse/flops.hpp"
#include "amselab/ammse/graph.hpp"
#include "amselab/ammse/inference.hpp"
#include "amselab/ammse/network.hpp"
#include "amselab/channel/correlation.hpp"
#include "amselab/classical/lmmse.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace amselab;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

CMatrix random_cmatrix(Index r, Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = cdouble(g(rng), g(rng));
    return m;
}

AmmseConfig desk_config() { return AmmseConfig{}; }

void zero_all(NetworkParams& p) {
    for (Matrix* m : p.tensors()) m->setZero();
}

}  // namespace

TEST(Config, Defaults) {
    const AmmseConfig c = desk_config();
    EXPECT_EQ(c.embed_dim(), 24);
    EXPECT_EQ(c.proj_dim(), 336);
    EXPECT_EQ(c.tokens(), 48);
    EXPECT_EQ(c.resolved_freq_heads(), 12);
    EXPECT_EQ(c.resolved_temporal_heads(), 14);
    EXPECT_EQ(c.resolved_decoder_hidden(), 336);
    EXPECT_NO_THROW(c.validate());
    AmmseConfig bad = c;
    bad.freq_heads = 5;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.temporal_heads = 5;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Embedding, Examples) {
    const Vector x = random_matrix(48, 1, 1).col(0);
    const Matrix w = random_matrix(1, 24, 2), b = random_matrix(1, 24, 3);
    const Matrix z0 = embed_pilots(Vector::Zero(48), w, b);
    for (Index i = 0; i < 48; ++i) EXPECT_EQ(z0.row(i), b.row(0));
    EXPECT_EQ(embed_pilots(x, Matrix::Zero(1, 24), Matrix::Zero(1, 24)), Matrix::Zero(48, 24));
    const Matrix z = embed_pilots(x, w, b);
    for (Index i = 0; i < 48; ++i)
        for (Index j = 0; j < 24; ++j) EXPECT_NEAR(z(i, j), x(i) * w(0, j) + b(0, j), 1e-12);
}

TEST(Encoders, ZeroInputZeroAffineGivesBiasRows) {
    const AmmseConfig cfg = desk_config();
    NetworkParams p = init_params(cfg);
    for (EncoderParams* e : {&p.freq, &p.temporal}) {
        e->ffn_b1.setZero();
        e->ffn_b2.setZero();
        e->ln2_bias = random_matrix(1, e->ln2_bias.cols(), 5);
    }
    const Matrix yf = frequency_encode(Matrix::Zero(48, 24), p, cfg);
    const Matrix yt = temporal_encode(Matrix::Zero(48, 336), p, cfg);
    for (Index i = 0; i < 48; ++i) {
        EXPECT_LT((yf.row(i) - p.freq.ln2_bias.row(0)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((yt.row(i) - p.temporal.ln2_bias.row(0)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Encoders, ShapeContract) {
    for (int n : {8, 24}) {
        AmmseConfig cfg;
        cfg.subcarriers = n;
        cfg.symbols = 4;
        cfg.pilots = n;
        cfg.freq_heads = 2;
        cfg.decoder_blocks = 1;
        const NetworkParams p = init_params(cfg);
        const Vector x = random_matrix(2 * n, 1, 6).col(0);
        const Matrix emb = embed_pilots(x, p.emb_w, p.emb_b);
        ASSERT_EQ(emb.rows(), 2 * n);
        const Matrix f = frequency_encode(emb, p, cfg);
        EXPECT_EQ(f.rows(), 2 * n);
        EXPECT_EQ(f.cols(), n);
        const Matrix t = temporal_encode(project(f, p.proj_w, p.proj_b), p, cfg);
        EXPECT_EQ(t.rows(), 2 * n);
        EXPECT_EQ(t.cols(), 4 * n);
        const Matrix y = forward(p, cfg, x);
        EXPECT_EQ(y.rows(), 2 * n);
        EXPECT_EQ(y.cols(), 4 * n);
        const AmmseFilter w = assemble_filter(y, n, 4);
        EXPECT_EQ(w.w.rows(), 4 * n);
        EXPECT_EQ(w.w.cols(), n);
    }
    const AmmseConfig cfg = desk_config();
    const NetworkParams p = init_params(cfg);
    EXPECT_THROW(frequency_encode(Matrix::Zero(48, 23), p, cfg), ShapeError);
    EXPECT_THROW(temporal_encode(Matrix::Zero(47, 336), p, cfg), ShapeError);
}

TEST(Encoders, FrequencyBlockMatchesPrimitiveChain) {
    AmmseConfig cfg = desk_config();
    cfg.freq_heads = 2;
    NetworkParams p = init_params(cfg);
    p.freq.ln1_gain = random_matrix(1, 24, 7);
    p.freq.ln2_bias = random_matrix(1, 24, 8);
    const Matrix x = random_matrix(48, 24, 9);
    const Matrix a = layer_norm(x + multi_head_attention(x, MhaParams{p.freq.wq, p.freq.wk, p.freq.wv, p.freq.wo, 2}),
                                p.freq.ln1_gain.row(0), p.freq.ln1_bias.row(0));
    const Matrix h = (a * p.freq.ffn_w1).rowwise() + p.freq.ffn_b1.row(0);
    const Matrix f = (h.cwiseMax(0.0) * p.freq.ffn_w2).rowwise() + p.freq.ffn_b2.row(0);
    const Matrix expected = layer_norm(a + f, p.freq.ln2_gain.row(0), p.freq.ln2_bias.row(0));
    EXPECT_LT((frequency_encode(x, p, cfg) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Encoders, TemporalBlockMatchesPrimitiveChain) {
    const AmmseConfig cfg = desk_config();
    const NetworkParams p = init_params(cfg);
    const Matrix x = random_matrix(48, 336, 10);
    const EncoderParams& e = p.temporal;
    const Matrix a = layer_norm(x + multi_head_attention(x, MhaParams{e.wq, e.wk, e.wv, e.wo, 14}), e.ln1_gain.row(0),
                                e.ln1_bias.row(0));
    const Matrix ffn = feed_forward(a, FfnParams{e.ffn_w1, e.ffn_b1.row(0), e.ffn_w2, e.ffn_b2.row(0)});
    const Matrix expected = layer_norm(a + ffn, e.ln2_gain.row(0), e.ln2_bias.row(0));
    EXPECT_LT((temporal_encode(x, p, cfg) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, Examples) {
    const Matrix w = random_matrix(24, 336, 11), b = random_matrix(1, 336, 12);
    const Matrix z = project(Matrix::Zero(48, 24), w, b);
    for (Index i = 0; i < 48; ++i) EXPECT_EQ(z.row(i), b.row(0));
    Matrix pad = Matrix::Zero(24, 336);
    pad.leftCols(24).setIdentity();
    const Matrix y = random_matrix(48, 24, 13);
    EXPECT_EQ(project(y, pad, Matrix::Zero(1, 336)).leftCols(24), y);
    const Matrix out = project(y, w, b);
    for (Index i = 0; i < 48; i += 7)
        for (Index j = 0; j < 336; j += 13) {
            double acc = b(0, j);
            for (Index k = 0; k < 24; ++k) acc += y(i, k) * w(k, j);
            EXPECT_NEAR(out(i, j), acc, 1e-12);
        }
}

TEST(Decoder, ZeroBlocksAreIdentity) {
    const AmmseConfig cfg = desk_config();
    NetworkParams p = init_params(cfg);
    for (ResBlockParams& b : p.decoder)
        for (Matrix* m : b.tensors()) m->setZero();
    const Matrix y = random_matrix(48, 336, 14);
    EXPECT_EQ(decode(y, p.decoder, Activation::relu), y);
}

TEST(Decoder, SingleBlockExplicit) {
    const ResBlockParams b{random_matrix(3, 4, 15, 0.1), random_matrix(1, 4, 16, 0.1), random_matrix(4, 3, 17, 0.1),
                           random_matrix(1, 3, 18, 0.1)};
    const Matrix x = random_matrix(2, 3, 19);
    const Matrix out = decode(x, {b}, Activation::relu);
    for (Index i = 0; i < 2; ++i)
        for (Index o = 0; o < 3; ++o) {
            double acc = x(i, o) + b.b2(0, o);
            for (Index h = 0; h < 4; ++h) {
                double z = b.b1(0, h);
                for (Index c = 0; c < 3; ++c) z += x(i, c) * b.w1(c, h);
                acc += std::max(z, 0.0) * b.w2(h, o);
            }
            EXPECT_NEAR(out(i, o), acc, 1e-12);
        }
    EXPECT_EQ(decode(random_matrix(48, 336, 20), init_params(desk_config()).decoder, Activation::relu).cols(), 336);
}

TEST(Assemble, Examples) {
    EXPECT_EQ(assemble_filter(Matrix::Zero(48, 336), 24, 14).w, CMatrix::Zero(336, 24));
    Matrix y = random_matrix(48, 336, 21);
    y.bottomRows(24).setZero();
    EXPECT_EQ(assemble_filter(y, 24, 14).w.imag().cwiseAbs().maxCoeff(), 0.0);
    const Matrix r = random_matrix(48, 336, 22);
    const AmmseFilter f = assemble_filter(r, 24, 14);
    EXPECT_EQ(disassemble_filter(f.w), r);
    EXPECT_EQ(f.w(5, 3), cdouble(r(3, 5), r(27, 5)));
    EXPECT_THROW(assemble_filter(Matrix::Zero(47, 336), 24, 14), ShapeError);
}

TEST(Forward, BatchedGraphMatchesSingleSample) {
    const AmmseConfig cfg = desk_config();
    const NetworkParams p = init_params(cfg);
    const Matrix xb = random_matrix(3, 48, 23);
    const std::vector<Matrix> batched = forward_batch(p, cfg, xb);
    for (Index b = 0; b < 3; ++b) {
        const Matrix single = forward(p, cfg, xb.row(b).transpose());
        EXPECT_LT((batched[static_cast<std::size_t>(b)] - single).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(forward(p, cfg, xb.row(b).transpose()), single);
    }
}

TEST(Forward, PositionTableTogglesParameterCount) {
    AmmseConfig with = desk_config(), without = desk_config();
    without.position_table = false;
    EXPECT_EQ(init_params(with).parameter_count(), init_params(without).parameter_count() + 48 * 24);
    EXPECT_EQ(init_params(with).names().size(), init_params(with).tensors().size());
}

TEST(Estimate, Examples) {
    AmmseFilter zero{CMatrix::Zero(336, 24), {}, {}, 24, 14};
    EXPECT_EQ(estimate(zero, CVector::Ones(24)), CMatrix::Zero(24, 14));
    const AmmseFilter f{random_cmatrix(336, 24, 24), {}, {}, 24, 14};
    const AmmseFilter full_rank = factor_svd(f, 24);
    const CVector y = random_cmatrix(24, 1, 25).col(0);
    EXPECT_LT((estimate(full_rank, y) - estimate(f, y)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((full_rank.effective() - f.w).norm(), 1e-10 * f.w.norm());
    EXPECT_THROW(estimate(f, CVector::Ones(23)), ShapeError);

    const GridSpec g = scenario_grid(semi_urban_scenario());
    const PilotPattern p = build_pilot_pattern(g, {2, 11}, 2);
    const LmmseFilter lm = lmmse_filter(pilot_covariances(scenario_covariance(semi_urban_scenario(), g), p), 0.01);
    const AmmseFilter as_ammse{lm.w, {}, {}, 24, 14};
    const PilotObservation obs = PilotObservation::from_pilots(y, 20.0);
    EXPECT_LT((estimate(as_ammse, obs) - lmmse_estimate(lm, obs, 24, 14)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RankAdapt, IdentityAdapterKeepsFilter) {
    const AmmseFilter f{random_cmatrix(336, 24, 26), {}, {}, 24, 14};
    const AmmseFilter a = rank_adapt(f, identity_adapter(24));
    EXPECT_EQ(a.rank(), 24);
    EXPECT_LT((a.effective() - f.w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RankAdapt, RankBoundForRandomAdapters) {
    const AmmseFilter f{random_cmatrix(336, 24, 27), {}, {}, 24, 14};
    for (int r = 1; r <= 24; ++r) {
        const RankAdapter ad{random_matrix(24, r, 100 + r), random_matrix(24, r, 200 + r)};
        const Vector s = linalg::singular_values(rank_adapt(f, ad).effective());
        for (Index i = r; i < s.size(); ++i) EXPECT_LE(s(i), 1e-10 * s(0)) << "r=" << r << " i=" << i;
    }
}

TEST(RankAdapt, Errors) {
    const AmmseFilter f{random_cmatrix(336, 24, 28), {}, {}, 24, 14};
    EXPECT_THROW(rank_adapt(f, RankAdapter{Matrix::Zero(24, 0), Matrix::Zero(24, 0)}), ConfigError);
    EXPECT_THROW(rank_adapt(f, RankAdapter{Matrix::Zero(23, 2), Matrix::Zero(23, 2)}), ShapeError);
    EXPECT_THROW(principal_adapter(f.w, 25), ConfigError);
    EXPECT_THROW(factor_svd(f, 0), ConfigError);
}

TEST(RankAdapt, PrincipalAdapterIsOrthonormalProjector) {
    const CMatrix w = random_cmatrix(336, 24, 29);
    const RankAdapter a = principal_adapter(w, 6);
    EXPECT_LT((a.u.transpose() * a.u - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(a.u, a.v);
}

TEST(RankAdapt, AdaptRowsMatchesAssembledProduct) {
    const Matrix y = random_matrix(96, 336, 30);
    const Matrix u = random_matrix(24, 5, 31), v = random_matrix(24, 5, 32);
    ad::Tape t;
    const Matrix out = t.value(adapt_rows(t.constant(y), t.constant(u), t.constant(v)));
    for (Index b = 0; b < 2; ++b) {
        const CMatrix expect = assemble_filter(y.middleRows(48 * b, 48), 24, 14).w * (u * v.transpose()).cast<cdouble>();
        EXPECT_LT((assemble_filter(out.middleRows(48 * b, 48), 24, 14).w - expect).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(RankAdapt, AdaptRowsGradients) {
    const Matrix y0 = random_matrix(8, 3, 33), u0 = random_matrix(4, 2, 34), v0 = random_matrix(4, 2, 35);
    const Matrix target = random_matrix(8, 3, 36);
    auto run = [&](const Matrix& y, const Matrix& u, const Matrix& v, std::vector<Matrix>* g) {
        ad::Tape t;
        const ad::Var vy = t.variable(y), vu = t.variable(u), vv = t.variable(v);
        const ad::Var l = ad::loss(adapt_rows(vy, vu, vv), target, LossKind::mse, 1.0);
        t.backward(l);
        if (g) *g = {t.grad(vy), t.grad(vu), t.grad(vv)};
        return t.value(l)(0, 0);
    };
    std::vector<Matrix> g;
    run(y0, u0, v0, &g);
    const std::vector<Matrix> base{y0, u0, v0};
    for (std::size_t k = 0; k < 3; ++k)
        for (Index i = 0; i < base[k].size(); ++i) {
            std::vector<Matrix> p = base, m = base;
            p[k].data()[i] += 1e-6;
            m[k].data()[i] -= 1e-6;
            const double fd = (run(p[0], p[1], p[2], nullptr) - run(m[0], m[1], m[2], nullptr)) / 2e-6;
            EXPECT_NEAR(g[k].data()[i], fd, 1e-7);
        }
}

TEST(Audit, ExportedFilterUsesOnlyMultiplyAdd) {
    const AmmseFilter f{random_cmatrix(336, 24, 37), {}, {}, 24, 14};
    const LinearInference<AuditedReal> audited(inference_stages(f));
    op_tally() = {};
    const CVector y = random_cmatrix(24, 1, 38).col(0);
    const CVector out = audited.apply(y);
    EXPECT_EQ(op_tally().nonlinear, 0u);
    EXPECT_EQ(op_tally().total(), flops("ammse", FlopsDims{24, 14, 24, 2}));
    EXPECT_LT((out - linalg::vec(estimate(f, y))).cwiseAbs().maxCoeff(), 1e-12);

    const AmmseFilter fac = factor_svd(f, 6);
    op_tally() = {};
    LinearInference<AuditedReal>(inference_stages(fac)).apply(y);
    EXPECT_EQ(op_tally().nonlinear, 0u);
    EXPECT_EQ(op_tally().total(), flops("ra-ammse", FlopsDims{24, 14, 24, 2}, 6));
}

TEST(Audit, TallyDetectsNonlinearity) {
    op_tally() = {};
    const AuditedReal a(2.0), b(3.0);
    (void)(a * b + a);
    EXPECT_EQ(op_tally().nonlinear, 0u);
    (void)exp(a);
    (void)(a / b);
    EXPECT_EQ(op_tally().nonlinear, 2u);
}

TEST(Flops, Formulas) {
    EXPECT_EQ(flops("ra-ammse", FlopsDims{1, 1, 1, 1}, 1), 16u);
    const FlopsDims table{};
    EXPECT_EQ(flops("ammse", table), 580608u);
    EXPECT_EQ(flops("lmmse", table), 580608u);
    for (std::uint64_t r : {1u, 12u, 36u, 72u}) EXPECT_EQ(flops("ra-ammse", table, r), 8640u * r);
    EXPECT_NEAR(complexity_ratio(table, 12), 12960.0 / 72576.0, 1e-15);
    EXPECT_NEAR(complexity_ratio(table, 12), 0.1786, 5e-5);
    EXPECT_THROW(flops("channelnet", table), ConfigError);
    EXPECT_EQ(flops("ls", table), 6u * 72 + 6u * (1008 - 72));
    std::uint64_t prev = 0;
    for (std::uint64_t r : {7u, 36u, 72u}) {
        EXPECT_GT(flops("ra-ammse", table, r), prev);
        prev = flops("ra-ammse", table, r);
    }
}

TEST(Flops, ReportedTableMetadata) {
    bool saw_ls = false, saw_lmmse = false, saw_ra = false;
    for (const ReportedFlops& r : reported_flops_table()) {
        if (r.method == "LS") saw_ls = r.reported == "15K";
        if (r.method == "LMMSE") saw_lmmse = r.reported == "21M";
        if (r.method == "RA-A-MMSE") saw_ra = r.reported == "8608r";
    }
    EXPECT_TRUE(saw_ls && saw_lmmse && saw_ra);
}

TEST(Params, InitIsDeterministicAndFinite) {
    const NetworkParams a = init_params(desk_config()), b = init_params(desk_config());
    const auto ta = a.tensors(), tb = b.tensors();
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(*ta[i], *tb[i]);
    EXPECT_TRUE(a.finite());
    NetworkParams z = a;
    zero_all(z);
    EXPECT_NO_THROW(check_param_shapes(z, desk_config()));
    AmmseConfig other = desk_config();
    other.decoder_blocks = 3;
    EXPECT_THROW(check_param_shapes(a, other), ShapeError);
}
