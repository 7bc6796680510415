#include "amselab/numerics/adam.hpp"
#include "amselab/numerics/autodiff.hpp"
#include "amselab/numerics/layers.hpp"
#include "amselab/numerics/linalg.hpp"
#include "amselab/numerics/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace amselab;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

// Elementwise evaluation of softmax(QKᵀ/√d)V.
Matrix attention_oracle(const Matrix& q, const Matrix& k, const Matrix& v) {
    const Index s = q.rows(), t = k.rows();
    Matrix out = Matrix::Zero(s, v.cols());
    for (Index i = 0; i < s; ++i) {
        std::vector<double> score(static_cast<std::size_t>(t));
        double mx = -1e300;
        for (Index j = 0; j < t; ++j) {
            double acc = 0.0;
            for (Index c = 0; c < q.cols(); ++c) acc += q(i, c) * k(j, c);
            score[static_cast<std::size_t>(j)] = acc / std::sqrt(static_cast<double>(q.cols()));
            mx = std::max(mx, score[static_cast<std::size_t>(j)]);
        }
        double z = 0.0;
        for (double& e : score) z += (e = std::exp(e - mx));
        for (Index j = 0; j < t; ++j)
            for (Index c = 0; c < v.cols(); ++c) out(i, c) += score[static_cast<std::size_t>(j)] / z * v(j, c);
    }
    return out;
}

}  // namespace

TEST(Attention, SingleScoreReturnsValue) {
    Matrix q{{1.0}}, k{{1.0}}, v{{5.0}};
    EXPECT_DOUBLE_EQ(scaled_dot_product_attention(q, k, v)(0, 0), 5.0);
}

TEST(Attention, UniformScoresAverageValues) {
    const Matrix q = Matrix::Zero(2, 3);
    const Matrix k = random_matrix(4, 3, 1);
    const Matrix v = random_matrix(4, 2, 2);
    const Matrix out = scaled_dot_product_attention(q, k, v);
    for (Index i = 0; i < 2; ++i)
        for (Index c = 0; c < 2; ++c) EXPECT_NEAR(out(i, c), v.col(c).mean(), 1e-15);
}

TEST(Attention, MatchesElementwiseFormula) {
    const Matrix q = random_matrix(3, 2, 3), k = random_matrix(3, 2, 4), v = random_matrix(3, 2, 5);
    EXPECT_LT((scaled_dot_product_attention(q, k, v) - attention_oracle(q, k, v)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, SoftmaxRowsSumToOne) {
    const Matrix p = softmax_rows(20.0 * random_matrix(6, 9, 6));
    for (Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
}

TEST(Attention, RejectsMismatchedInnerDimension) {
    EXPECT_THROW(scaled_dot_product_attention(random_matrix(2, 3, 1), random_matrix(2, 2, 2), random_matrix(2, 2, 3)),
                 ShapeError);
}

TEST(MultiHead, IdentityProjectionsReduceToAttention) {
    const Matrix x = random_matrix(5, 4, 7);
    const Matrix id = Matrix::Identity(4, 4);
    const MhaParams p{id, id, id, id, 1};
    EXPECT_EQ(multi_head_attention(x, p), scaled_dot_product_attention(x, x, x));
}

TEST(MultiHead, ZeroOutputProjection) {
    const Matrix x = random_matrix(5, 4, 8);
    const MhaParams p{random_matrix(4, 4, 1), random_matrix(4, 4, 2), random_matrix(4, 4, 3), Matrix::Zero(4, 4), 2};
    EXPECT_EQ(multi_head_attention(x, p).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MultiHead, TwoHeadsMatchHandEvaluation) {
    const Matrix x = random_matrix(4, 4, 9);
    const MhaParams p{random_matrix(4, 4, 10), random_matrix(4, 4, 11), random_matrix(4, 4, 12), random_matrix(4, 4, 13),
                      2};
    Matrix concat(4, 4);
    for (int h = 0; h < 2; ++h) {
        const Matrix q = x * p.wq.middleCols(2 * h, 2), k = x * p.wk.middleCols(2 * h, 2),
                     v = x * p.wv.middleCols(2 * h, 2);
        concat.middleCols(2 * h, 2) = attention_oracle(q, k, v);
    }
    EXPECT_LT((multi_head_attention(x, p) - concat * p.wo).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MultiHead, IndivisibleWidthIsConfigError) {
    const Matrix id = Matrix::Identity(4, 4);
    EXPECT_THROW(multi_head_attention(random_matrix(2, 4, 1), MhaParams{id, id, id, id, 3}), ConfigError);
}

TEST(LayerNorm, ConstantRowCollapsesToBias) {
    const Matrix x = Matrix::Constant(1, 5, 3.25);
    EXPECT_EQ(layer_norm(x, RowVector::Ones(5), RowVector::Zero(5)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LayerNorm, NormalizedRowIsFixed) {
    Matrix x{{1.0, -1.0}};
    const Matrix y = layer_norm(x, RowVector::Ones(2), RowVector::Zero(2), 1e-15);
    EXPECT_NEAR(y(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(y(0, 1), -1.0, 1e-12);
}

TEST(LayerNorm, MatchesMeanVarianceFormula) {
    const Matrix x = random_matrix(3, 7, 14);
    const RowVector g = random_matrix(1, 7, 15).row(0), b = random_matrix(1, 7, 16).row(0);
    const Matrix y = layer_norm(x, g, b);
    for (Index i = 0; i < 3; ++i) {
        double mean = 0.0, var = 0.0;
        for (Index c = 0; c < 7; ++c) mean += x(i, c) / 7.0;
        for (Index c = 0; c < 7; ++c) var += (x(i, c) - mean) * (x(i, c) - mean) / 7.0;
        for (Index c = 0; c < 7; ++c)
            EXPECT_NEAR(y(i, c), g(c) * (x(i, c) - mean) / std::sqrt(var + 1e-5) + b(c), 1e-12);
    }
}

TEST(FeedForward, ZeroWeightsGiveZero) {
    const FfnParams p{Matrix::Zero(3, 6), RowVector::Zero(6), Matrix::Zero(6, 3), RowVector::Zero(3)};
    EXPECT_EQ(feed_forward(random_matrix(2, 3, 1), p).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FeedForward, ReluPassThroughForNonNegativeInput) {
    const Matrix x = random_matrix(2, 3, 2).cwiseAbs();
    const FfnParams p{Matrix::Identity(3, 3), RowVector::Zero(3), Matrix::Identity(3, 3), RowVector::Zero(3)};
    EXPECT_EQ(feed_forward(x, p), x);
}

TEST(FeedForward, MatchesExplicitTwoLayerEvaluation) {
    const Matrix x = random_matrix(2, 3, 3);
    const FfnParams p{random_matrix(3, 5, 4), random_matrix(1, 5, 5).row(0), random_matrix(5, 3, 6),
                      random_matrix(1, 3, 7).row(0)};
    for (Activation act : {Activation::relu, Activation::gelu}) {
        const Matrix y = feed_forward(x, p, act);
        for (Index i = 0; i < 2; ++i)
            for (Index o = 0; o < 3; ++o) {
                double acc = p.b2(o);
                for (Index h = 0; h < 5; ++h) {
                    double z = p.b1(h);
                    for (Index c = 0; c < 3; ++c) z += x(i, c) * p.w1(c, h);
                    const double a = act == Activation::relu ? std::max(z, 0.0)
                                                             : z * 0.5 * std::erfc(-z / std::sqrt(2.0));
                    acc += a * p.w2(h, o);
                }
                EXPECT_NEAR(y(i, o), acc, 1e-12);
            }
    }
}

TEST(Huber, ClosedFormValues) {
    const LossResult zero = huber_loss(Matrix::Zero(1, 1), 1.0);
    EXPECT_EQ(zero.value, 0.0);
    EXPECT_EQ(zero.gradient(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(huber_loss(Matrix::Constant(1, 1, 3.0), 1.0).value, 2.5);
    EXPECT_DOUBLE_EQ(huber_loss(Matrix::Constant(1, 1, -3.0), 1.0).gradient(0, 0), -1.0);
}

TEST(Huber, ContinuousAtThreshold) {
    const double d = 0.7;
    EXPECT_NEAR(huber_value(d * (1 - 1e-12), d), d * d / 2, 1e-12);
    EXPECT_NEAR(huber_value(d * (1 + 1e-12), d), d * d / 2, 1e-12);
    EXPECT_NEAR(huber_slope(d * (1 - 1e-12), d), d, 1e-11);
    EXPECT_NEAR(huber_slope(d * (1 + 1e-12), d), d, 1e-11);
}

TEST(Huber, EqualsHalfMseInsideThreshold) {
    const Matrix a = 0.1 * random_matrix(4, 4, 17);
    const double delta = a.cwiseAbs().maxCoeff() + 1e-3;
    EXPECT_NEAR(huber_loss(a, delta).value, 0.5 * mse_loss(a, Matrix::Zero(4, 4)).value, 1e-15);
}

TEST(Huber, RejectsNonPositiveThreshold) {
    EXPECT_THROW(huber_loss(Matrix::Ones(1, 1), 0.0), ConfigError);
    EXPECT_THROW(huber_loss(Matrix::Ones(1, 1), -1.0), ConfigError);
}

TEST(Mse, Values) {
    const Matrix h = random_matrix(3, 4, 18);
    EXPECT_EQ(mse_loss(h, h).value, 0.0);
    const Matrix shifted = (h.array() + 1.0).matrix();
    EXPECT_NEAR(mse_loss(shifted, h).value, 1.0, 1e-15);
    const Matrix e = random_matrix(3, 4, 19);
    double acc = 0.0;
    for (Index i = 0; i < e.size(); ++i) acc += (e.data()[i] - h.data()[i]) * (e.data()[i] - h.data()[i]);
    const LossResult r = mse_loss(e, h);
    EXPECT_NEAR(r.value, acc / 12.0, 1e-12);
    EXPECT_LT((r.gradient - (2.0 / 12.0) * (e - h)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(mse_loss(e, Matrix::Zero(4, 3)), ShapeError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    Matrix p = random_matrix(2, 2, 20);
    const Matrix before = p;
    AdamState s(AdamHyper{});
    std::vector<Matrix*> ps{&p};
    const std::vector<Matrix> gs{Matrix::Zero(2, 2)};
    for (int i = 0; i < 3; ++i) adam_step(ps, gs, s);
    EXPECT_EQ(p, before);
    EXPECT_EQ(s.step, 3);
}

TEST(Adam, FirstStepMovesBySignedLearningRate) {
    Matrix p = Matrix::Zero(1, 2);
    AdamState s(AdamHyper{0.01, 0.9, 0.999, 1e-15});
    std::vector<Matrix*> ps{&p};
    adam_step(ps, std::vector<Matrix>{Matrix{{3.0, -0.2}}}, s);
    EXPECT_NEAR(p(0, 0), -0.01, 1e-12);
    EXPECT_NEAR(p(0, 1), 0.01, 1e-12);
}

TEST(Adam, QuadraticTrace) {
    Matrix theta = Matrix::Ones(1, 1);
    AdamState s(AdamHyper{});
    std::vector<Matrix*> ps{&theta};
    const double expected[] = {0.999000000005, 0.9980000262138343, 0.9970000960651408};
    for (double e : expected) {
        adam_step(ps, std::vector<Matrix>{2.0 * theta}, s);
        EXPECT_NEAR(theta(0, 0), e, 1e-12);
    }
}

TEST(Adam, Deterministic) {
    auto run = [] {
        Matrix p = random_matrix(3, 3, 21);
        AdamState s(AdamHyper{});
        std::vector<Matrix*> ps{&p};
        for (int i = 0; i < 5; ++i) adam_step(ps, std::vector<Matrix>{random_matrix(3, 3, 30 + i)}, s);
        return p;
    };
    const Matrix a = run(), b = run();
    EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * 9));
}

TEST(Autodiff, IdentityLossHasUnitGradient) {
    ad::Tape t;
    const ad::Var p = t.variable(Matrix::Constant(1, 1, 4.0));
    t.backward(p);
    EXPECT_EQ(t.grad(p)(0, 0), 1.0);
}

TEST(Autodiff, UnusedParameterHasZeroGradient) {
    ad::Tape t;
    const ad::Var used = t.variable(random_matrix(2, 2, 1));
    const ad::Var unused = t.variable(random_matrix(2, 2, 2));
    t.backward(ad::sum(used));
    EXPECT_EQ(t.grad(unused).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.grad(used), Matrix::Ones(2, 2));
}

TEST(Autodiff, NonScalarLossRejected) {
    ad::Tape t;
    const ad::Var p = t.variable(random_matrix(2, 1, 1));
    EXPECT_THROW(t.backward(p), ShapeError);
}

TEST(Autodiff, PrimitiveChainMatchesFiniteDifferences) {
    const Matrix x0 = random_matrix(6, 4, 40);
    std::vector<Matrix> params{random_matrix(4, 4, 41), random_matrix(4, 4, 42), random_matrix(4, 4, 43),
                               random_matrix(4, 4, 44), random_matrix(1, 4, 45), random_matrix(1, 4, 46),
                               random_matrix(4, 4, 47), random_matrix(3, 4, 48)};
    const Matrix target = random_matrix(6, 4, 49);
    auto evaluate = [&](const std::vector<Matrix>& ps, std::vector<Matrix>* grads) {
        ad::Tape t;
        std::vector<ad::Var> v;
        for (const Matrix& p : ps) v.push_back(t.variable(p));
        ad::Var x = t.constant(x0);
        ad::Var y = ad::multi_head_attention(x, v[0], v[1], v[2], v[3], 2, 3);
        y = ad::layer_norm(ad::add(x, y), v[4], v[5]);
        y = ad::activation(ad::matmul(y, v[6]), Activation::gelu);
        y = ad::add_tiled(y, v[7]);
        ad::Var l = ad::loss(y, target, LossKind::huber, 0.3);
        t.backward(l);
        if (grads)
            for (ad::Var p : v) grads->push_back(t.grad(p));
        return t.value(l)(0, 0);
    };
    std::vector<Matrix> grads;
    evaluate(params, &grads);
    const double h = 1e-6;
    for (std::size_t k = 0; k < params.size(); ++k)
        for (Index i = 0; i < params[k].size(); ++i) {
            std::vector<Matrix> plus = params, minus = params;
            plus[k].data()[i] += h;
            minus[k].data()[i] -= h;
            const double fd = (evaluate(plus, nullptr) - evaluate(minus, nullptr)) / (2 * h);
            EXPECT_LT(std::abs(grads[k].data()[i] - fd) / std::max(1.0, std::abs(fd)), 1e-6)
                << "param " << k << " entry " << i;
        }
}

TEST(Linalg, KronIndexing) {
    const CMatrix a = CMatrix::Random(2, 3), b = CMatrix::Random(4, 2);
    const CMatrix k = linalg::kron(a, b);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j)
            for (Index p = 0; p < 4; ++p)
                for (Index q = 0; q < 2; ++q) EXPECT_EQ(k(i * 4 + p, j * 2 + q), a(i, j) * b(p, q));
}

TEST(Linalg, HermitianSqrtSquaresBack) {
    const CMatrix g = CMatrix::Random(5, 5);
    const CMatrix a = g * g.adjoint();
    const CMatrix s = linalg::hermitian_sqrt(a);
    EXPECT_LT((s * s - a).norm(), 1e-10 * a.norm());
}

TEST(Linalg, RealStackRoundTrip) {
    const CVector z = CVector::Random(7);
    EXPECT_EQ(linalg::complex_unstack(linalg::real_stack(z)), z);
    EXPECT_THROW(linalg::complex_unstack(Vector::Zero(3)), ShapeError);
}

TEST(Linalg, PinvOfSingularMatrix) {
    CMatrix a = CMatrix::Zero(3, 3);
    a(0, 0) = 2.0;
    a(1, 1) = cdouble(0.0, 4.0);
    const CMatrix p = linalg::pinv(a);
    EXPECT_NEAR(std::abs(p(0, 0) - 0.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(p(1, 1) - cdouble(0.0, -0.25)), 0.0, 1e-15);
    EXPECT_EQ(p(2, 2), cdouble(0.0));
}
