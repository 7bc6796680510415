#include "amselab/channel/correlation.hpp"
#include "amselab/channel/sampler.hpp"
#include "amselab/classical/interpolation.hpp"
#include "amselab/classical/lmmse.hpp"
#include "amselab/classical/oned_lmmse.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace amselab;

namespace {

GridSpec desk_grid() { return scenario_grid(semi_urban_scenario()); }
PilotPattern desk_pattern() { return build_pilot_pattern(desk_grid(), {2, 11}, 2); }

CMatrix random_cmatrix(Index r, Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = cdouble(g(rng), g(rng));
    return m;
}

// np.interp-style evaluation with optional linear extension at the ends.
cdouble interp_oracle(const std::vector<double>& xs, const std::vector<cdouble>& ys, double x, bool extend) {
    if (xs.size() == 1) return ys[0];
    std::size_t lo = 0;
    if (x < xs.front()) {
        if (!extend) return ys.front();
    } else if (x > xs.back()) {
        if (!extend) return ys.back();
        lo = xs.size() - 2;
    } else {
        while (lo + 2 < xs.size() && x > xs[lo + 1]) ++lo;
    }
    const double t = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
    return (1.0 - t) * ys[lo] + t * ys[lo + 1];
}

}  // namespace

TEST(Ls, DivisionByPilots) {
    const CVector h = random_cmatrix(24, 1, 1).col(0);
    EXPECT_EQ(ls_estimate(h, CVector::Ones(24)), h);
    EXPECT_EQ(ls_estimate(CVector::Zero(24), CVector::Ones(24)), CVector::Zero(24));
    EXPECT_LT((ls_estimate(2.0 * h, CVector::Constant(24, 2.0)) - h).cwiseAbs().maxCoeff(), 1e-15);
    CVector pilots = CVector::Ones(24);
    pilots(3) = 0.0;
    EXPECT_THROW(ls_estimate(h, pilots), ConfigError);
}

TEST(Bilinear, ConstantField) {
    const CMatrix out = bilinear_interpolate(CVector::Constant(24, cdouble(0.5, -2.0)), desk_pattern());
    EXPECT_LT((out - CMatrix::Constant(24, 14, cdouble(0.5, -2.0))).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Bilinear, AffineFieldExactInsidePilotSpan) {
    const PilotPattern p = desk_pattern();
    auto field = [](int n, int m) { return cdouble(0.3 + 0.1 * n - 0.05 * m, -0.2 * n + 0.7 * m); };
    CVector est(p.size());
    for (int i = 0; i < p.size(); ++i) est(i) = field(p[i].subcarrier, p[i].symbol);
    const CMatrix out = bilinear_interpolate(est, p);
    for (int n = 0; n < 24; ++n)
        for (int m = 2; m <= 11; ++m) EXPECT_LT(std::abs(out(n, m) - field(n, m)), 1e-13);
    for (int i = 0; i < p.size(); ++i) EXPECT_LT(std::abs(out(p[i].subcarrier, p[i].symbol) - est(i)), 1e-15);
}

TEST(Bilinear, MatchesTwoPassOracle) {
    const GridSpec g = desk_grid();
    const PilotPattern p = build_pilot_pattern(g, {1, 6, 11}, 3, 1);
    const CMatrix field = sample_channel(scenario_covariance(semi_urban_scenario(), g), 11).h;
    const CVector est = pilot_values(field, p);
    std::vector<std::vector<cdouble>> cols;
    for (int m : {1, 6, 11}) {
        std::vector<double> xs;
        std::vector<cdouble> ys;
        for (int n = 1; n < 24; n += 3) {
            xs.push_back(n);
            ys.push_back(field(n, m));
        }
        std::vector<cdouble> col;
        for (int n = 0; n < 24; ++n) col.push_back(interp_oracle(xs, ys, n, true));
        cols.push_back(col);
    }
    const CMatrix out = bilinear_interpolate(est, p);
    for (int n = 0; n < 24; ++n)
        for (int m = 0; m < 14; ++m) {
            const std::vector<cdouble> ys{cols[0][n], cols[1][n], cols[2][n]};
            EXPECT_LT(std::abs(out(n, m) - interp_oracle({1, 6, 11}, ys, m, false)), 1e-12);
        }
}

TEST(Bilinear, EmptyPatternRejected) {
    EXPECT_THROW(bilinear_interpolate(CVector(), PilotPattern()), ConfigError);
}

TEST(Lmmse, LargeNoiseDrivesFilterToZero) {
    const PilotCovariances pc = pilot_covariances(scenario_covariance(semi_urban_scenario(), desk_grid()), desk_pattern());
    EXPECT_LT(lmmse_filter(pc, 1e12).w.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lmmse, FullPilotNoiselessIsIdentity) {
    GridSpec g;
    g.subcarriers = 4;
    g.symbols = 3;
    ScenarioConfig s = semi_urban_scenario();
    s.velocity_mps = 300.0;
    const SeparableCovariance cov = scenario_covariance(s, g);
    const PilotPattern all = build_pilot_pattern(g, {0, 1, 2}, 1);
    const LmmseFilter f = lmmse_filter(pilot_covariances(cov, all), 0.0);
    EXPECT_LT((f.w - CMatrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-6);
    const CMatrix h = sample_channel(cov, 3).h;
    const PilotObservation obs = PilotObservation::from_pilots(pilot_values(h, all), 99.0);
    EXPECT_LT((lmmse_estimate(f, obs, 4, 3) - h).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Lmmse, ScalarClosedForm) {
    const CMatrix r{{cdouble(0.3, 0.4)}}, p{{cdouble(1.7, 0.0)}};
    const LmmseFilter f = lmmse_filter(r, p, 0.25);
    EXPECT_LT(std::abs(f.w(0, 0) - cdouble(0.3, 0.4) / 1.95), 1e-15);
    EXPECT_FALSE(f.used_pinv);
}

TEST(Lmmse, SingularSystemFallsBackToPinv) {
    const CMatrix pp = CMatrix::Ones(3, 3);
    const CMatrix cross = CMatrix::Ones(2, 3);
    const LmmseFilter f = lmmse_filter(cross, pp, 0.0);
    EXPECT_TRUE(f.used_pinv);
    EXPECT_LT((f.w - CMatrix::Constant(2, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lmmse, ZeroFilterAndDimensionChecks) {
    const CVector y = CVector::Ones(24);
    EXPECT_EQ(apply_filter(CMatrix::Zero(336, 24), y, 24, 14), CMatrix::Zero(24, 14));
    EXPECT_THROW(apply_filter(CMatrix::Zero(336, 23), y, 24, 14), ShapeError);
}

TEST(AnalyticNmse, Limits) {
    const SeparableCovariance cov = scenario_covariance(semi_urban_scenario(), desk_grid());
    EXPECT_NEAR(analytic_mmse_nmse(cov, desk_pattern(), 1e12), 1.0, 1e-9);
    GridSpec g;
    g.subcarriers = 4;
    g.symbols = 3;
    const SeparableCovariance small = scenario_covariance(semi_urban_scenario(), g);
    EXPECT_LT(analytic_mmse_nmse(small, build_pilot_pattern(g, {0, 1, 2}, 1), 1e-12), 1e-9);
    EXPECT_THROW(analytic_mmse_nmse(cov, desk_pattern(), 0.0), ConfigError);
}

TEST(AnalyticNmse, EqualsGenericFilterNmseAtOptimum) {
    const SeparableCovariance cov = scenario_covariance(high_speed_rail_scenario(), desk_grid());
    const PilotPattern p = desk_pattern();
    const double s2 = noise_variance(15.0);
    const LmmseFilter f = lmmse_filter(pilot_covariances(cov, p), s2);
    EXPECT_NEAR(linear_filter_nmse(f.w, cov, p, s2), analytic_mmse_nmse(cov, p, s2), 1e-12);
    const CMatrix perturbed = f.w + 1e-3 * random_cmatrix(f.w.rows(), f.w.cols(), 4);
    EXPECT_GT(linear_filter_nmse(perturbed, cov, p, s2), analytic_mmse_nmse(cov, p, s2));
}

TEST(AnalyticNmse, MonteCarloAgreementAtTwentyDb) {
    const GridSpec g = desk_grid();
    const SeparableCovariance cov = scenario_covariance(semi_urban_scenario(), g);
    const PilotPattern p = desk_pattern();
    const double s2 = noise_variance(20.0);
    const LmmseFilter f = lmmse_filter(pilot_covariances(cov, p), s2);
    const ChannelSampler sampler(cov);
    double num = 0.0, den = 0.0;
    for (std::uint64_t k = 0; k < 2000; ++k) {
        const CMatrix h = sampler.draw(derive_seed(21, k, 0));
        const CMatrix est = lmmse_estimate(f, observe_pilots(h, p, 20.0, derive_seed(21, k, 1)), 24, 14);
        num += (est - h).squaredNorm();
        den += h.squaredNorm();
    }
    EXPECT_NEAR(num / den / analytic_mmse_nmse(cov, p, s2), 1.0, 0.02);
}

TEST(AnalyticNmse, ClassicalOrderingExact) {
    const PilotPattern p = desk_pattern();
    for (const ScenarioConfig& s : {semi_urban_scenario(), high_speed_rail_scenario()}) {
        const SeparableCovariance cov = scenario_covariance(s, desk_grid());
        for (double snr : {0.0, 10.0, 20.0, 30.0}) {
            const double s2 = noise_variance(snr);
            const CMatrix w_ls = linear_map_matrix([&](const CVector& y) { return bilinear_interpolate(y, p); }, p);
            const OneDLmmse oned(cov.rf, s2, p);
            const CMatrix w_1d = linear_map_matrix([&](const CVector& y) { return oned.estimate(y); }, p);
            const double ls = linear_filter_nmse(w_ls, cov, p, s2);
            const double od = linear_filter_nmse(w_1d, cov, p, s2);
            const double opt = analytic_mmse_nmse(cov, p, s2);
            EXPECT_GE(ls, od) << s.name << " " << snr;
            EXPECT_GE(od, opt) << s.name << " " << snr;
        }
    }
}

TEST(SampleCov, SingleAndRepeatedFrames) {
    const PilotPattern p = desk_pattern();
    const CMatrix h = random_cmatrix(24, 14, 5);
    const SampleCovariance one = sample_covariance({h}, p);
    const CVector v = linalg::vec(h), hp = pilot_values(h, p);
    EXPECT_LT((one.cross - v * hp.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((one.pp - hp * hp.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
    const SampleCovariance three = sample_covariance({h, h, h}, p);
    EXPECT_LT((three.cross - one.cross).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(three.count, 3u);
    EXPECT_THROW(sample_covariance({}, p), ConfigError);
}

TEST(SampleCov, ConvergesToTrueCovariance) {
    const GridSpec g = desk_grid();
    const SeparableCovariance cov = scenario_covariance(semi_urban_scenario(), g);
    const PilotPattern p = desk_pattern();
    const ChannelSampler sampler(cov);
    SampleCovarianceAccumulator acc(p);
    for (std::uint64_t k = 0; k < 10000; ++k) acc.add(sampler.draw(derive_seed(31, k)));
    const SampleCovariance sc = acc.result();
    const PilotCovariances truth = pilot_covariances(cov, p);
    EXPECT_LT((sc.pp - truth.pp).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_LT((sc.pp - sc.pp.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OneD, FlatFadingNoiselessRecovery) {
    const PilotPattern p = desk_pattern();
    CMatrix h(24, 14);
    for (int m = 0; m < 14; ++m) h.col(m).setConstant(cdouble(std::cos(m * 0.3), std::sin(m * 0.3)));
    const OneDLmmse f(CMatrix::Ones(24, 24), 0.0, p);
    const CMatrix est = f.estimate(pilot_values(h, p));
    for (int m : {2, 11}) EXPECT_LT((est.col(m) - h.col(m)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OneD, LargeNoiseGivesZero) {
    const SeparableCovariance cov = scenario_covariance(semi_urban_scenario(), desk_grid());
    const OneDLmmse f(cov.rf, 1e12, desk_pattern());
    EXPECT_LT(f.estimate(CVector::Ones(24)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(OneD, TemporalFillIsLinearWithConstantEnds) {
    const PilotPattern p = desk_pattern();
    const OneDLmmse f(CMatrix::Ones(24, 24), 0.0, p);
    CVector ls(24);
    ls.head(12).setConstant(1.0);
    ls.tail(12).setConstant(cdouble(0.0, 1.0));
    const CMatrix est = f.estimate(ls);
    EXPECT_LT(std::abs(est(5, 0) - 1.0), 1e-8);
    EXPECT_LT(std::abs(est(5, 13) - cdouble(0.0, 1.0)), 1e-8);
    EXPECT_LT(std::abs(est(5, 5) - (cdouble(1.0) + (3.0 / 9.0) * (cdouble(0.0, 1.0) - 1.0))), 1e-8);
}

TEST(Mismatch, PenaltyIdentities) {
    const CMatrix w = random_cmatrix(6, 3, 1), w2 = random_cmatrix(6, 3, 2);
    const CMatrix g = random_cmatrix(3, 3, 3);
    const CMatrix sigma = g * g.adjoint();
    EXPECT_EQ(mismatch_penalty(w, w, sigma), 0.0);
    EXPECT_NEAR(mismatch_penalty(w, w2, CMatrix::Identity(3, 3)), (w - w2).squaredNorm(), 1e-12);
    const CMatrix d = w - w2;
    EXPECT_NEAR(mismatch_penalty(w, w2, sigma), (d * sigma * d.adjoint()).trace().real(), 1e-12);
    EXPECT_GE(mismatch_penalty(w, w2, sigma), 0.0);
}
