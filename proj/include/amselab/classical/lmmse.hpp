#ifndef AMSELAB_CLASSICAL_LMMSE_HPP
#define AMSELAB_CLASSICAL_LMMSE_HPP

#include "amselab/channel/correlation.hpp"
#include "amselab/channel/sampler.hpp"
#include "amselab/numerics/linalg.hpp"

#include <string>
#include <vector>

namespace amselab {

enum class Provenance { oracle, mismatched };

inline std::string to_string(Provenance p) { return p == Provenance::oracle ? "oracle" : "mismatched"; }

/// W = R_cross (R_pp + σ²I)⁻¹, NM×L.
struct LmmseFilter {
    CMatrix w;
    Provenance provenance = Provenance::oracle;
    double noise_var = 0.0;
    bool used_pinv = false;
};

inline LmmseFilter lmmse_filter(const CMatrix& r_cross, const CMatrix& r_pp, double noise_var,
                                Provenance provenance = Provenance::oracle) {
    require_shape(r_pp.rows() == r_pp.cols() && r_cross.cols() == r_pp.rows(),
                  "lmmse_filter: R_cross " + shape_of(r_cross) + " with R_pp " + shape_of(r_pp));
    if (noise_var < 0.0) throw ConfigError("lmmse_filter: negative noise variance");
    CMatrix a = r_pp;
    a.diagonal().array() += noise_var;
    linalg::SolveResult s = linalg::right_solve_hermitian(r_cross, a);
    if (!all_finite(s.x)) throw NumericalError("lmmse_filter: non-finite filter");
    return {std::move(s.x), provenance, noise_var, s.used_pinv};
}

inline LmmseFilter lmmse_filter(const PilotCovariances& pc, double noise_var,
                                Provenance provenance = Provenance::oracle) {
    return lmmse_filter(pc.cross, pc.pp, noise_var, provenance);
}

/// vec(Ĥ) = W·Y_p, reshaped to N×M.
inline CMatrix apply_filter(const CMatrix& w, const CVector& yp, int subcarriers, int symbols) {
    require_shape(w.cols() == yp.size() && w.rows() == Index{subcarriers} * symbols,
                  "apply_filter: filter " + shape_of(w) + " with " + std::to_string(yp.size()) + " pilots on " +
                      shape_str(subcarriers, symbols) + " grid");
    return linalg::unvec(w * yp, subcarriers, symbols);
}

inline CMatrix lmmse_estimate(const LmmseFilter& f, const PilotObservation& obs, int subcarriers, int symbols) {
    return apply_filter(f.w, obs.yp, subcarriers, symbols);
}

/// Expected NMSE of an arbitrary linear estimator vec(Ĥ) = W·Y_p:
/// [tr R − 2 Re tr(W R_crossᴴ) + tr(W (R_pp + σ²I) Wᴴ)] / tr R.
inline double linear_filter_nmse(const CMatrix& w, const PilotCovariances& pc, double trace_full, double noise_var) {
    require_shape(w.rows() == pc.cross.rows() && w.cols() == pc.cross.cols(),
                  "linear_filter_nmse: filter " + shape_of(w) + " vs R_cross " + shape_of(pc.cross));
    CMatrix ryy = pc.pp;
    ryy.diagonal().array() += noise_var;
    const double cross = (w.array() * pc.cross.conjugate().array()).sum().real();
    const double quad = (w * ryy).cwiseProduct(w.conjugate()).sum().real();
    return (trace_full - 2.0 * cross + quad) / trace_full;
}

inline double linear_filter_nmse(const CMatrix& w, const SeparableCovariance& cov, const PilotPattern& pattern,
                                 double noise_var) {
    const double tr = cov.rf.trace().real() * cov.rt.trace().real();
    return linear_filter_nmse(w, pilot_covariances(cov, pattern), tr, noise_var);
}

/// Closed-form NMSE of the oracle LMMSE estimator:
/// [tr R − tr(R_cross (R_pp + σ²I)⁻¹ R_crossᴴ)] / tr R.
inline double analytic_mmse_nmse(const SeparableCovariance& cov, const PilotPattern& pattern, double noise_var) {
    if (!(noise_var > 0.0)) throw ConfigError("analytic_mmse_nmse: noise variance must be positive");
    const PilotCovariances pc = pilot_covariances(cov, pattern);
    const double tr = cov.rf.trace().real() * cov.rt.trace().real();
    const LmmseFilter f = lmmse_filter(pc, noise_var);
    const double explained = (f.w.array() * pc.cross.conjugate().array()).sum().real();
    return (tr - explained) / tr;
}

/// Empirical R̂_cross = mean vec(H)·H_pᴴ and R̂_pp = mean H_p·H_pᴴ.
struct SampleCovariance {
    CMatrix cross;
    CMatrix pp;
    std::size_t count = 0;

    PilotCovariances covariances() const { return {cross, pp}; }
};

class SampleCovarianceAccumulator {
public:
    explicit SampleCovarianceAccumulator(const PilotPattern& pattern)
        : pattern_(pattern),
          cross_(CMatrix::Zero(Index{pattern.subcarriers()} * pattern.symbols(), pattern.size())),
          pp_(CMatrix::Zero(pattern.size(), pattern.size())) {}

    void add(const CMatrix& h) {
        require_shape(h.rows() == pattern_.subcarriers() && h.cols() == pattern_.symbols(),
                      "sample_covariance: frame " + shape_of(h) + " does not match pattern grid");
        const CVector v = linalg::vec(h);
        const CVector hp = pilot_values(h, pattern_);
        cross_.noalias() += v * hp.adjoint();
        pp_.noalias() += hp * hp.adjoint();
        ++count_;
    }

    SampleCovariance result() const {
        if (count_ == 0) throw ConfigError("sample_covariance: no frames");
        const double inv = 1.0 / static_cast<double>(count_);
        return {cross_ * inv, pp_ * inv, count_};
    }

private:
    PilotPattern pattern_;
    CMatrix cross_;
    CMatrix pp_;
    std::size_t count_ = 0;
};

inline SampleCovariance sample_covariance(const std::vector<CMatrix>& frames, const PilotPattern& pattern) {
    SampleCovarianceAccumulator acc(pattern);
    for (const CMatrix& h : frames) acc.add(h);
    return acc.result();
}

/// Δ_mis = ‖(W_mis − W*) Σ_yy^{1/2}‖²_F.
inline double mismatch_penalty(const CMatrix& w_mis, const CMatrix& w_star, const CMatrix& sigma_yy) {
    require_shape(w_mis.rows() == w_star.rows() && w_mis.cols() == w_star.cols(),
                  "mismatch_penalty: filters " + shape_of(w_mis) + " and " + shape_of(w_star));
    require_shape(sigma_yy.rows() == sigma_yy.cols() && sigma_yy.rows() == w_mis.cols(),
                  "mismatch_penalty: Σ_yy " + shape_of(sigma_yy));
    return ((w_mis - w_star) * linalg::hermitian_sqrt(sigma_yy)).squaredNorm();
}

}  // namespace amselab

#endif  // AMSELAB_CLASSICAL_LMMSE_HPP
