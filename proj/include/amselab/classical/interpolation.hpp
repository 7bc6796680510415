#ifndef AMSELAB_CLASSICAL_INTERPOLATION_HPP
#define AMSELAB_CLASSICAL_INTERPOLATION_HPP

#include "amselab/channel/grid.hpp"
#include "amselab/channel/sampler.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace amselab {

/// Least-squares pilot estimate Ĥ[𝒫_i] = Y_p[i] / X[𝒫_i].
inline CVector ls_estimate(const CVector& yp, const CVector& pilots) {
    require_shape(yp.size() == pilots.size(), "ls_estimate: " + std::to_string(yp.size()) + " observations for " +
                                                  std::to_string(pilots.size()) + " pilot symbols");
    CVector out(yp.size());
    for (Index i = 0; i < yp.size(); ++i) {
        if (pilots(i) == cdouble(0.0, 0.0)) throw ConfigError("ls_estimate: zero pilot symbol at index " + std::to_string(i));
        out(i) = yp(i) / pilots(i);
    }
    return out;
}

/// Unit pilots: the LS estimate is Y_p itself.
inline CVector ls_estimate(const PilotObservation& obs) { return ls_estimate(obs.yp, CVector::Ones(obs.yp.size())); }

namespace detail {

/// Piecewise-linear interpolation through (xs, ys) evaluated at x.
/// Outside [xs.front(), xs.back()] either the end segment is extended
/// (`extend_segment`) or the end value is held.
inline cdouble interp_1d(const std::vector<int>& xs, const std::vector<cdouble>& ys, int x, bool extend_segment) {
    const std::size_t n = xs.size();
    if (n == 1) return ys[0];
    std::size_t seg;
    if (x <= xs.front()) {
        if (!extend_segment) return ys.front();
        seg = 0;
    } else if (x >= xs.back()) {
        if (!extend_segment) return ys.back();
        seg = n - 2;
    } else {
        seg = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    }
    const double t = static_cast<double>(x - xs[seg]) / static_cast<double>(xs[seg + 1] - xs[seg]);
    return ys[seg] + t * (ys[seg + 1] - ys[seg]);
}

}  // namespace detail

/// Fills the grid from pilot-position estimates: linear in frequency within
/// each pilot symbol (end segments extended), then linear in time between
/// pilot symbols (nearest pilot symbol held outside their span).
inline CMatrix bilinear_interpolate(const CVector& pilot_est, const PilotPattern& pattern) {
    if (pattern.size() == 0) throw ConfigError("bilinear_interpolate: empty pilot pattern");
    require_shape(pilot_est.size() == pattern.size(), "bilinear_interpolate: " + std::to_string(pilot_est.size()) +
                                                          " estimates for " + std::to_string(pattern.size()) + " pilots");
    const int n_sc = pattern.subcarriers();
    const std::vector<int> symbols = pattern.occupied_symbols();

    std::vector<std::vector<cdouble>> columns;
    for (int m : symbols) {
        std::vector<std::pair<int, cdouble>> pts;
        for (int i : pattern.pilots_on_symbol(m)) pts.emplace_back(pattern[i].subcarrier, pilot_est(i));
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<int> xs;
        std::vector<cdouble> ys;
        for (const auto& [k, v] : pts) {
            xs.push_back(k);
            ys.push_back(v);
        }
        std::vector<cdouble> col(static_cast<std::size_t>(n_sc));
        for (int n = 0; n < n_sc; ++n) col[static_cast<std::size_t>(n)] = detail::interp_1d(xs, ys, n, true);
        columns.push_back(std::move(col));
    }

    CMatrix out(n_sc, pattern.symbols());
    std::vector<cdouble> ys(symbols.size());
    for (int n = 0; n < n_sc; ++n) {
        for (std::size_t s = 0; s < symbols.size(); ++s) ys[s] = columns[s][static_cast<std::size_t>(n)];
        for (int m = 0; m < pattern.symbols(); ++m) out(n, m) = detail::interp_1d(symbols, ys, m, false);
    }
    return out;
}

/// Linear interpolation along time of fully known pilot-symbol columns, with
/// constant extension outside the pilot-symbol span.
inline CMatrix temporal_fill(const std::vector<int>& symbols, const std::vector<CVector>& columns, int n_symbols) {
    if (symbols.empty()) throw ConfigError("temporal_fill: no pilot symbols");
    require_shape(symbols.size() == columns.size(), "temporal_fill: symbol/column count mismatch");
    const Index n_sc = columns.front().size();
    CMatrix out(n_sc, n_symbols);
    std::vector<cdouble> ys(symbols.size());
    for (Index n = 0; n < n_sc; ++n) {
        for (std::size_t s = 0; s < symbols.size(); ++s) ys[s] = columns[s](n);
        for (int m = 0; m < n_symbols; ++m) out(n, m) = detail::interp_1d(symbols, ys, m, false);
    }
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_CLASSICAL_INTERPOLATION_HPP
