#ifndef AMSELAB_CLASSICAL_ONED_LMMSE_HPP
#define AMSELAB_CLASSICAL_ONED_LMMSE_HPP

#include "amselab/classical/interpolation.hpp"
#include "amselab/classical/lmmse.hpp"

#include <vector>

namespace amselab {

/// Frequency-only LMMSE per pilot symbol, linear interpolation in time.
class OneDLmmse {
public:
    OneDLmmse(const CMatrix& rf, double noise_var, const PilotPattern& pattern) : pattern_(pattern) {
        require_shape(rf.rows() == pattern.subcarriers() && rf.cols() == pattern.subcarriers(),
                      "oned_lmmse: R_f " + shape_of(rf) + " for " + std::to_string(pattern.subcarriers()) +
                          " subcarriers");
        symbols_ = pattern.occupied_symbols();
        if (symbols_.empty()) throw ConfigError("oned_lmmse: no pilot symbols");
        for (int m : symbols_) {
            const std::vector<int> pilots = pattern.pilots_on_symbol(m);
            const Index k = static_cast<Index>(pilots.size());
            CMatrix cross(rf.rows(), k);
            CMatrix pp(k, k);
            for (Index j = 0; j < k; ++j) {
                const int sj = pattern[pilots[static_cast<std::size_t>(j)]].subcarrier;
                cross.col(j) = rf.col(sj);
                for (Index i = 0; i < k; ++i) pp(i, j) = rf(pattern[pilots[static_cast<std::size_t>(i)]].subcarrier, sj);
            }
            filters_.push_back(lmmse_filter(cross, pp, noise_var).w);
            pilots_.push_back(pilots);
        }
    }

    CMatrix estimate(const CVector& ls) const {
        require_shape(ls.size() == pattern_.size(), "oned_lmmse: " + std::to_string(ls.size()) +
                                                        " LS estimates for " + std::to_string(pattern_.size()) +
                                                        " pilots");
        std::vector<CVector> columns;
        for (std::size_t s = 0; s < symbols_.size(); ++s) {
            CVector local(static_cast<Index>(pilots_[s].size()));
            for (std::size_t i = 0; i < pilots_[s].size(); ++i) local(static_cast<Index>(i)) = ls(pilots_[s][i]);
            columns.push_back(filters_[s] * local);
        }
        return temporal_fill(symbols_, columns, pattern_.symbols());
    }

    CMatrix estimate(const PilotObservation& obs) const { return estimate(ls_estimate(obs)); }

    const std::vector<CMatrix>& symbol_filters() const { return filters_; }

private:
    PilotPattern pattern_;
    std::vector<int> symbols_;
    std::vector<std::vector<int>> pilots_;
    std::vector<CMatrix> filters_;
};

inline CMatrix oned_lmmse(const PilotObservation& obs, const CMatrix& rf, double noise_var,
                          const PilotPattern& pattern) {
    return OneDLmmse(rf, noise_var, pattern).estimate(obs);
}

/// Explicit NM×L matrix of any linear pilot-to-grid map, built column by
/// column from unit pilot vectors.
template <typename Map>
CMatrix linear_map_matrix(const Map& map, const PilotPattern& pattern) {
    const Index nm = Index{pattern.subcarriers()} * pattern.symbols();
    CMatrix out(nm, pattern.size());
    for (int j = 0; j < pattern.size(); ++j) {
        CVector e = CVector::Zero(pattern.size());
        e(j) = 1.0;
        out.col(j) = linalg::vec(map(e));
    }
    return out;
}

}  // namespace amselab

#endif  // AMSELAB_CLASSICAL_ONED_LMMSE_HPP
