#ifndef AMSELAB_CHANNEL_GRID_HPP
#define AMSELAB_CHANNEL_GRID_HPP

#include "amselab/numerics/types.hpp"

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace amselab {

/// OFDM slot geometry: N subcarriers × M symbols.
struct GridSpec {
    int subcarriers = 24;                 // N
    int symbols = 14;                     // M
    double subcarrier_spacing_hz = 30e3;  // Δf
    double symbol_duration_s = 1e-3 / 28.0;

    int resource_elements() const { return subcarriers * symbols; }

    void validate() const {
        if (subcarriers < 1 || symbols < 1) throw ConfigError("grid: N and M must be at least 1");
        if (!(subcarrier_spacing_hz > 0.0)) throw ConfigError("grid: subcarrier spacing must be positive");
        if (!(symbol_duration_s > 0.0)) throw ConfigError("grid: symbol duration must be positive");
    }
};

/// Symbol duration (cyclic prefix included) for a 14-symbol NR slot at the
/// given numerology: slot length is 1 ms · 15 kHz / Δf.
inline double nr_symbol_duration(double subcarrier_spacing_hz) {
    return 1e-3 * (15e3 / subcarrier_spacing_hz) / 14.0;
}

/// L = (N_RB · 12 / 2) · N_DMRS_sym for comb-2 DM-RS.
inline int pilot_count(int resource_blocks, int dmrs_symbols) {
    if (resource_blocks < 1 || dmrs_symbols < 1) throw ConfigError("pilot_count: arguments must be >= 1");
    return resource_blocks * 12 / 2 * dmrs_symbols;
}

struct PilotPosition {
    int subcarrier = 0;
    int symbol = 0;
    friend bool operator==(const PilotPosition&, const PilotPosition&) = default;
};

/// Pilot index set. Pilots are ordered symbol by symbol, subcarriers
/// ascending within a symbol; this order defines the layout of Y_p.
class PilotPattern {
public:
    PilotPattern() = default;

    PilotPattern(int subcarriers, int symbols, std::vector<PilotPosition> positions, int comb,
                 std::vector<int> pilot_symbols)
        : n_(subcarriers), m_(symbols), comb_(comb), pilot_symbols_(std::move(pilot_symbols)),
          positions_(std::move(positions)) {
        for (const PilotPosition& p : positions_) {
            if (p.subcarrier < 0 || p.subcarrier >= n_ || p.symbol < 0 || p.symbol >= m_)
                throw ConfigError("pilot pattern: position (" + std::to_string(p.subcarrier) + ", " +
                                  std::to_string(p.symbol) + ") outside the grid");
        }
        for (std::size_t i = 0; i < positions_.size(); ++i)
            for (std::size_t j = i + 1; j < positions_.size(); ++j)
                if (positions_[i] == positions_[j]) throw ConfigError("pilot pattern: duplicate position");
    }

    int size() const { return static_cast<int>(positions_.size()); }  // L
    int subcarriers() const { return n_; }
    int symbols() const { return m_; }
    int comb() const { return comb_; }
    const std::vector<int>& pilot_symbols() const { return pilot_symbols_; }
    const std::vector<PilotPosition>& positions() const { return positions_; }
    const PilotPosition& operator[](int i) const { return positions_[static_cast<std::size_t>(i)]; }

    /// Index into column-major vec(H).
    int vec_index(int i) const {
        const PilotPosition& p = (*this)[i];
        return p.subcarrier + n_ * p.symbol;
    }

    std::vector<int> vec_indices() const {
        std::vector<int> out(positions_.size());
        for (int i = 0; i < size(); ++i) out[static_cast<std::size_t>(i)] = vec_index(i);
        return out;
    }

    bool is_pilot(int subcarrier, int symbol) const {
        return std::find(positions_.begin(), positions_.end(), PilotPosition{subcarrier, symbol}) != positions_.end();
    }

    /// Data positions: the complement of the pilot set in the grid.
    std::vector<PilotPosition> data_positions() const {
        std::vector<PilotPosition> out;
        for (int m = 0; m < m_; ++m)
            for (int n = 0; n < n_; ++n)
                if (!is_pilot(n, m)) out.push_back({n, m});
        return out;
    }

    /// Pilot indices (into Y_p) that sit on a given OFDM symbol.
    std::vector<int> pilots_on_symbol(int symbol) const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if ((*this)[i].symbol == symbol) out.push_back(i);
        return out;
    }

    /// Distinct symbols carrying at least one pilot, ascending.
    std::vector<int> occupied_symbols() const {
        std::vector<int> out;
        for (const PilotPosition& p : positions_) out.push_back(p.symbol);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    int n_ = 0;
    int m_ = 0;
    int comb_ = 1;
    std::vector<int> pilot_symbols_;
    std::vector<PilotPosition> positions_;
};

/// Comb pattern: every `comb`-th subcarrier starting at `offset` on each of
/// the listed symbols.
inline PilotPattern build_pilot_pattern(const GridSpec& grid, const std::vector<int>& symbol_indices, int comb,
                                        int offset = 0) {
    grid.validate();
    if (comb < 1) throw ConfigError("pilot pattern: comb factor must be >= 1");
    if (offset < 0 || offset >= comb) throw ConfigError("pilot pattern: comb offset out of range");
    if (symbol_indices.empty()) throw ConfigError("pilot pattern: no pilot symbols");
    std::vector<int> symbols = symbol_indices;
    std::sort(symbols.begin(), symbols.end());
    if (std::adjacent_find(symbols.begin(), symbols.end()) != symbols.end())
        throw ConfigError("pilot pattern: repeated pilot symbol");
    std::vector<PilotPosition> pos;
    for (int m : symbols) {
        if (m < 0 || m >= grid.symbols)
            throw ConfigError("pilot pattern: symbol index " + std::to_string(m) + " outside [0, " +
                              std::to_string(grid.symbols) + ")");
        for (int n = offset; n < grid.subcarriers; n += comb) pos.push_back({n, m});
    }
    return PilotPattern(grid.subcarriers, grid.symbols, std::move(pos), comb, std::move(symbols));
}

}  // namespace amselab

#endif  // AMSELAB_CHANNEL_GRID_HPP
