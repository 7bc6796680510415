#ifndef AMSELAB_AMMSE_CONFIG_HPP
#define AMSELAB_AMMSE_CONFIG_HPP

#include "amselab/numerics/layers.hpp"
#include "amselab/numerics/types.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

namespace amselab {

/// Network hyper-parameters. d_e = N and d_p = N·M are fixed by the grid;
/// zero head counts and widths mean "use the default".
struct AmmseConfig {
    int subcarriers = 24;  // N
    int symbols = 14;      // M
    int pilots = 24;       // L
    int freq_heads = 0;    // h_f, default L/2
    int temporal_heads = 0;  // h_t, default M
    int freq_ffn_multiplier = 4;
    int temporal_ffn_multiplier = 1;
    int decoder_blocks = 2;
    int decoder_hidden = 0;  // default N·M
    Activation activation = Activation::relu;
    bool position_table = true;
    std::uint64_t init_seed = 1;

    int embed_dim() const { return subcarriers; }
    int proj_dim() const { return subcarriers * symbols; }
    int tokens() const { return 2 * pilots; }
    int resolved_freq_heads() const { return freq_heads > 0 ? freq_heads : std::max(1, pilots / 2); }
    int resolved_temporal_heads() const { return temporal_heads > 0 ? temporal_heads : symbols; }
    int resolved_decoder_hidden() const { return decoder_hidden > 0 ? decoder_hidden : proj_dim(); }
    int freq_ffn_width() const { return freq_ffn_multiplier * embed_dim(); }
    int temporal_ffn_width() const { return temporal_ffn_multiplier * proj_dim(); }

    void validate() const {
        if (subcarriers < 1 || symbols < 1 || pilots < 1)
            throw ConfigError("network: N, M and L must be at least 1");
        if (pilots > subcarriers * symbols) throw ConfigError("network: more pilots than resource elements");
        if (embed_dim() % resolved_freq_heads() != 0)
            throw ConfigError("network: d_e = " + std::to_string(embed_dim()) + " not divisible by h_f = " +
                              std::to_string(resolved_freq_heads()));
        if (proj_dim() % resolved_temporal_heads() != 0)
            throw ConfigError("network: d_p = " + std::to_string(proj_dim()) + " not divisible by h_t = " +
                              std::to_string(resolved_temporal_heads()));
        if (freq_ffn_multiplier < 1 || temporal_ffn_multiplier < 1)
            throw ConfigError("network: FFN multipliers must be >= 1");
        if (decoder_blocks < 0) throw ConfigError("network: negative decoder depth");
    }
};

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "gelu"; }

inline Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "gelu") return Activation::gelu;
    throw ConfigError("unknown activation '" + s + "' (expected relu or gelu)");
}

}  // namespace amselab

#endif  // AMSELAB_AMMSE_CONFIG_HPP
