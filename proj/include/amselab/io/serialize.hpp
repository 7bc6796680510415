#ifndef AMSELAB_IO_SERIALIZE_HPP
#define AMSELAB_IO_SERIALIZE_HPP

#include "amselab/ammse/filter.hpp"
#include "amselab/io/artifact.hpp"
#include "amselab/training/trainer.hpp"

#include <string>
#include <vector>

namespace amselab {

namespace detail {

inline std::uint32_t dim32(Index v, const char* what) {
    if (v < 0 || v > static_cast<Index>(0xFFFFFFFF)) throw ConfigError(std::string("artifact: ") + what + " out of range");
    return static_cast<std::uint32_t>(v);
}

inline void require_kind(const Artifact& a, ArtifactKind k) {
    if (a.header.kind != k)
        throw ConfigError("artifact: expected a " + to_string(k) + " file, got " + to_string(a.header.kind));
}

inline void put_scenario(PayloadWriter& w, const ScenarioConfig& s) {
    w.put_string(s.name);
    for (double v : {s.carrier_hz, s.delay_spread_s, s.subcarrier_spacing_hz, s.velocity_mps, s.k_factor_db,
                     s.drift.delay_amplitude, s.drift.doppler_amplitude, s.drift.period_frames, s.drift.walk_step})
        w.put(v);
    w.put_u64(s.drift.walk_seed);
}

inline ScenarioConfig get_scenario(PayloadReader& r) {
    ScenarioConfig s;
    s.name = r.get_string();
    for (double* v : {&s.carrier_hz, &s.delay_spread_s, &s.subcarrier_spacing_hz, &s.velocity_mps, &s.k_factor_db,
                      &s.drift.delay_amplitude, &s.drift.doppler_amplitude, &s.drift.period_frames, &s.drift.walk_step})
        *v = r.get();
    s.drift.walk_seed = r.get_u64();
    return s;
}

inline void put_network_config(PayloadWriter& w, const AmmseConfig& c) {
    for (int v : {c.freq_heads, c.temporal_heads, c.freq_ffn_multiplier, c.temporal_ffn_multiplier, c.decoder_blocks,
                  c.decoder_hidden})
        w.put_int(v);
    w.put_int(c.activation == Activation::relu ? 0 : 1);
    w.put_int(c.position_table ? 1 : 0);
    w.put_u64(c.init_seed);
}

inline AmmseConfig get_network_config(PayloadReader& r, const ArtifactHeader& h) {
    AmmseConfig c;
    c.subcarriers = static_cast<int>(h.n);
    c.symbols = static_cast<int>(h.m);
    c.pilots = static_cast<int>(h.l);
    for (int* v : {&c.freq_heads, &c.temporal_heads, &c.freq_ffn_multiplier, &c.temporal_ffn_multiplier,
                   &c.decoder_blocks, &c.decoder_hidden})
        *v = static_cast<int>(r.get_int());
    c.activation = r.get_int() == 0 ? Activation::relu : Activation::gelu;
    c.position_table = r.get_int() != 0;
    c.init_seed = r.get_u64();
    return c;
}

inline void put_params(PayloadWriter& w, const NetworkParams& p) {
    for (const Matrix* m : p.tensors()) w.put_matrix(*m);
}

inline NetworkParams get_params(PayloadReader& r, const AmmseConfig& cfg) {
    NetworkParams p = init_params(cfg);
    for (Matrix* m : p.tensors()) *m = r.get_matrix(m->rows(), m->cols());
    return p;
}

inline void put_history(PayloadWriter& w, const std::vector<double>& h) {
    w.put_int(static_cast<std::int64_t>(h.size()));
    for (double v : h) w.put(v);
}

inline std::vector<double> get_history(PayloadReader& r) {
    const std::int64_t n = r.get_int();
    if (n < 0 || static_cast<std::size_t>(n) > r.remaining()) throw IntegrityError("artifact: bad history length");
    std::vector<double> h(static_cast<std::size_t>(n));
    for (double& v : h) v = r.get();
    return h;
}

inline void put_adapter(PayloadWriter& w, const std::optional<RankAdapter>& a) {
    w.put_int(a ? 1 : 0);
    if (a) {
        w.put_shaped(a->u);
        w.put_shaped(a->v);
    }
}

inline std::optional<RankAdapter> get_adapter(PayloadReader& r) {
    if (r.get_int() == 0) return std::nullopt;
    RankAdapter a;
    a.u = r.get_shaped();
    a.v = r.get_shaped();
    return a;
}

}  // namespace detail

// Dataset

inline Artifact dataset_to_artifact(const Dataset& ds) {
    const Index n = ds.grid.subcarriers, m = ds.grid.symbols;
    const PilotPattern pattern = ds.pattern();
    PayloadWriter w;
    detail::put_scenario(w, ds.scenario);
    w.put(ds.grid.subcarrier_spacing_hz);
    w.put(ds.grid.symbol_duration_s);
    w.put_int(ds.layout.comb);
    w.put_int(ds.layout.offset);
    w.put_int(static_cast<std::int64_t>(ds.layout.symbols.size()));
    for (int s : ds.layout.symbols) w.put_int(s);
    w.put_u64(ds.seed);
    for (const FrameRecord& f : ds.frames) {
        require_shape(f.h.rows() == n && f.h.cols() == m && f.yp.size() == pattern.size(),
                      "dataset: frame " + std::to_string(f.index) + " does not match the dataset grid");
        w.put_int(static_cast<std::int64_t>(f.index));
        w.put(f.snr_db);
        w.put_cmatrix(f.h);
        w.put_cvector(f.yp);
    }
    ArtifactHeader h{ArtifactKind::dataset, detail::dim32(n, "N"), detail::dim32(m, "M"),
                     detail::dim32(pattern.size(), "L"), 0, detail::dim32(static_cast<Index>(ds.frames.size()), "frames")};
    return {h, w.take()};
}

inline Dataset dataset_from_artifact(const Artifact& a) {
    detail::require_kind(a, ArtifactKind::dataset);
    PayloadReader r(a.payload);
    Dataset ds;
    ds.scenario = detail::get_scenario(r);
    ds.grid.subcarriers = static_cast<int>(a.header.n);
    ds.grid.symbols = static_cast<int>(a.header.m);
    ds.grid.subcarrier_spacing_hz = r.get();
    ds.grid.symbol_duration_s = r.get();
    ds.layout.comb = static_cast<int>(r.get_int());
    ds.layout.offset = static_cast<int>(r.get_int());
    const std::int64_t ns = r.get_int();
    if (ns < 0 || static_cast<std::size_t>(ns) > r.remaining()) throw IntegrityError("dataset: bad pilot symbol count");
    ds.layout.symbols.clear();
    for (std::int64_t i = 0; i < ns; ++i) ds.layout.symbols.push_back(static_cast<int>(r.get_int()));
    ds.seed = r.get_u64();
    const PilotPattern pattern = ds.pattern();
    if (static_cast<std::uint32_t>(pattern.size()) != a.header.l)
        throw IntegrityError("dataset: header L does not match the stored pilot layout");
    ds.frames.resize(a.header.frames);
    for (FrameRecord& f : ds.frames) {
        f.index = static_cast<std::uint64_t>(r.get_int());
        f.snr_db = r.get();
        f.h = r.get_cmatrix(a.header.n, a.header.m);
        f.yp = r.get_cvector(a.header.l);
    }
    r.expect_end();
    return ds;
}

// Filter

inline Artifact filter_to_artifact(const AmmseFilter& f) {
    PayloadWriter w;
    w.put_cmatrix(f.w);
    if (f.factored()) {
        w.put_cmatrix(f.a);
        w.put_cmatrix(f.b);
    }
    ArtifactHeader h{ArtifactKind::filter, detail::dim32(f.subcarriers, "N"), detail::dim32(f.symbols, "M"),
                     detail::dim32(f.w.cols(), "L"), detail::dim32(f.rank(), "r"), 0};
    return {h, w.take()};
}

inline AmmseFilter filter_from_artifact(const Artifact& a) {
    detail::require_kind(a, ArtifactKind::filter);
    const std::size_t nm = std::size_t{a.header.n} * a.header.m;
    const std::size_t expected = 2 * nm * a.header.l + 2 * std::size_t{a.header.r} * (nm + a.header.l);
    if (a.payload.size() != expected)
        throw IntegrityError("filter: payload holds " + std::to_string(a.payload.size()) + " values, header implies " +
                             std::to_string(expected));
    PayloadReader r(a.payload);
    AmmseFilter f;
    f.subcarriers = static_cast<int>(a.header.n);
    f.symbols = static_cast<int>(a.header.m);
    f.w = r.get_cmatrix(static_cast<Index>(nm), a.header.l);
    if (a.header.r > 0) {
        f.a = r.get_cmatrix(static_cast<Index>(nm), a.header.r);
        f.b = r.get_cmatrix(a.header.l, a.header.r);
    }
    r.expect_end();
    return f;
}

// Checkpoint

inline Artifact checkpoint_to_artifact(const Checkpoint& c) {
    PayloadWriter w;
    detail::put_network_config(w, c.network);
    w.put_int(c.epoch);
    w.put_int(c.best_epoch);
    w.put(c.best_validation_nmse);
    w.put_int(c.epochs_since_best);
    detail::put_history(w, c.train_loss);
    detail::put_history(w, c.validation_nmse);
    for (double v : {c.adam.hyper.learning_rate, c.adam.hyper.beta1, c.adam.hyper.beta2, c.adam.hyper.epsilon}) w.put(v);
    w.put_int(c.adam.step);
    w.put_int(static_cast<std::int64_t>(c.adam.first_moment.size()));
    for (std::size_t i = 0; i < c.adam.first_moment.size(); ++i) {
        w.put_shaped(c.adam.first_moment[i]);
        w.put_shaped(c.adam.second_moment[i]);
    }
    detail::put_params(w, c.params);
    detail::put_params(w, c.best_params);
    detail::put_adapter(w, c.adapter);
    detail::put_adapter(w, c.best_adapter);
    ArtifactHeader h{ArtifactKind::checkpoint, detail::dim32(c.network.subcarriers, "N"),
                     detail::dim32(c.network.symbols, "M"), detail::dim32(c.network.pilots, "L"),
                     detail::dim32(c.adapter ? c.adapter->rank() : 0, "r"), 0};
    return {h, w.take()};
}

inline Checkpoint checkpoint_from_artifact(const Artifact& a) {
    detail::require_kind(a, ArtifactKind::checkpoint);
    PayloadReader r(a.payload);
    Checkpoint c;
    c.network = detail::get_network_config(r, a.header);
    c.epoch = static_cast<int>(r.get_int());
    c.best_epoch = static_cast<int>(r.get_int());
    c.best_validation_nmse = r.get();
    c.epochs_since_best = static_cast<int>(r.get_int());
    c.train_loss = detail::get_history(r);
    c.validation_nmse = detail::get_history(r);
    c.adam.hyper.learning_rate = r.get();
    c.adam.hyper.beta1 = r.get();
    c.adam.hyper.beta2 = r.get();
    c.adam.hyper.epsilon = r.get();
    c.adam.step = r.get_int();
    const std::int64_t moments = r.get_int();
    if (moments < 0 || static_cast<std::size_t>(moments) > r.remaining()) throw IntegrityError("checkpoint: bad moment count");
    for (std::int64_t i = 0; i < moments; ++i) {
        c.adam.first_moment.push_back(r.get_shaped());
        c.adam.second_moment.push_back(r.get_shaped());
    }
    try {
        c.network.validate();
    } catch (const ConfigError& e) {
        throw IntegrityError(std::string("checkpoint: stored network configuration is invalid: ") + e.what());
    }
    c.params = detail::get_params(r, c.network);
    c.best_params = detail::get_params(r, c.network);
    c.adapter = detail::get_adapter(r);
    c.best_adapter = detail::get_adapter(r);
    r.expect_end();
    if ((c.adapter ? static_cast<std::uint32_t>(c.adapter->rank()) : 0u) != a.header.r)
        throw IntegrityError("checkpoint: header r does not match the stored adapter");
    return c;
}

inline void save_dataset(const std::string& path, const Dataset& ds) { save_artifact(path, dataset_to_artifact(ds)); }
inline Dataset load_dataset(const std::string& path) { return dataset_from_artifact(load_artifact(path)); }
inline void save_filter(const std::string& path, const AmmseFilter& f) { save_artifact(path, filter_to_artifact(f)); }
inline AmmseFilter load_filter(const std::string& path) { return filter_from_artifact(load_artifact(path)); }
inline void save_checkpoint(const std::string& path, const Checkpoint& c) {
    save_artifact(path, checkpoint_to_artifact(c));
}
inline Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_artifact(load_artifact(path)); }

}  // namespace amselab

#endif  // AMSELAB_IO_SERIALIZE_HPP
