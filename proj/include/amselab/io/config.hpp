#ifndef AMSELAB_IO_CONFIG_HPP
#define AMSELAB_IO_CONFIG_HPP

#include "amselab/ammse/config.hpp"
#include "amselab/bench/report.hpp"
#include "amselab/io/artifact.hpp"
#include "amselab/training/adapter.hpp"
#include "amselab/training/dataset.hpp"
#include "amselab/training/trainer.hpp"

#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace amselab {

using Json = nlohmann::ordered_json;

enum class AdapterMode { finetune, joint };

inline std::string to_string(AdapterMode m) { return m == AdapterMode::finetune ? "finetune" : "joint"; }

inline AdapterMode parse_adapter_mode(const std::string& s) {
    if (s == "finetune") return AdapterMode::finetune;
    if (s == "joint") return AdapterMode::joint;
    throw ConfigError("unknown adapter mode '" + s + "' (expected finetune or joint)");
}

struct TrainingSection {
    TrainConfig train;
    SnrPolicy snr;
    SplitFractions split;
    int rank = 0;  // 0 exports the full-rank filter
    AdapterMode adapter_mode = AdapterMode::finetune;
    AdapterTrainConfig adapter;
};

struct BenchSection {
    std::vector<double> snr_grid{0, 5, 10, 15, 20, 25, 30, 35};
    std::vector<std::string> estimators{"ls", "1d-lmmse", "lmmse-oracle", "ammse"};
    std::string format = "csv";
    std::size_t frames = 2000;  // test frames when no dataset is given
    std::uint64_t seed = 1001;
};

struct IoSection {
    std::size_t frames = 4400;
    std::uint64_t seed = 1;
    std::string dataset = "dataset.amse";
    std::string checkpoint = "checkpoint.amse";
    std::string filter = "filter.amse";
    std::string report = "";  // empty writes the report to standard output
};

/// One experiment: every field has a default and the resolved document is
/// echoed by every command.
struct RunConfig {
    ScenarioConfig scenario;
    std::string preset = "semi-urban";
    GridSpec grid;
    PilotLayout layout;
    AmmseConfig network;
    TrainingSection training;
    BenchSection bench;
    IoSection io;

    PilotPattern pattern() const { return layout.build(grid); }
};

namespace detail {

inline Json config_to_json(const RunConfig& c) {
    const ScenarioConfig& s = c.scenario;
    const TrainConfig& t = c.training.train;
    const AdapterTrainConfig& a = c.training.adapter;
    Json j;
    j["scenario"] = {{"preset", c.preset},
                     {"carrier_hz", s.carrier_hz},
                     {"delay_spread_s", s.delay_spread_s},
                     {"subcarrier_spacing_hz", s.subcarrier_spacing_hz},
                     {"velocity_kmh", s.velocity_mps * 3.6},
                     {"k_factor_db", s.k_factor_db},
                     {"drift",
                      {{"delay_amplitude", s.drift.delay_amplitude},
                       {"doppler_amplitude", s.drift.doppler_amplitude},
                       {"period_frames", s.drift.period_frames},
                       {"walk_step", s.drift.walk_step},
                       {"walk_seed", s.drift.walk_seed}}}};
    j["grid"] = {{"subcarriers", c.grid.subcarriers},
                 {"symbols", c.grid.symbols},
                 {"pilot_symbols", c.layout.symbols},
                 {"comb", c.layout.comb},
                 {"offset", c.layout.offset}};
    const AmmseConfig& n = c.network;
    j["network"] = {{"freq_heads", n.freq_heads},
                    {"temporal_heads", n.temporal_heads},
                    {"freq_ffn_multiplier", n.freq_ffn_multiplier},
                    {"temporal_ffn_multiplier", n.temporal_ffn_multiplier},
                    {"decoder_blocks", n.decoder_blocks},
                    {"decoder_hidden", n.decoder_hidden},
                    {"activation", to_string(n.activation)},
                    {"position_table", n.position_table},
                    {"init_seed", n.init_seed}};
    Json delta = t.delta.fixed ? Json(t.delta.value) : Json("snr");
    j["training"] = {{"epochs", t.epochs},
                     {"batch_size", t.batch_size},
                     {"learning_rate", t.adam.learning_rate},
                     {"beta1", t.adam.beta1},
                     {"beta2", t.adam.beta2},
                     {"epsilon", t.adam.epsilon},
                     {"schedule", to_string(t.schedule)},
                     {"loss", to_string(t.loss)},
                     {"huber_delta", delta},
                     {"seed", t.seed},
                     {"patience", t.patience},
                     {"checkpoint_every", t.checkpoint_every},
                     {"monitor_frames", t.monitor_frames},
                     {"snr_db", c.training.snr.fixed_db},
                     {"mixed_snr", c.training.snr.mixed},
                     {"snr_min_db", c.training.snr.min_db},
                     {"snr_max_db", c.training.snr.max_db},
                     {"split",
                      {{"train", c.training.split.train},
                       {"validation", c.training.split.validation},
                       {"test", c.training.split.test}}},
                     {"rank", c.training.rank},
                     {"adapter_mode", to_string(c.training.adapter_mode)},
                     {"adapter_epochs", a.epochs},
                     {"adapter_learning_rate", a.adam.learning_rate},
                     {"adapter_seed", a.seed}};
    j["bench"] = {{"snr_grid", c.bench.snr_grid},
                  {"estimators", c.bench.estimators},
                  {"format", c.bench.format},
                  {"frames", c.bench.frames},
                  {"seed", c.bench.seed}};
    j["io"] = {{"frames", c.io.frames},
               {"seed", c.io.seed},
               {"dataset", c.io.dataset},
               {"checkpoint", c.io.checkpoint},
               {"filter", c.io.filter},
               {"report", c.io.report}};
    return j;
}

template <class T>
T field(const Json& j, const char* section, const char* key) {
    try {
        return j.at(section).at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: field ") + section + "." + key + " has the wrong type");
    }
}

inline RunConfig config_from_json(const Json& j) {
    RunConfig c;
    c.preset = field<std::string>(j, "scenario", "preset");
    c.scenario = scenario_preset(c.preset);
    ScenarioConfig& s = c.scenario;
    s.carrier_hz = field<double>(j, "scenario", "carrier_hz");
    s.delay_spread_s = field<double>(j, "scenario", "delay_spread_s");
    s.subcarrier_spacing_hz = field<double>(j, "scenario", "subcarrier_spacing_hz");
    s.velocity_mps = kmh_to_mps(field<double>(j, "scenario", "velocity_kmh"));
    s.k_factor_db = field<double>(j, "scenario", "k_factor_db");
    s.drift.delay_amplitude = field<double>(j.at("scenario"), "drift", "delay_amplitude");
    s.drift.doppler_amplitude = field<double>(j.at("scenario"), "drift", "doppler_amplitude");
    s.drift.period_frames = field<double>(j.at("scenario"), "drift", "period_frames");
    s.drift.walk_step = field<double>(j.at("scenario"), "drift", "walk_step");
    s.drift.walk_seed = field<std::uint64_t>(j.at("scenario"), "drift", "walk_seed");
    s.validate();

    c.grid.subcarriers = field<int>(j, "grid", "subcarriers");
    c.grid.symbols = field<int>(j, "grid", "symbols");
    c.grid.subcarrier_spacing_hz = s.subcarrier_spacing_hz;
    c.grid.symbol_duration_s = nr_symbol_duration(s.subcarrier_spacing_hz);
    c.layout.symbols = field<std::vector<int>>(j, "grid", "pilot_symbols");
    c.layout.comb = field<int>(j, "grid", "comb");
    c.layout.offset = field<int>(j, "grid", "offset");
    const PilotPattern pattern = c.pattern();

    AmmseConfig& n = c.network;
    n.subcarriers = c.grid.subcarriers;
    n.symbols = c.grid.symbols;
    n.pilots = pattern.size();
    n.freq_heads = field<int>(j, "network", "freq_heads");
    n.temporal_heads = field<int>(j, "network", "temporal_heads");
    n.freq_ffn_multiplier = field<int>(j, "network", "freq_ffn_multiplier");
    n.temporal_ffn_multiplier = field<int>(j, "network", "temporal_ffn_multiplier");
    n.decoder_blocks = field<int>(j, "network", "decoder_blocks");
    n.decoder_hidden = field<int>(j, "network", "decoder_hidden");
    n.activation = parse_activation(field<std::string>(j, "network", "activation"));
    n.position_table = field<bool>(j, "network", "position_table");
    n.init_seed = field<std::uint64_t>(j, "network", "init_seed");
    n.validate();

    TrainingSection& ts = c.training;
    TrainConfig& t = ts.train;
    t.epochs = field<int>(j, "training", "epochs");
    t.batch_size = field<int>(j, "training", "batch_size");
    t.adam.learning_rate = field<double>(j, "training", "learning_rate");
    t.adam.beta1 = field<double>(j, "training", "beta1");
    t.adam.beta2 = field<double>(j, "training", "beta2");
    t.adam.epsilon = field<double>(j, "training", "epsilon");
    t.schedule = parse_lr_schedule(field<std::string>(j, "training", "schedule"));
    t.loss = parse_loss_kind(field<std::string>(j, "training", "loss"));
    const Json& delta = j.at("training").at("huber_delta");
    if (delta.is_string()) {
        if (delta.get<std::string>() != "snr")
            throw ConfigError("config: training.huber_delta must be \"snr\" or a positive number");
        t.delta = {};
    } else if (delta.is_number() && delta.get<double>() > 0.0) {
        t.delta = {true, delta.get<double>()};
    } else {
        throw ConfigError("config: training.huber_delta must be \"snr\" or a positive number");
    }
    t.seed = field<std::uint64_t>(j, "training", "seed");
    t.patience = field<int>(j, "training", "patience");
    t.checkpoint_every = field<int>(j, "training", "checkpoint_every");
    t.monitor_frames = field<std::size_t>(j, "training", "monitor_frames");
    ts.snr.fixed_db = field<double>(j, "training", "snr_db");
    ts.snr.mixed = field<bool>(j, "training", "mixed_snr");
    ts.snr.min_db = field<double>(j, "training", "snr_min_db");
    ts.snr.max_db = field<double>(j, "training", "snr_max_db");
    ts.split.train = field<double>(j.at("training"), "split", "train");
    ts.split.validation = field<double>(j.at("training"), "split", "validation");
    ts.split.test = field<double>(j.at("training"), "split", "test");
    ts.rank = field<int>(j, "training", "rank");
    ts.adapter_mode = parse_adapter_mode(field<std::string>(j, "training", "adapter_mode"));
    ts.adapter.epochs = field<int>(j, "training", "adapter_epochs");
    ts.adapter.batch_size = t.batch_size;
    ts.adapter.adam.learning_rate = field<double>(j, "training", "adapter_learning_rate");
    ts.adapter.seed = field<std::uint64_t>(j, "training", "adapter_seed");
    ts.adapter.loss = t.loss;
    ts.adapter.delta = t.delta;
    if (ts.rank < 0 || ts.rank > n.pilots)
        throw ConfigError("config: training.rank must lie in [0, L=" + std::to_string(n.pilots) + "]");
    t.joint_rank = ts.adapter_mode == AdapterMode::joint ? ts.rank : 0;
    t.validate();
    ts.snr.validate();
    ts.adapter.validate();

    c.bench.snr_grid = field<std::vector<double>>(j, "bench", "snr_grid");
    c.bench.estimators = field<std::vector<std::string>>(j, "bench", "estimators");
    c.bench.format = field<std::string>(j, "bench", "format");
    c.bench.frames = field<std::size_t>(j, "bench", "frames");
    c.bench.seed = field<std::uint64_t>(j, "bench", "seed");
    if (c.bench.snr_grid.empty()) throw ConfigError("config: bench.snr_grid is empty");
    if (c.bench.frames < 1) throw ConfigError("config: bench.frames must be >= 1");
    parse_report_format(c.bench.format);

    c.io.frames = field<std::size_t>(j, "io", "frames");
    c.io.seed = field<std::uint64_t>(j, "io", "seed");
    c.io.dataset = field<std::string>(j, "io", "dataset");
    c.io.checkpoint = field<std::string>(j, "io", "checkpoint");
    c.io.filter = field<std::string>(j, "io", "filter");
    c.io.report = field<std::string>(j, "io", "report");
    if (c.io.frames < 1) throw ConfigError("config: io.frames must be >= 1");
    return c;
}

inline bool is_integral_json(const Json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

/// Overlays `user` onto `base`, rejecting keys `base` does not have and
/// values whose JSON type differs from the default's.
inline void merge_checked(Json& base, const Json& user, const std::string& path) {
    if (!user.is_object()) throw ConfigError("config: " + (path.empty() ? "document" : path) + " must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
        Json& dst = base[it.key()];
        const Json& src = it.value();
        if (dst.is_object()) {
            merge_checked(dst, src, key);
            continue;
        }
        const bool ok = key == "training.huber_delta" ? (src.is_string() || src.is_number())
                        : is_integral_json(dst)       ? is_integral_json(src)
                        : dst.is_number()             ? src.is_number()
                        : dst.is_array()              ? src.is_array()
                                                      : src.type() == dst.type();
        if (!ok) throw ConfigError("config: field '" + key + "' expects " + std::string(dst.type_name()));
        if (is_integral_json(dst) && src.is_number_integer() && src.get<std::int64_t>() < 0 && dst.is_number_unsigned())
            throw ConfigError("config: field '" + key + "' must be non-negative");
        dst = src;
    }
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError(origin + ":" + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
    }
}

}  // namespace detail

inline Json config_to_json(const RunConfig& c) { return detail::config_to_json(c); }

/// Builds a config from a JSON document plus "section.key=value" overrides.
/// Override values are read as JSON when they parse, otherwise as strings.
inline RunConfig resolve_config(const Json& user, const std::vector<std::string>& overrides = {}) {
    Json doc = user.is_null() ? Json::object() : user;
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + o + "'");
        const std::string key = o.substr(0, eq), raw = o.substr(eq + 1);
        Json value = Json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        Json* node = &doc;
        std::size_t start = 0;
        while (true) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw ConfigError("--set: malformed key '" + key + "'");
            if (dot == std::string::npos) {
                (*node)[part] = value;
                break;
            }
            if (!node->contains(part)) (*node)[part] = Json::object();
            node = &(*node)[part];
            if (!node->is_object()) throw ConfigError("--set: '" + key + "' descends into a non-object");
            start = dot + 1;
        }
    }
    RunConfig defaults;
    if (doc.contains("scenario") && doc["scenario"].is_object() && doc["scenario"].contains("preset")) {
        if (!doc["scenario"]["preset"].is_string()) throw ConfigError("config: field 'scenario.preset' expects string");
        defaults.preset = doc["scenario"]["preset"].get<std::string>();
        defaults.scenario = scenario_preset(defaults.preset);
    }
    Json base = detail::config_to_json(defaults);
    detail::merge_checked(base, doc, "");
    return detail::config_from_json(base);
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    if (path.empty()) return resolve_config(Json::object(), overrides);
    return resolve_config(detail::parse_json_text(read_file(path), path), overrides);
}

inline std::string config_text(const RunConfig& c) { return config_to_json(c).dump(2); }

/// CRC-32 of the compact resolved document, as 8 hex digits.
inline std::string config_hash(const RunConfig& c) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", detail::crc32_bytes(config_to_json(c).dump()));
    return buf;
}

}  // namespace amselab

#endif  // AMSELAB_IO_CONFIG_HPP
