#ifndef AMSELAB_BENCH_REPORT_HPP
#define AMSELAB_BENCH_REPORT_HPP

// Sweep report serialization.
//
// CSV: one metadata comment line, the header
//   estimator,snr_db,nmse,nmse_mean_ratio,std_error,frames
// and one record per row. JSON: {"schema": "amselab.sweep", "version": 1,
// "scenario", "config_hash", "seed", "rows": [...]}. Doubles are written in
// shortest round-trip form, so parse → emit reproduces the bytes.

#include "amselab/bench/sweep.hpp"
#include "amselab/util/format.hpp"

#include <json.hpp>

#include <sstream>
#include <string>
#include <vector>

namespace amselab {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kCsvHeader = "estimator,snr_db,nmse,nmse_mean_ratio,std_error,frames";

enum class ReportFormat { csv, json };

inline ReportFormat parse_report_format(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw ConfigError("unknown report format '" + s + "' (expected csv or json)");
}

namespace detail {

inline void check_csv_field(const std::string& s, const char* what, bool metadata = false) {
    if (s.find_first_of(metadata ? ",\n\r= " : ",\n\r") != std::string::npos)
        throw ConfigError(std::string("report: ") + what + " '" + s + "' contains a reserved character");
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline std::string emit_csv(const SweepResult& r) {
    detail::check_csv_field(r.scenario, "scenario", true);
    detail::check_csv_field(r.config_hash, "config hash", true);
    std::ostringstream os;
    os << "# amselab-sweep v" << kReportSchemaVersion << " scenario=" << r.scenario << " config_hash=" << r.config_hash
       << " seed=" << r.seed << "\n";
    os << kCsvHeader << "\n";
    for (const SweepRow& row : r.rows) {
        detail::check_csv_field(row.estimator, "estimator tag");
        os << row.estimator << ',' << format_double(row.snr_db) << ',' << format_double(row.nmse) << ','
           << format_double(row.nmse_mean_ratio) << ',' << format_double(row.std_error) << ',' << row.frames << "\n";
    }
    return os.str();
}

inline SweepResult parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    SweepResult r;
    if (!std::getline(is, line) || line.rfind("# amselab-sweep v", 0) != 0)
        throw ConfigError("report: missing metadata line");
    for (const std::string& tok : detail::split(line, ' ')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        if (key == "scenario") r.scenario = value;
        else if (key == "config_hash") r.config_hash = value;
        else if (key == "seed") r.seed = parse_integer<std::uint64_t>(value);
    }
    if (line.rfind("# amselab-sweep v" + std::to_string(kReportSchemaVersion) + " ", 0) != 0)
        throw ConfigError("report: unsupported schema version");
    if (!std::getline(is, line) || line != kCsvHeader) throw ConfigError("report: bad CSV header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split(line, ',');
        if (f.size() != 6) throw ConfigError("report: CSV record with " + std::to_string(f.size()) + " fields");
        r.rows.push_back({f[0], parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4]),
                          parse_integer<std::uint64_t>(f[5])});
    }
    return r;
}

inline std::string emit_json(const SweepResult& r) {
    nlohmann::ordered_json j;
    j["schema"] = "amselab.sweep";
    j["version"] = kReportSchemaVersion;
    j["scenario"] = r.scenario;
    j["config_hash"] = r.config_hash;
    j["seed"] = r.seed;
    j["rows"] = nlohmann::ordered_json::array();
    for (const SweepRow& row : r.rows) {
        nlohmann::ordered_json o;
        o["estimator"] = row.estimator;
        o["snr_db"] = row.snr_db;
        o["nmse"] = row.nmse;
        o["nmse_mean_ratio"] = row.nmse_mean_ratio;
        o["std_error"] = row.std_error;
        o["frames"] = row.frames;
        j["rows"].push_back(std::move(o));
    }
    return j.dump(2) + "\n";
}

inline SweepResult parse_json(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
        if (j.at("schema").get<std::string>() != "amselab.sweep") throw ConfigError("report: wrong schema tag");
        if (j.at("version").get<int>() != kReportSchemaVersion) throw ConfigError("report: unsupported schema version");
        SweepResult r;
        r.scenario = j.at("scenario").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& o : j.at("rows"))
            r.rows.push_back({o.at("estimator").get<std::string>(), o.at("snr_db").get<double>(),
                              o.at("nmse").get<double>(), o.at("nmse_mean_ratio").get<double>(),
                              o.at("std_error").get<double>(), o.at("frames").get<std::uint64_t>()});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report: malformed JSON: ") + e.what());
    }
}

inline std::string emit_report(const SweepResult& r, ReportFormat f) {
    return f == ReportFormat::csv ? emit_csv(r) : emit_json(r);
}

inline std::string emit_report(const SweepResult& r, const std::string& format) {
    return emit_report(r, parse_report_format(format));
}

inline SweepResult parse_report(const std::string& text, ReportFormat f) {
    return f == ReportFormat::csv ? parse_csv(text) : parse_json(text);
}

}  // namespace amselab

#endif  // AMSELAB_BENCH_REPORT_HPP
