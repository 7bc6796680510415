#ifndef AMSELAB_CLI_COMMANDS_HPP
#define AMSELAB_CLI_COMMANDS_HPP

#include "amselab/bench/experiments.hpp"
#include "amselab/bench/report.hpp"
#include "amselab/io/config.hpp"
#include "amselab/io/serialize.hpp"
#include "amselab/training/adapter.hpp"

#include <algorithm>
#include <map>
#include <exception>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace amselab::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kIntegrity = 4, kNumerical = 5 };

/// Maps the library error taxonomy onto process exit codes.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IntegrityError*>(&e)) return kIntegrity;
    if (dynamic_cast<const IoError*>(&e)) return kIo;
    if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return kConfig;
    return kNumerical;
}

struct Context {
    std::ostream& out = std::cout;  // results
    std::ostream& log = std::cerr;  // resolved config, progress
    unsigned threads = 1;
};

inline void echo_config(const RunConfig& cfg, Context& ctx) {
    ctx.log << "# resolved config (hash " << config_hash(cfg) << ")\n" << config_text(cfg) << "\n";
}

/// Rejects a dataset whose grid or pilot layout differs from the config.
inline void check_dataset_matches(const Dataset& ds, const RunConfig& cfg) {
    const bool grid_ok = ds.grid.subcarriers == cfg.grid.subcarriers && ds.grid.symbols == cfg.grid.symbols;
    const bool layout_ok = ds.layout.symbols == cfg.layout.symbols && ds.layout.comb == cfg.layout.comb &&
                           ds.layout.offset == cfg.layout.offset;
    if (!grid_ok || !layout_ok)
        throw ShapeError("dataset grid " + std::to_string(ds.grid.subcarriers) + "x" + std::to_string(ds.grid.symbols) +
                         " (L=" + std::to_string(ds.pattern().size()) + ") does not match the config grid " +
                         std::to_string(cfg.grid.subcarriers) + "x" + std::to_string(cfg.grid.symbols) +
                         " (L=" + std::to_string(cfg.pattern().size()) + ")");
}

inline void check_filter_matches(const AmmseFilter& f, const RunConfig& cfg) {
    if (f.subcarriers != cfg.grid.subcarriers || f.symbols != cfg.grid.symbols || f.pilots() != cfg.pattern().size())
        throw ShapeError("filter dims (N=" + std::to_string(f.subcarriers) + ", M=" + std::to_string(f.symbols) +
                         ", L=" + std::to_string(f.pilots()) + ") do not match the config grid");
}

/// Splits a corpus for training. Corpora too small for three non-empty
/// parts use every frame in each part.
inline DatasetSplit training_split(const Dataset& ds, const SplitFractions& f) {
    if (ds.size() < 3) return {ds, ds, ds};
    return temporal_split(ds, f);
}

// gen

inline Dataset cmd_gen(const RunConfig& cfg, const std::string& out_path, Context& ctx) {
    echo_config(cfg, ctx);
    Dataset ds =
        generate_dataset(cfg.scenario, cfg.grid, cfg.layout, cfg.io.frames, cfg.training.snr, cfg.io.seed, ctx.threads);
    save_dataset(out_path, ds);
    ctx.out << "wrote " << ds.size() << " frames to " << out_path << "\n";
    return ds;
}

// train

struct TrainOutcome {
    Checkpoint checkpoint;
    AmmseFilter filter;
    double validation_nmse = 0.0;
    double test_nmse = 0.0;
};

/// Fixed filter from a checkpoint, optionally reduced to rank r by SVD
/// truncation ("svd") or by adapter fine-tuning ("finetune").
inline AmmseFilter export_filter(const Checkpoint& c, const DatasetSplit& split, const TrainingSection& ts, int rank,
                                 const std::string& method) {
    if (c.best_adapter) {
        const AmmseFilter base = extract_filter(c.best_params, c.network, split.train.frames);
        return rank_adapt(base, *c.best_adapter);
    }
    const AmmseFilter full = extract_filter(c, split.train.frames);
    if (rank == 0) return full;
    if (method == "svd") return factor_svd(full, rank);
    if (method == "finetune") return rank_adapt(full, finetune_adapter(full.w, rank, split.train.frames, ts.adapter));
    throw ConfigError("export: unknown rank method '" + method + "' (expected svd or finetune)");
}

inline TrainOutcome cmd_train(const RunConfig& cfg, const std::string& dataset_path, const std::string& checkpoint_path,
                              const std::string& filter_path, const std::optional<std::string>& resume_path,
                              Context& ctx) {
    echo_config(cfg, ctx);
    const Dataset ds = load_dataset(dataset_path);
    check_dataset_matches(ds, cfg);
    const DatasetSplit split = training_split(ds, cfg.training.split);
    std::optional<Checkpoint> resume;
    if (resume_path) {
        resume = load_checkpoint(*resume_path);
        check_param_shapes(resume->params, cfg.network);
    }
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochReport& r) {
        ctx.log << "epoch " << r.epoch << " train_loss " << format_double(r.train_loss) << " validation_nmse "
                << format_double(r.validation_nmse) << (r.improved ? " *" : "") << "\n";
    };
    hooks.on_checkpoint = [&](const Checkpoint& c) { save_checkpoint(checkpoint_path, c); };

    TrainOutcome out;
    try {
        out.checkpoint = train(split.train, split.validation, cfg.network, cfg.training.train, std::move(resume), hooks);
    } catch (const TrainingDiverged& e) {
        save_checkpoint(checkpoint_path, e.last_finite);
        throw;
    }
    save_checkpoint(checkpoint_path, out.checkpoint);
    out.filter = export_filter(out.checkpoint, split, cfg.training, cfg.training.rank, "finetune");
    save_filter(filter_path, out.filter);
    const CMatrix w = out.filter.effective();
    out.validation_nmse = fixed_filter_nmse(w, split.validation.frames);
    out.test_nmse = fixed_filter_nmse(w, split.test.frames);
    ctx.out << "epochs " << out.checkpoint.epoch << " best_epoch " << out.checkpoint.best_epoch << "\n";
    if (!out.checkpoint.train_loss.empty())
        ctx.out << "train_loss initial " << format_double(out.checkpoint.train_loss.front()) << " final "
                << format_double(out.checkpoint.train_loss.back()) << "\n";
    ctx.out << "validation_nmse " << format_double(out.validation_nmse) << "\n";
    ctx.out << "test_nmse " << format_double(out.test_nmse) << "\n";
    ctx.out << "wrote " << checkpoint_path << " and " << filter_path << " (r=" << out.filter.rank() << ")\n";
    return out;
}

// export

inline AmmseFilter cmd_export(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& dataset_path,
                              int rank, const std::string& method, const std::string& out_path, Context& ctx) {
    echo_config(cfg, ctx);
    const Checkpoint c = load_checkpoint(checkpoint_path);
    check_param_shapes(c.params, cfg.network);
    const Dataset ds = load_dataset(dataset_path);
    check_dataset_matches(ds, cfg);
    if (rank < 0 || rank > cfg.network.pilots) throw ConfigError("export: rank must lie in [0, L]");
    const AmmseFilter f = export_filter(c, training_split(ds, cfg.training.split), cfg.training, rank, method);
    save_filter(out_path, f);
    ctx.out << "wrote " << out_path << " (r=" << f.rank() << ")\n";
    return f;
}

// eval / sweep

/// Channels for evaluation: a stored dataset, or fresh frames drawn from the
/// config scenario with the bench seed.
inline Dataset evaluation_corpus(const RunConfig& cfg, const std::optional<std::string>& dataset_path, Context& ctx) {
    if (dataset_path) {
        Dataset ds = load_dataset(*dataset_path);
        check_dataset_matches(ds, cfg);
        return ds;
    }
    return generate_dataset(cfg.scenario, cfg.grid, cfg.layout, cfg.bench.frames, cfg.training.snr, cfg.bench.seed,
                            ctx.threads);
}

inline std::vector<Estimator> build_estimators(const RunConfig& cfg, const Dataset& corpus,
                                               const std::optional<AmmseFilter>& filter,
                                               const std::optional<Dataset>& calibration) {
    const PilotPattern pattern = corpus.pattern();
    std::uint64_t last = 0;
    for (const FrameRecord& f : corpus.frames) last = std::max(last, f.index);
    std::vector<Estimator> out;
    for (const std::string& tag : cfg.bench.estimators) {
        if (std::find_if(out.begin(), out.end(), [&](const Estimator& e) { return e.tag == tag; }) != out.end())
            throw ConfigError("estimators: '" + tag + "' listed twice");
        if (tag == "ls") {
            out.push_back(ls_bilinear_estimator(pattern));
        } else if (tag == "1d-lmmse") {
            out.push_back(oned_lmmse_estimator(scenario_covariance(corpus.scenario, corpus.grid).rf, pattern));
        } else if (tag == "lmmse-oracle") {
            out.push_back(per_frame_oracle_estimator(corpus.scenario, corpus.grid, pattern, last + 1));
        } else if (tag == "lmmse-mismatched") {
            if (!calibration) throw ConfigError("estimators: lmmse-mismatched needs a --calibration dataset");
            std::vector<CMatrix> hs;
            for (const FrameRecord& f : calibration->frames) hs.push_back(f.h);
            out.push_back(lmmse_estimator("lmmse-mismatched", sample_covariance(hs, pattern).covariances(), pattern,
                                          Provenance::mismatched));
        } else if (tag == "ammse") {
            if (!filter) throw ConfigError("estimators: ammse needs a --filter file");
            out.push_back(filter_estimator("ammse", *filter));
        } else {
            throw ConfigError("estimators: unknown tag '" + tag +
                              "' (expected ls, 1d-lmmse, lmmse-oracle, lmmse-mismatched or ammse)");
        }
    }
    return out;
}

inline void write_report(const std::string& text, const std::string& path, Context& ctx) {
    if (path.empty()) {
        ctx.out << text;
    } else {
        write_file(path, text);
        ctx.log << "wrote report to " << path << "\n";
    }
}

inline std::map<std::string, std::uint64_t> flops_by_tag(const RunConfig& cfg, const std::optional<AmmseFilter>& f) {
    const FlopsDims d{static_cast<std::uint64_t>(cfg.grid.subcarriers), static_cast<std::uint64_t>(cfg.grid.symbols),
                      static_cast<std::uint64_t>(cfg.pattern().size()),
                      static_cast<std::uint64_t>(cfg.layout.symbols.size())};
    std::map<std::string, std::uint64_t> out{{"ls", flops("ls", d)},
                                             {"1d-lmmse", flops("1d-lmmse", d)},
                                             {"lmmse-oracle", flops("lmmse", d)},
                                             {"lmmse-mismatched", flops("lmmse", d)}};
    out["ammse"] = f && f->factored() ? flops("ra-ammse", d, static_cast<std::uint64_t>(f->rank())) : flops("ammse", d);
    return out;
}

inline SweepResult cmd_eval(const RunConfig& cfg, const std::optional<std::string>& filter_path,
                            const std::optional<std::string>& dataset_path,
                            const std::optional<std::string>& calibration_path, bool tradeoff, Context& ctx) {
    echo_config(cfg, ctx);
    std::optional<AmmseFilter> filter;
    if (filter_path) {
        filter = load_filter(*filter_path);
        check_filter_matches(*filter, cfg);
    }
    std::optional<Dataset> calibration;
    if (calibration_path) {
        calibration = load_dataset(*calibration_path);
        check_dataset_matches(*calibration, cfg);
    }
    const Dataset corpus = evaluation_corpus(cfg, dataset_path, ctx);
    SweepResult r = snr_sweep(build_estimators(cfg, corpus, filter, calibration), corpus.frames, corpus.pattern(),
                              cfg.bench.snr_grid, cfg.bench.seed, ctx.threads);
    r.scenario = corpus.scenario.name;
    r.config_hash = config_hash(cfg);
    write_report(emit_report(r, cfg.bench.format), cfg.io.report, ctx);
    if (tradeoff) {
        std::map<std::string, std::string> reported{{"ls", "15K"}, {"1d-lmmse", "41K"}, {"lmmse-oracle", "21M"}};
        reported["ammse"] = filter && filter->factored() ? "8608r" : "5.8K";
        ctx.log << "estimator,flops,mean_nmse,reported_flops\n";
        for (const TradeoffPoint& p : tradeoff_report(r, flops_by_tag(cfg, filter), reported))
            ctx.log << p.estimator << "," << p.flops << "," << format_double(p.mean_nmse) << "," << p.reported_flops
                    << "\n";
    }
    return r;
}

/// Parses "snr=path" entries naming filters trained at fixed SNRs.
inline std::vector<std::pair<double, std::string>> parse_filter_specs(const std::vector<std::string>& specs) {
    std::vector<std::pair<double, std::string>> out;
    for (const std::string& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
            throw ConfigError("--filters expects snr_db=path, got '" + s + "'");
        out.emplace_back(parse_double(s.substr(0, eq)), s.substr(eq + 1));
    }
    return out;
}

inline RobustnessReport cmd_sweep(const RunConfig& cfg, const std::vector<std::string>& filter_specs,
                                  const std::optional<std::string>& dataset_path, Context& ctx) {
    echo_config(cfg, ctx);
    std::vector<std::pair<double, AmmseFilter>> filters;
    for (const auto& [snr, path] : parse_filter_specs(filter_specs)) {
        AmmseFilter f = load_filter(path);
        check_filter_matches(f, cfg);
        filters.emplace_back(snr, std::move(f));
    }
    const Dataset corpus = evaluation_corpus(cfg, dataset_path, ctx);
    std::uint64_t last = 0;
    for (const FrameRecord& f : corpus.frames) last = std::max(last, f.index);
    const PilotPattern pattern = corpus.pattern();
    RobustnessReport rep =
        mismatch_robustness(filters, per_frame_oracle_estimator(corpus.scenario, corpus.grid, pattern, last + 1),
                            corpus.frames, pattern, cfg.bench.snr_grid, cfg.bench.seed, ctx.threads);
    rep.sweep.scenario = corpus.scenario.name;
    rep.sweep.config_hash = config_hash(cfg);
    write_report(emit_report(rep.sweep, cfg.bench.format), cfg.io.report, ctx);
    ctx.log << "checkpoint,train_snr_db,worst_nmse,worst_nmse_snr_db,worst_regret,worst_regret_snr_db\n";
    for (const RobustnessEntry& e : rep.entries)
        ctx.log << e.tag << "," << format_double(e.train_snr_db) << "," << format_double(e.worst_nmse) << ","
                << format_double(e.worst_nmse_snr_db) << "," << format_double(e.worst_regret) << ","
                << format_double(e.worst_regret_snr_db) << "\n";
    return rep;
}

// flops

inline void cmd_flops(const FlopsDims& d, const std::vector<std::uint64_t>& ranks, Context& ctx) {
    d.validate();
    ctx.log << "# dims N=" << d.n << " M=" << d.m << " L=" << d.l << " pilot_symbols=" << d.pilot_symbols << "\n";
    ctx.out << "method,formula_flops,reported_flops,provenance,note\n";
    for (const ReportedFlops& r : reported_flops_table()) {
        std::string formula = "-";
        if (r.formula_tag && *r.formula_tag == "ra-ammse")
            formula = std::to_string(flops("ra-ammse", d, 1)) + "r";
        else if (r.formula_tag)
            formula = std::to_string(flops(*r.formula_tag, d));
        ctx.out << r.method << "," << formula << "," << r.reported << ",formula/reported-table," << r.note << "\n";
    }
    ctx.out << "\nrank,ra_formula_flops,ammse_formula_flops,complexity_ratio\n";
    for (std::uint64_t r : ranks) {
        if (r < 1 || r > d.l) throw ConfigError("flops: rank " + std::to_string(r) + " outside [1, L]");
        ctx.out << r << "," << flops("ra-ammse", d, r) << "," << flops("ammse", d) << ","
                << format_double(complexity_ratio(d, r)) << "\n";
    }
}

}  // namespace amselab::cli

#endif  // AMSELAB_CLI_COMMANDS_HPP
