#include "amselab/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace amselab;

struct ConfigArgs {
    std::string path;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", path, "JSON run configuration (defaults apply when omitted)");
        cmd->add_option("--set", overrides, "Override a config field, e.g. --set training.epochs=20");
    }

    RunConfig resolve() const { return load_config(path, overrides); }
};

std::optional<std::string> optional_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"A-MMSE channel estimation lab"};
    app.require_subcommand(1);
    unsigned threads = 1;
    app.add_option("-j,--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    ConfigArgs gen_cfg, train_cfg, eval_cfg, sweep_cfg, export_cfg;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a channel dataset");
    gen_cfg.attach(gen);
    gen->add_option("-o,--out", gen_out, "Dataset file (default io.dataset)");

    std::string train_dataset, train_checkpoint, train_filter, train_resume;
    auto* train_cmd = app.add_subcommand("train", "Train the network and export the fixed filter");
    train_cfg.attach(train_cmd);
    train_cmd->add_option("-d,--dataset", train_dataset, "Dataset file (default io.dataset)");
    train_cmd->add_option("--checkpoint", train_checkpoint, "Checkpoint file (default io.checkpoint)");
    train_cmd->add_option("--filter", train_filter, "Filter file (default io.filter)");
    train_cmd->add_option("--resume", train_resume, "Continue from a checkpoint");

    std::string eval_filter, eval_dataset, eval_calibration, eval_estimators, eval_format, eval_out;
    std::vector<double> eval_snr;
    bool eval_tradeoff = false;
    auto* eval = app.add_subcommand("eval", "SNR sweep of a filter and classical baselines");
    eval_cfg.attach(eval);
    eval->add_option("-f,--filter", eval_filter, "Exported filter file");
    eval->add_option("-d,--dataset", eval_dataset, "Evaluate on a stored dataset instead of fresh frames");
    eval->add_option("--calibration", eval_calibration, "Dataset whose sample covariance builds lmmse-mismatched");
    eval->add_option("--estimators", eval_estimators, "Comma-separated estimator tags (default bench.estimators)");
    eval->add_option("--snr", eval_snr, "SNR grid in dB (default bench.snr_grid)")->delimiter(',');
    eval->add_option("--format", eval_format, "csv or json (default bench.format)");
    eval->add_option("-o,--out", eval_out, "Report file (default io.report, empty for stdout)");
    eval->add_flag("--tradeoff", eval_tradeoff, "Also print the FLOPs/NMSE trade-off table");

    std::vector<std::string> sweep_filters;
    std::string sweep_dataset, sweep_out;
    auto* sweep = app.add_subcommand("sweep", "SNR-mismatch robustness of filters trained at fixed SNRs");
    sweep_cfg.attach(sweep);
    sweep->add_option("--filters", sweep_filters, "snr_db=path entries, at least two")->required()->delimiter(',');
    sweep->add_option("-d,--dataset", sweep_dataset, "Evaluate on a stored dataset instead of fresh frames");
    sweep->add_option("-o,--out", sweep_out, "Report file (default io.report, empty for stdout)");

    FlopsDims dims;
    std::vector<std::uint64_t> ranks{7, 12, 36, 72};
    auto* flops_cmd = app.add_subcommand("flops", "Per-estimate FLOPs table");
    flops_cmd->add_option("-N", dims.n, "Subcarriers");
    flops_cmd->add_option("-M", dims.m, "Symbols");
    flops_cmd->add_option("-L", dims.l, "Pilots");
    flops_cmd->add_option("--pilot-symbols", dims.pilot_symbols, "Pilot-bearing symbols");
    flops_cmd->add_option("-r,--ranks", ranks, "Adapter ranks")->delimiter(',');

    std::string export_checkpoint, export_dataset, export_method = "svd", export_out;
    int export_rank = 0;
    auto* export_cmd = app.add_subcommand("export", "Export a (rank-reduced) filter from a checkpoint");
    export_cfg.attach(export_cmd);
    export_cmd->add_option("--checkpoint", export_checkpoint, "Checkpoint file (default io.checkpoint)");
    export_cmd->add_option("-d,--dataset", export_dataset, "Calibration dataset (default io.dataset)");
    export_cmd->add_option("-r,--rank", export_rank, "Rank; 0 exports the full filter");
    export_cmd->add_option("--method", export_method, "svd or finetune")->check(CLI::IsMember({"svd", "finetune"}));
    export_cmd->add_option("-o,--out", export_out, "Filter file (default io.filter)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kConfig;
    }

    cli::Context ctx{std::cout, std::cerr, threads};
    auto pick = [](const std::string& flag, const std::string& fallback) { return flag.empty() ? fallback : flag; };
    try {
        if (gen->parsed()) {
            const RunConfig cfg = gen_cfg.resolve();
            cli::cmd_gen(cfg, pick(gen_out, cfg.io.dataset), ctx);
        } else if (train_cmd->parsed()) {
            const RunConfig cfg = train_cfg.resolve();
            cli::cmd_train(cfg, pick(train_dataset, cfg.io.dataset), pick(train_checkpoint, cfg.io.checkpoint),
                           pick(train_filter, cfg.io.filter), optional_path(train_resume), ctx);
        } else if (eval->parsed()) {
            RunConfig cfg = eval_cfg.resolve();
            if (!eval_estimators.empty()) {
                cfg.bench.estimators.clear();
                std::size_t start = 0;
                while (start <= eval_estimators.size()) {
                    const auto comma = eval_estimators.find(',', start);
                    cfg.bench.estimators.push_back(eval_estimators.substr(start, comma - start));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
            if (!eval_snr.empty()) cfg.bench.snr_grid = eval_snr;
            if (!eval_format.empty()) cfg.bench.format = eval_format;
            if (!eval_out.empty()) cfg.io.report = eval_out;
            cfg = resolve_config(config_to_json(cfg));
            cli::cmd_eval(cfg, optional_path(eval_filter), optional_path(eval_dataset), optional_path(eval_calibration),
                          eval_tradeoff, ctx);
        } else if (sweep->parsed()) {
            RunConfig cfg = sweep_cfg.resolve();
            if (!sweep_out.empty()) cfg.io.report = sweep_out;
            cli::cmd_sweep(cfg, sweep_filters, optional_path(sweep_dataset), ctx);
        } else if (flops_cmd->parsed()) {
            cli::cmd_flops(dims, ranks, ctx);
        } else if (export_cmd->parsed()) {
            const RunConfig cfg = export_cfg.resolve();
            cli::cmd_export(cfg, pick(export_checkpoint, cfg.io.checkpoint), pick(export_dataset, cfg.io.dataset),
                            export_rank, export_method, pick(export_out, cfg.io.filter), ctx);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_code_for(e);
    }
    return cli::kOk;
}
