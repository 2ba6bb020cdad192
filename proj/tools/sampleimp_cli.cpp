// sampleimp: gradient-norm sample importance toolkit.
//
//   sampleimp synth  --seed 7 --length 5000 --out series.csv
//   sampleimp rank   --config run.json --out rank_out/
//   sampleimp sweep  --config run.json --out sweep_out/ --workers 4
//   sampleimp report --results sweep_out/results.csv --out rerendered/
//
// Exit codes: 0 ok, 2 config/usage, 3 data, 4 numerical failure, 5 partial.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sampleimp/checkpoint.hpp"
#include "sampleimp/config.hpp"
#include "sampleimp/data.hpp"
#include "sampleimp/errors.hpp"
#include "sampleimp/experiment.hpp"
#include "sampleimp/importance.hpp"
#include "sampleimp/report.hpp"
#include "sampleimp/rng.hpp"
#include "sampleimp/text.hpp"
#include "sampleimp/training.hpp"

namespace fs = std::filesystem;
using namespace sampleimp;

namespace {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumeric = 4, kPartial = 5 };

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    std::optional<std::size_t> workers;
};

struct SweepFlags {
    std::string p_values;
    std::optional<std::uint64_t> runs;
    std::optional<std::uint64_t> master_seed;
    std::optional<std::uint64_t> epochs;
    std::string wall_time;
};

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

// defaults < config file < --set < dedicated flags
FlatConfig effective_config(const CommonOptions& common, const SweepFlags* flags) {
    FlatConfig cfg = default_flat_config();
    if (!common.config_path.empty()) merge_config(cfg, read_config_file(common.config_path));
    for (const auto& kv : common.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (flags) {
        if (!flags->p_values.empty()) set_config_value(cfg, "sweep.p_values", flags->p_values);
        if (flags->runs) cfg["sweep.runs"] = *flags->runs;
        if (flags->master_seed) cfg["sweep.master_seed"] = *flags->master_seed;
        if (flags->epochs) cfg["train.epochs"] = *flags->epochs;
        if (!flags->wall_time.empty()) cfg["report.wall_time"] = flags->wall_time;
    }
    return cfg;
}

fs::path output_dir(const CommonOptions& common) {
    if (!common.out_dir.empty()) return common.out_dir;
    if (auto e = env("SAMPLEIMP_OUT_DIR")) return *e;
    throw ConfigError("no output directory: pass --out or set SAMPLEIMP_OUT_DIR");
}

std::size_t worker_count(const CommonOptions& common) {
    if (common.workers) return std::max<std::size_t>(1, *common.workers);
    if (auto e = env("SAMPLEIMP_WORKERS")) {
        const auto v = parse_uint64(*e);
        if (!v || *v == 0) throw ConfigError("SAMPLEIMP_WORKERS must be a positive integer");
        return *v;
    }
    return 1;
}

PreparedData load_prepared(const SweepConfig& sweep) {
    auto loaded = load_series(sweep.dataset);
    if (loaded.dropped_rows > 0) {
        std::cerr << "warning: dropped " << loaded.dropped_rows << " row(s) with unparseable values\n";
    }
    return prepare_dataset(loaded.series, sweep.dataset.window, sweep.dataset.train_fraction);
}

int cmd_synth(std::uint64_t seed, std::size_t length, const SynthProfile& profile, const std::string& out,
              const std::string& value_column, const std::string& timestamp_column) {
    const auto series = synth_series(seed, length, profile);
    const fs::path path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_series_csv(path, series, value_column, timestamp_column);
    std::cout << "wrote " << series.size() << " points to " << path.string() << "\n";
    return kOk;
}

int cmd_rank(const CommonOptions& common) {
    const auto flat = effective_config(common, nullptr);
    const auto sweep = sweep_from_flat(flat);
    const auto out = output_dir(common);
    const auto data = load_prepared(sweep);

    TrainConfig cfg = sweep.train;
    cfg.seed = run_seed(sweep.master_seed, 0);
    const auto tracked = train_tracked(cfg, data.train);
    const auto ranking = importance_scores(tracked.log);

    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create output directory " + out.string());
    write_ranking_csv(out / "ranking.csv", ranking);
    write_gradient_log_csv(out / "gradient_log.csv", tracked.log);
    write_gradient_log_binary(out / "gradient_log.bin", tracked.log);
    save_checkpoint(out / "model.ckpt", tracked.model, config_hash(flat.dump()));
    std::cout << "ranked " << ranking.scores.size() << " samples over " << tracked.log.epochs_completed()
              << " epochs -> " << out.string() << "\n";
    return kOk;
}

int exit_for(const ExperimentReport& report) {
    if (!report.partial()) return kOk;
    if (report.rows.empty()) {
        for (const auto& f : report.failures) {
            if (f.numerical) return kNumeric;
        }
    }
    return kPartial;
}

void print_failures(const ExperimentReport& report) {
    for (const auto& f : report.failures) {
        std::cerr << "run " << f.run_seed << (f.p ? " p=" + format_double(*f.p) : std::string(" baseline"))
                  << " failed: " << f.message << "\n";
    }
}

int cmd_sweep(const CommonOptions& common, const SweepFlags& flags) {
    const auto flat = effective_config(common, &flags);
    const auto sweep = sweep_from_flat(flat);
    const auto out = output_dir(common);
    const auto workers = worker_count(common);
    const auto data = load_prepared(sweep);

    const auto report = run_sweep(sweep, data, workers);
    emit_report(report, out);
    print_failures(report);
    std::cout << "sweep: " << report.rows.size() << " rows";
    if (report.best_p) std::cout << ", best p = " << format_double(*report.best_p);
    std::cout << " -> " << out.string() << "\n";
    return exit_for(report);
}

int cmd_report(const std::string& results, std::string summary, std::string out) {
    const fs::path results_path(results);
    if (summary.empty()) summary = (results_path.parent_path() / "summary.json").string();
    if (out.empty()) out = results_path.parent_path().string();
    std::string results_text, summary_text;
    try {
        results_text = read_file(results_path);
    } catch (const std::runtime_error& e) {
        throw DataError(e.what());
    }
    try {
        summary_text = read_file(summary);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    auto ctx = parse_summary_json(summary_text);
    const auto report =
        build_report(ctx.config, ctx.dataset, parse_results_csv(results_text), std::move(ctx.failures));
    emit_report(report, out);
    std::cout << "re-rendered " << report.rows.size() << " rows -> " << out << "\n";
    return exit_for(report);
}

void add_common(CLI::App* cmd, CommonOptions& common, bool with_workers) {
    cmd->add_option("-c,--config", common.config_path, "JSON config with dotted keys (or a summary.json)");
    cmd->add_option("--set", common.sets, "Override one config key: key=value")->take_all();
    cmd->add_option("-o,--out", common.out_dir, "Output directory (env SAMPLEIMP_OUT_DIR)");
    if (with_workers) {
        cmd->add_option("-w,--workers", common.workers, "Concurrent training tasks (env SAMPLEIMP_WORKERS)")
            ->check(CLI::PositiveNumber);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient-norm sample importance: rank, select and retrain on the top-p% samples"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic traffic-like series as CSV");
    std::uint64_t synth_seed = 1;
    std::size_t synth_length = 5000;
    SynthProfile profile;
    std::string synth_out, value_column = "value", timestamp_column = "timestamp";
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--length", synth_length, "Number of points")->check(CLI::PositiveNumber);
    synth->add_option("-o,--out", synth_out, "Output CSV path")->required();
    synth->add_option("--base", profile.base);
    synth->add_option("--daily-amplitude", profile.daily_amplitude);
    synth->add_option("--daily-period", profile.daily_period)->check(CLI::PositiveNumber);
    synth->add_option("--weekly-modulation", profile.weekly_modulation);
    synth->add_option("--weekly-period", profile.weekly_period)->check(CLI::PositiveNumber);
    synth->add_option("--noise-std", profile.noise_std)->check(CLI::NonNegativeNumber);
    synth->add_option("--spike-rate", profile.spike_rate)->check(CLI::Range(0.0, 1.0));
    synth->add_option("--spike-scale", profile.spike_scale);
    synth->add_option("--start-ms", profile.start_ms);
    synth->add_option("--interval-ms", profile.interval_ms)->check(CLI::PositiveNumber);
    synth->add_option("--value-column", value_column);
    synth->add_option("--timestamp-column", timestamp_column);

    // rank
    CommonOptions rank_opts;
    auto* rank = app.add_subcommand("rank", "Train once with gradient tracking; write scores, ranks and G");
    add_common(rank, rank_opts, false);

    // sweep
    CommonOptions sweep_opts;
    SweepFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "Run the full p-sweep over several seeded runs and emit a report");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--p-values", sweep_flags.p_values, "Comma-separated percentages, e.g. 10,50,100");
    sweep->add_option("--runs", sweep_flags.runs, "Independent runs")->check(CLI::PositiveNumber);
    sweep->add_option("--master-seed", sweep_flags.master_seed, "Seed all run seeds derive from");
    sweep->add_option("--epochs", sweep_flags.epochs, "Training epochs")->check(CLI::PositiveNumber);
    sweep->add_option("--wall-time", sweep_flags.wall_time, "measured | omitted")
        ->check(CLI::IsMember({"measured", "omitted"}));

    // report
    std::string report_results, report_summary, report_out;
    auto* report = app.add_subcommand("report", "Re-render report files from results.csv + summary.json");
    report->add_option("--results", report_results, "Path to results.csv")->required();
    report->add_option("--summary", report_summary, "Path to summary.json (default: next to results.csv)");
    report->add_option("-o,--out", report_out, "Output directory (default: next to results.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*synth) {
            return cmd_synth(synth_seed, synth_length, profile, synth_out, value_column, timestamp_column);
        }
        if (*rank) return cmd_rank(rank_opts);
        if (*sweep) return cmd_sweep(sweep_opts, sweep_flags);
        if (*report) return cmd_report(report_results, report_summary, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
