#include "sampleimp/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sampleimp/config.hpp"
#include "sampleimp/errors.hpp"
#include "sampleimp/text.hpp"

namespace sampleimp {

namespace {

using ojson = nlohmann::ordered_json;

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson aggregate_json(const Aggregate& a) {
    return ojson{{"n", a.n},
                 {"mean_mae", num(a.mean_mae)},
                 {"std_mae", num(a.std_mae)},
                 {"mean_rmse", num(a.mean_rmse)},
                 {"std_rmse", num(a.std_rmse)},
                 {"mean_wall_time_s", num(a.mean_wall_time_s)},
                 {"mean_sample_visits", num(a.mean_sample_visits)}};
}

std::string p_label(double p) { return format_double(p); }

}  // namespace

std::string render_results_csv(const ExperimentReport& report) {
    std::string out = "p,run_seed,mae,rmse,wall_time_s,sample_visits,param_updates\n";
    for (const auto& r : report.rows) {
        out += r.p ? p_label(*r.p) : std::string("full");
        out += ',' + std::to_string(r.run_seed);
        out += ',' + format_double(r.mae);
        out += ',' + format_double(r.rmse);
        out += ',' + format_double(r.wall_time_s);
        out += ',' + std::to_string(r.sample_visits);
        out += ',' + std::to_string(r.param_updates);
        out += '\n';
    }
    return out;
}

std::string render_summary_json(const ExperimentReport& report) {
    ojson j;
    j["schema_version"] = kSummarySchemaVersion;
    j["status"] = report.partial() ? "partial" : "complete";
    j["dataset"] = {{"series_length", report.dataset.series_length},
                    {"train_samples", report.dataset.train_samples},
                    {"test_samples", report.dataset.test_samples}};
    j["baseline"] = report.baseline ? aggregate_json(*report.baseline) : ojson(nullptr);
    ojson per_p = ojson::array();
    for (const auto& a : report.per_p) {
        ojson e{{"p", a.p}, {"k", a.k}};
        const ojson stats = aggregate_json(a.stats);
        for (const auto& [key, value] : stats.items()) e[key] = value;
        e["mae_improvement_abs"] = num(a.mae_improvement_abs);
        e["mae_improvement_pct"] = num(a.mae_improvement_pct);
        e["time_improvement_s"] = num(a.time_improvement_s);
        e["time_improvement_pct"] = num(a.time_improvement_pct);
        per_p.push_back(std::move(e));
    }
    j["per_p"] = std::move(per_p);
    j["best_p"] = report.best_p ? ojson(*report.best_p) : ojson(nullptr);
    if (report.improvement_ci) {
        const auto& ci = *report.improvement_ci;
        j["improvement_ci"] = {{"method", "percentile bootstrap of the mean"},
                               {"quantity", "baseline MAE - subset MAE, paired by run"},
                               {"p", ci.p},
                               {"level", report.config.ci_level},
                               {"resamples", report.config.bootstrap_resamples},
                               {"diffs", ci.diffs},
                               {"mean", ci.mean},
                               {"lo", ci.interval.lo},
                               {"hi", ci.interval.hi}};
    } else {
        j["improvement_ci"] = nullptr;
    }
    ojson failures = ojson::array();
    for (const auto& f : report.failures) {
        failures.push_back({{"run_seed", f.run_seed},
                            {"p", f.p ? ojson(*f.p) : ojson(nullptr)},
                            {"numerical", f.numerical},
                            {"message", f.message}});
    }
    j["failures"] = std::move(failures);
    j["config"] = flat_from_sweep(report.config);
    return j.dump(2) + "\n";
}

std::string render_table_md(const ExperimentReport& report) {
    std::ostringstream os;
    os << "| Dataset Size (Samples) | Percentage of Samples Used (%) | Samples Used | MAE (mean ± 1σ) "
          "| MAE Improvement (abs) | MAE Improvement (%) | Training Time Improvement (s) "
          "| Training Time Improvement (%) |\n";
    os << "|---|---|---|---|---|---|---|---|\n";
    const auto cell = [](double v, int digits) {
        return std::isfinite(v) ? format_fixed(v, digits) : std::string("n/a");
    };
    if (report.baseline) {
        const auto& b = *report.baseline;
        os << "| " << report.dataset.train_samples << " | full | " << report.dataset.train_samples << " | "
           << cell(b.mean_mae, 4) << " ± " << cell(b.std_mae, 4) << " | 0.0000 | 0.00 | 0.000 | 0.00 |\n";
    }
    for (const auto& a : report.per_p) {
        const bool best = report.best_p && *report.best_p == a.p;
        os << "| " << report.dataset.train_samples << " | " << p_label(a.p) << (best ? " (best)" : "")
           << " | " << a.k << " | " << cell(a.stats.mean_mae, 4) << " ± " << cell(a.stats.std_mae, 4)
           << " | " << cell(a.mae_improvement_abs, 4) << " | " << cell(a.mae_improvement_pct, 2) << " | "
           << cell(a.time_improvement_s, 3) << " | " << cell(a.time_improvement_pct, 2) << " |\n";
    }
    if (report.improvement_ci) {
        const auto& ci = *report.improvement_ci;
        os << "\nBest p = " << p_label(ci.p) << ": MAE improvement " << cell(ci.mean, 4) << ", "
           << format_double(100.0 * report.config.ci_level) << "% percentile bootstrap CI ["
           << cell(ci.interval.lo, 4) << ", " << cell(ci.interval.hi, 4) << "] over " << ci.diffs.size()
           << " runs.\n";
    } else {
        os << "\nNo p reached the baseline MAE.\n";
    }
    if (report.partial()) os << "\nPartial report: " << report.failures.size() << " task(s) failed.\n";
    return os.str();
}

std::string render_curves_svg(const ExperimentReport& report) {
    constexpr double W = 640, H = 420, left = 70, right = 20, top = 30, bottom = 60;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto extend = [&](double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    };
    for (const auto& a : report.per_p) {
        extend(a.stats.mean_mae - a.stats.std_mae);
        extend(a.stats.mean_mae + a.stats.std_mae);
    }
    if (report.baseline) extend(report.baseline->mean_mae);
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.08 * (hi - lo);
    lo -= pad;
    hi += pad;

    const auto sx = [&](double p) { return left + (W - left - right) * p / 100.0; };
    const auto sy = [&](double v) { return top + (H - top - bottom) * (hi - v) / (hi - lo); };
    const auto f = [](double v) { return format_fixed(v, 2); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(W) << "\" height=\"" << f(H)
       << "\" viewBox=\"0 0 " << f(W) << ' ' << f(H) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    os << "<line x1=\"" << f(left) << "\" y1=\"" << f(H - bottom) << "\" x2=\"" << f(W - right) << "\" y2=\""
       << f(H - bottom) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << f(left) << "\" y1=\"" << f(top) << "\" x2=\"" << f(left) << "\" y2=\""
       << f(H - bottom) << "\" stroke=\"black\"/>\n";
    for (int p = 0; p <= 100; p += 10) {
        os << "<line x1=\"" << f(sx(p)) << "\" y1=\"" << f(H - bottom) << "\" x2=\"" << f(sx(p)) << "\" y2=\""
           << f(H - bottom + 5) << "\" stroke=\"black\"/>";
        os << "<text x=\"" << f(sx(p)) << "\" y=\"" << f(H - bottom + 20) << "\" text-anchor=\"middle\">" << p
           << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        os << "<line x1=\"" << f(left - 5) << "\" y1=\"" << f(sy(v)) << "\" x2=\"" << f(left) << "\" y2=\""
           << f(sy(v)) << "\" stroke=\"black\"/>";
        os << "<text x=\"" << f(left - 8) << "\" y=\"" << f(sy(v) + 4) << "\" text-anchor=\"end\">"
           << format_fixed(v, 3) << "</text>\n";
    }
    os << "<text x=\"" << f((left + W - right) / 2) << "\" y=\"" << f(H - 15)
       << "\" text-anchor=\"middle\">Top samples used (%)</text>\n";
    os << "<text x=\"18\" y=\"" << f((top + H - bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << f((top + H - bottom) / 2) << ")\">Test MAE</text>\n";

    if (report.baseline && std::isfinite(report.baseline->mean_mae)) {
        const double y = sy(report.baseline->mean_mae);
        os << "<line x1=\"" << f(left) << "\" y1=\"" << f(y) << "\" x2=\"" << f(W - right) << "\" y2=\"" << f(y)
           << "\" stroke=\"green\" stroke-dasharray=\"6 4\"/>\n";
        os << "<text x=\"" << f(W - right - 4) << "\" y=\"" << f(y - 6)
           << "\" text-anchor=\"end\" fill=\"green\">full model</text>\n";
    }

    std::string points;
    for (const auto& a : report.per_p) {
        if (a.stats.n == 0) continue;
        const double x = sx(a.p), m = a.stats.mean_mae, s = a.stats.std_mae;
        os << "<line x1=\"" << f(x) << "\" y1=\"" << f(sy(m - s)) << "\" x2=\"" << f(x) << "\" y2=\"" << f(sy(m + s))
           << "\" stroke=\"red\"/>";
        os << "<line x1=\"" << f(x - 4) << "\" y1=\"" << f(sy(m - s)) << "\" x2=\"" << f(x + 4) << "\" y2=\""
           << f(sy(m - s)) << "\" stroke=\"red\"/>";
        os << "<line x1=\"" << f(x - 4) << "\" y1=\"" << f(sy(m + s)) << "\" x2=\"" << f(x + 4) << "\" y2=\""
           << f(sy(m + s)) << "\" stroke=\"red\"/>";
        os << "<circle cx=\"" << f(x) << "\" cy=\"" << f(sy(m)) << "\" r=\"3\" fill=\"red\"/>\n";
        if (!points.empty()) points += ' ';
        points += f(x) + "," + f(sy(m));
    }
    if (!points.empty()) os << "<polyline points=\"" << points << "\" fill=\"none\" stroke=\"red\"/>\n";
    os << "</svg>\n";
    return os.str();
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw ConfigError("cannot create output directory " + out_dir.string());
    }
    try {
        write_file_atomic(out_dir / "results.csv", render_results_csv(report));
        write_file_atomic(out_dir / "summary.json", render_summary_json(report));
        write_file_atomic(out_dir / "table.md", render_table_md(report));
        if (!report.per_p.empty()) write_file_atomic(out_dir / "curves.svg", render_curves_svg(report));
    } catch (const std::runtime_error& e) {
        throw ConfigError(std::string("cannot write report: ") + e.what());
    }
}

std::vector<RunRow> parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"p", "run_seed", "mae", "rmse",
                                                                                  "wall_time_s", "sample_visits",
                                                                                  "param_updates"}) {
        throw DataError("results.csv: unexpected header");
    }
    std::vector<RunRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        const auto bad = [&] { return DataError("results.csv: malformed line " + std::to_string(line_no)); };
        if (f.size() != 7) throw bad();
        RunRow r;
        if (f[0] != "full") {
            auto p = parse_double(f[0]);
            if (!p) throw bad();
            r.p = *p;
        }
        auto seed = parse_uint64(f[1]);
        auto mae = parse_double(f[2]);
        auto rmse = parse_double(f[3]);
        auto wall = parse_double(f[4]);
        auto visits = parse_uint64(f[5]);
        auto updates = parse_uint64(f[6]);
        if (!seed || !mae || !rmse || !wall || !visits || !updates) throw bad();
        r.run_seed = *seed;
        r.mae = *mae;
        r.rmse = *rmse;
        r.wall_time_s = *wall;
        r.sample_visits = *visits;
        r.param_updates = *updates;
        rows.push_back(r);
    }
    return rows;
}

SummaryContext parse_summary_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("summary.json is not valid JSON: ") + e.what());
    }
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSummarySchemaVersion) {
        throw ConfigError("summary.json: unsupported schema version");
    }
    SummaryContext ctx;
    FlatConfig flat = default_flat_config();
    merge_config(flat, j.at("config"));
    ctx.config = sweep_from_flat(flat);
    const auto& d = j.at("dataset");
    ctx.dataset = {d.at("series_length").get<std::size_t>(), d.at("train_samples").get<std::size_t>(),
                   d.at("test_samples").get<std::size_t>()};
    for (const auto& f : j.at("failures")) {
        RunFailure rf;
        rf.run_seed = f.at("run_seed").get<std::uint64_t>();
        if (!f.at("p").is_null()) rf.p = f.at("p").get<double>();
        rf.numerical = f.at("numerical").get<bool>();
        rf.message = f.at("message").get<std::string>();
        ctx.failures.push_back(std::move(rf));
    }
    return ctx;
}

}  // namespace sampleimp
