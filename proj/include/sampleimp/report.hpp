#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sampleimp/experiment.hpp"

namespace sampleimp {

inline constexpr int kSummarySchemaVersion = 1;

// results.csv: p,run_seed,mae,rmse,wall_time_s,sample_visits,param_updates.
// Baseline rows carry p = "full".
std::string render_results_csv(const ExperimentReport& report);
std::string render_summary_json(const ExperimentReport& report);
// MAE against p with +-1 sigma bars and the baseline as a dashed line.
std::string render_curves_svg(const ExperimentReport& report);
std::string render_table_md(const ExperimentReport& report);

// Writes results.csv, summary.json, table.md and, when there is at least one
// p value, curves.svg. Throws ConfigError if the directory cannot be written.
void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

std::vector<RunRow> parse_results_csv(const std::string& text);

// What a re-render needs besides the rows.
struct SummaryContext {
    SweepConfig config;
    DatasetInfo dataset;
    std::vector<RunFailure> failures;
};

SummaryContext parse_summary_json(const std::string& text);

}  // namespace sampleimp
