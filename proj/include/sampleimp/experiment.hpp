#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sampleimp/bootstrap.hpp"
#include "sampleimp/data.hpp"
#include "sampleimp/training.hpp"

namespace sampleimp {

inline std::vector<double> default_p_values() {
    return {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
}

struct SweepConfig {
    std::vector<double> p_values = default_p_values();
    std::size_t n_runs = 5;
    TrainConfig train;  // train.seed is replaced by the per-run seed
    DatasetSpec dataset;
    std::size_t bootstrap_resamples = 1000;
    double ci_level = 0.95;
    std::uint64_t master_seed = 42;
    // Off writes 0 for every wall time so reports are byte-reproducible.
    bool record_wall_time = true;
};

// Throws ConfigError.
void validate(const SweepConfig& sweep);

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run);
std::uint64_t bootstrap_seed(std::uint64_t master_seed);

// One trained model. `p` is empty for the full-data baseline.
struct RunRow {
    std::optional<double> p;
    std::uint64_t run_seed = 0;
    double mae = 0.0;
    double rmse = 0.0;
    double wall_time_s = 0.0;
    std::uint64_t sample_visits = 0;
    std::uint64_t param_updates = 0;

    friend bool operator==(const RunRow&, const RunRow&) = default;
};

struct RunFailure {
    std::uint64_t run_seed = 0;
    std::optional<double> p;
    std::string message;
    bool numerical = false;
};

struct Aggregate {
    std::size_t n = 0;
    double mean_mae = 0.0;
    double std_mae = 0.0;  // sample (n-1) convention, 0 when n < 2
    double mean_rmse = 0.0;
    double std_rmse = 0.0;
    double mean_wall_time_s = 0.0;
    double mean_sample_visits = 0.0;
};

struct PAggregate {
    double p = 0.0;
    std::size_t k = 0;
    Aggregate stats;
    // Positive means the subset model is better / faster than the baseline.
    double mae_improvement_abs = 0.0;
    double mae_improvement_pct = 0.0;
    double time_improvement_s = 0.0;
    double time_improvement_pct = 0.0;
};

struct DatasetInfo {
    std::size_t series_length = 0;
    std::size_t train_samples = 0;
    std::size_t test_samples = 0;
};

struct ImprovementCi {
    double p = 0.0;
    std::vector<double> diffs;  // per run: baseline MAE - subset MAE
    double mean = 0.0;
    Interval interval;
};

struct ExperimentReport {
    SweepConfig config;
    DatasetInfo dataset;
    std::vector<RunRow> rows;  // run-major: baseline, then p ascending
    std::vector<RunFailure> failures;
    std::optional<Aggregate> baseline;
    std::vector<PAggregate> per_p;
    // Smallest p whose mean MAE does not exceed the baseline mean MAE.
    std::optional<double> best_p;
    std::optional<ImprovementCi> improvement_ci;

    bool partial() const noexcept { return !failures.empty(); }
};

Aggregate aggregate_rows(const std::vector<const RunRow*>& rows);

// Recomputes every aggregate, the flagged p and its bootstrap interval from
// rows alone; used both after a sweep and when re-rendering from results.csv.
ExperimentReport build_report(const SweepConfig& config, const DatasetInfo& dataset,
                              std::vector<RunRow> rows, std::vector<RunFailure> failures);

// Per run: full-data tracked training, ranking, then one subset retrain per p.
// Tasks run on up to `workers` threads; the report does not depend on it.
ExperimentReport run_sweep(const SweepConfig& sweep, const PreparedData& data, std::size_t workers = 1);

}  // namespace sampleimp
