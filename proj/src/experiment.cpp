#include "sampleimp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <thread>

#include "sampleimp/errors.hpp"
#include "sampleimp/rng.hpp"
#include "sampleimp/text.hpp"

namespace sampleimp {

void validate(const SweepConfig& s) {
    validate(s.train);
    if (s.n_runs == 0) throw ConfigError("sweep: runs must be >= 1");
    if (s.bootstrap_resamples == 0) throw ConfigError("sweep: bootstrap_resamples must be >= 1");
    if (!(s.ci_level > 0.0 && s.ci_level < 1.0)) throw ConfigError("sweep: ci_level must lie in (0, 1)");
    for (std::size_t i = 0; i < s.p_values.size(); ++i) {
        const double p = s.p_values[i];
        if (!(p > 0.0 && p <= 100.0)) throw ConfigError("sweep: p values must lie in (0, 100]");
        if (i > 0 && !(p > s.p_values[i - 1])) {
            throw ConfigError("sweep: p values must be sorted ascending and unique");
        }
    }
    if (s.dataset.window == 0) throw ConfigError("dataset: window must be >= 1");
    if (!(s.dataset.train_fraction > 0.0 && s.dataset.train_fraction < 1.0)) {
        throw ConfigError("dataset: train_fraction must lie in (0, 1)");
    }
    if (s.train.topology.timesteps != s.dataset.window) {
        throw ConfigError("topology timesteps must equal the dataset window");
    }
}

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run) {
    return derive_seed(master_seed, 1000 + run);
}

std::uint64_t bootstrap_seed(std::uint64_t master_seed) { return derive_seed(master_seed, 7); }

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace {

double mean_of(const std::vector<const RunRow*>& rows, double RunRow::*field) {
    double s = 0.0;
    for (const auto* r : rows) s += r->*field;
    return s / static_cast<double>(rows.size());
}

double sample_std(const std::vector<const RunRow*>& rows, double RunRow::*field, double mean) {
    if (rows.size() < 2) return 0.0;
    double s = 0.0;
    for (const auto* r : rows) s += (r->*field - mean) * (r->*field - mean);
    return std::sqrt(s / static_cast<double>(rows.size() - 1));
}

double pct_of(double delta, double base) {
    return base != 0.0 ? 100.0 * delta / base : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Aggregate aggregate_rows(const std::vector<const RunRow*>& rows) {
    Aggregate a;
    a.n = rows.size();
    if (rows.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        a.mean_mae = a.std_mae = a.mean_rmse = a.std_rmse = a.mean_wall_time_s = a.mean_sample_visits = nan;
        return a;
    }
    a.mean_mae = mean_of(rows, &RunRow::mae);
    a.std_mae = sample_std(rows, &RunRow::mae, a.mean_mae);
    a.mean_rmse = mean_of(rows, &RunRow::rmse);
    a.std_rmse = sample_std(rows, &RunRow::rmse, a.mean_rmse);
    a.mean_wall_time_s = mean_of(rows, &RunRow::wall_time_s);
    double visits = 0.0;
    for (const auto* r : rows) visits += static_cast<double>(r->sample_visits);
    a.mean_sample_visits = visits / static_cast<double>(rows.size());
    return a;
}

ExperimentReport build_report(const SweepConfig& config, const DatasetInfo& dataset,
                              std::vector<RunRow> rows, std::vector<RunFailure> failures) {
    ExperimentReport rep;
    rep.config = config;
    rep.dataset = dataset;
    rep.rows = std::move(rows);
    rep.failures = std::move(failures);

    std::vector<const RunRow*> base_rows;
    std::map<std::uint64_t, const RunRow*> base_by_seed;
    for (const auto& r : rep.rows) {
        if (!r.p) {
            base_rows.push_back(&r);
            base_by_seed[r.run_seed] = &r;
        }
    }
    if (!base_rows.empty()) rep.baseline = aggregate_rows(base_rows);

    for (double p : config.p_values) {
        std::vector<const RunRow*> sel;
        for (const auto& r : rep.rows) {
            if (r.p && *r.p == p) sel.push_back(&r);
        }
        PAggregate agg;
        agg.p = p;
        agg.k = dataset.train_samples ? selection_size(p, dataset.train_samples) : 0;
        agg.stats = aggregate_rows(sel);
        if (rep.baseline && agg.stats.n > 0) {
            const auto& b = *rep.baseline;
            agg.mae_improvement_abs = b.mean_mae - agg.stats.mean_mae;
            agg.mae_improvement_pct = pct_of(agg.mae_improvement_abs, b.mean_mae);
            agg.time_improvement_s = b.mean_wall_time_s - agg.stats.mean_wall_time_s;
            agg.time_improvement_pct = pct_of(agg.time_improvement_s, b.mean_wall_time_s);
        } else {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            agg.mae_improvement_abs = agg.mae_improvement_pct = nan;
            agg.time_improvement_s = agg.time_improvement_pct = nan;
        }
        rep.per_p.push_back(agg);
    }

    if (rep.baseline) {
        for (const auto& agg : rep.per_p) {
            if (agg.stats.n > 0 && agg.stats.mean_mae <= rep.baseline->mean_mae) {
                rep.best_p = agg.p;
                break;
            }
        }
    }
    if (rep.best_p) {
        ImprovementCi ci;
        ci.p = *rep.best_p;
        for (const auto& r : rep.rows) {
            if (!r.p || *r.p != ci.p) continue;
            auto it = base_by_seed.find(r.run_seed);
            if (it != base_by_seed.end()) ci.diffs.push_back(it->second->mae - r.mae);
        }
        if (!ci.diffs.empty()) {
            ci.mean = anchored_mean(ci.diffs);
            ci.interval = bootstrap_ci(ci.diffs, config.bootstrap_resamples, config.ci_level,
                                       bootstrap_seed(config.master_seed));
            rep.improvement_ci = std::move(ci);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) task(i);
        });
    }
}

struct TaskOutcome {
    std::optional<RunRow> row;
    std::optional<RunFailure> failure;
};

template <typename Fn>
TaskOutcome guarded(std::uint64_t seed, std::optional<double> p, Fn&& fn) {
    TaskOutcome out;
    try {
        out.row = fn();
    } catch (const NumericalError& e) {
        out.failure = RunFailure{seed, p, e.what(), true};
    } catch (const std::exception& e) {
        out.failure = RunFailure{seed, p, e.what(), false};
    }
    return out;
}

}  // namespace

ExperimentReport run_sweep(const SweepConfig& sweep, const PreparedData& data, std::size_t workers) {
    validate(sweep);
    if (data.train.empty() || data.test.empty()) throw DataError("sweep: train or test split is empty");

    const DatasetInfo info{data.series_length, data.train.size(), data.test.size()};
    // Nothing to compare against without at least one p.
    if (sweep.p_values.empty()) return build_report(sweep, info, {}, {});

    const std::size_t R = sweep.n_runs, NP = sweep.p_values.size();
    std::vector<TrainConfig> configs(R, sweep.train);
    for (std::size_t r = 0; r < R; ++r) configs[r].seed = run_seed(sweep.master_seed, r);
    auto finish = [&](RunRow row, const CostLedger& cost) {
        row.wall_time_s = sweep.record_wall_time ? cost.wall_time_s : 0.0;
        row.sample_visits = cost.sample_visits;
        row.param_updates = cost.param_updates;
        return row;
    };

    // Phase 1: full-data baselines, whose gradient logs feed the rankings.
    std::vector<TaskOutcome> base(R);
    std::vector<std::optional<ImportanceRanking>> rankings(R);
    parallel_for(R, workers, [&](std::size_t r) {
        base[r] = guarded(configs[r].seed, std::nullopt, [&] {
            auto tracked = train_tracked(configs[r], data.train);
            const auto m = evaluate(tracked.model, data.test, data.scaler);
            rankings[r] = importance_scores(tracked.log);
            RunRow row;
            row.run_seed = configs[r].seed;
            row.mae = m.mae;
            row.rmse = m.rmse;
            return finish(row, tracked.cost);
        });
    });

    // Phase 2: subset retrains, one task per (run, p).
    std::vector<TaskOutcome> subset(R * NP);
    parallel_for(R * NP, workers, [&](std::size_t task) {
        const std::size_t r = task / NP;
        const double p = sweep.p_values[task % NP];
        if (!rankings[r]) return;  // baseline failed; reported once below
        subset[task] = guarded(configs[r].seed, p, [&] {
            const auto sel = select_top_p(*rankings[r], p);
            auto run = retrain_subset(configs[r], data.train, sel);
            const auto m = evaluate(run.model, data.test, data.scaler);
            RunRow row;
            row.p = p;
            row.run_seed = configs[r].seed;
            row.mae = m.mae;
            row.rmse = m.rmse;
            return finish(row, run.cost);
        });
    });

    std::vector<RunRow> rows;
    std::vector<RunFailure> failures;
    for (std::size_t r = 0; r < R; ++r) {
        if (base[r].row) rows.push_back(*base[r].row);
        if (base[r].failure) failures.push_back(*base[r].failure);
        for (std::size_t i = 0; i < NP; ++i) {
            const auto& t = subset[r * NP + i];
            if (t.row) rows.push_back(*t.row);
            if (t.failure) failures.push_back(*t.failure);
        }
    }
    return build_report(sweep, info, std::move(rows), std::move(failures));
}

}  // namespace sampleimp
