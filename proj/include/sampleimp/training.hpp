#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sampleimp/adam.hpp"
#include "sampleimp/data.hpp"
#include "sampleimp/importance.hpp"
#include "sampleimp/model.hpp"

namespace sampleimp {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    AdamHyper adam;
    std::uint64_t seed = 0;
    Topology topology;
};

// Throws ConfigError.
void validate(const TrainConfig& config);

// Deterministic compute counters plus measured wall time.
struct CostLedger {
    double wall_time_s = 0.0;
    std::uint64_t sample_visits = 0;   // forward+backward passes
    std::uint64_t param_updates = 0;   // optimizer steps
    std::uint64_t estimated_flops = 0;
};

// Handed to an observer on every sample visit, before the batch update, so
// `model` holds the parameters the norm was measured at.
struct TrainVisit {
    std::size_t epoch;
    std::size_t position;  // index into the trained subset
    std::size_t sample;    // index into the dataset
    const ModelState& model;
    double loss;
    double norm;
};

using VisitObserver = std::function<void(const TrainVisit&)>;

struct TrackedRun {
    ModelState model;
    GradientLog log;
    CostLedger cost;
    std::vector<double> epoch_loss;  // mean per-sample loss seen during each epoch
};

struct SubsetRun {
    ModelState model;
    CostLedger cost;
    std::vector<double> epoch_loss;
};

// Trains a fresh model (init seed = config.seed) on every sample in temporal
// order. Each mini-batch applies the mean of its per-sample gradients; the
// norm of every per-sample gradient lands in the returned log.
// NumericalError carries the epoch and sample of the failure.
TrackedRun train_tracked(const TrainConfig& config, const TimeSeriesDataset& dataset,
                         const VisitObserver& observer = {});

// Same loop on the selected samples only, from a fresh init with the same seed.
SubsetRun retrain_subset(const TrainConfig& config, const TimeSeriesDataset& dataset,
                         const SelectionResult& selection, const VisitObserver& observer = {});

struct EvalMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n_test = 0;
};

EvalMetrics error_metrics(std::span<const double> predictions, std::span<const double> truth);

// Predictions and targets are mapped back to original units before scoring.
EvalMetrics evaluate(const ModelState& model, const TimeSeriesDataset& test, const ScalerParams& scaler);

}  // namespace sampleimp
