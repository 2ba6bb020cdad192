#include "sampleimp/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "sampleimp/errors.hpp"

namespace sampleimp {

void validate(const TrainConfig& c) {
    if (c.epochs == 0) throw ConfigError("train: epochs must be >= 1");
    if (c.batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    if (!(c.adam.learning_rate > 0.0) || !std::isfinite(c.adam.learning_rate)) {
        throw ConfigError("train: learning_rate must be positive");
    }
    if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0) || !(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) {
        throw ConfigError("train: Adam betas must lie in [0, 1)");
    }
    if (!(c.adam.epsilon > 0.0)) throw ConfigError("train: Adam epsilon must be positive");
    validate(c.topology);
}

namespace {

struct LoopResult {
    ModelState model;
    CostLedger cost;
    std::vector<double> epoch_loss;
};

LoopResult run_training(const TrainConfig& config, const TimeSeriesDataset& dataset,
                        std::span<const std::size_t> indices, GradientLog* log,
                        const VisitObserver& observer) {
    validate(config);
    const auto start = std::chrono::steady_clock::now();
    const auto& topo = config.topology;
    for (std::size_t s : indices) {
        if (s >= dataset.size()) {
            throw std::invalid_argument("sample index " + std::to_string(s) + " out of range");
        }
    }
    if (!dataset.empty()) {
        const auto& shape = dataset.X.front().shape();
        if (shape.size() != 2 || shape[0] != topo.timesteps || shape[1] != topo.input_width) {
            throw ConfigError("dataset windows do not match the topology's (timesteps, features)");
        }
    }

    LoopResult r;
    r.model = init_model(topo, config.seed);
    const std::size_t P = r.model.size();
    const std::size_t n = indices.size();
    AdamState opt(P);
    GradientWorkspace ws;
    std::vector<double> grad(P), batch(P);
    std::vector<double> norms(log ? n : 0);
    const std::uint64_t per_sample = flops_per_sample(topo);
    const std::uint64_t per_update = 10ULL * P;

    for (std::size_t e = 0; e < config.epochs; ++e) {
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            std::fill(batch.begin(), batch.end(), 0.0);
            for (std::size_t pos = begin; pos < end; ++pos) {
                const std::size_t s = indices[pos];
                double loss = 0.0;
                try {
                    loss = loss_and_gradient(r.model, dataset.X[s].values(), dataset.y[s], grad, ws, s);
                } catch (const NumericalError& err) {
                    throw NumericalError("epoch " + std::to_string(e) + ": " + err.what());
                }
                const double norm = grad_norm(grad);
                if (log) norms[pos] = norm;
                if (observer) observer(TrainVisit{e, pos, s, r.model, loss, norm});
                for (std::size_t j = 0; j < P; ++j) batch[j] += grad[j];
                loss_sum += loss;
                ++r.cost.sample_visits;
                r.cost.estimated_flops += per_sample;
            }
            const double count = static_cast<double>(end - begin);
            for (auto& g : batch) g /= count;
            try {
                adam_step(r.model, batch, opt, config.adam);
            } catch (const NumericalError& err) {
                throw NumericalError("epoch " + std::to_string(e) + ", batch starting at position " +
                                     std::to_string(begin) + ": " + err.what());
            }
            ++r.cost.param_updates;
            r.cost.estimated_flops += per_update;
        }
        if (log) log->record_epoch(e, norms);
        r.epoch_loss.push_back(n ? loss_sum / static_cast<double>(n) : 0.0);
    }
    r.cost.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace

TrackedRun train_tracked(const TrainConfig& config, const TimeSeriesDataset& dataset,
                         const VisitObserver& observer) {
    if (dataset.empty()) throw std::invalid_argument("train_tracked: dataset is empty");
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    GradientLog log(dataset.size());
    auto r = run_training(config, dataset, all, &log, observer);
    return {std::move(r.model), std::move(log), r.cost, std::move(r.epoch_loss)};
}

SubsetRun retrain_subset(const TrainConfig& config, const TimeSeriesDataset& dataset,
                         const SelectionResult& selection, const VisitObserver& observer) {
    if (selection.indices.empty()) throw std::invalid_argument("retrain_subset: empty selection");
    auto r = run_training(config, dataset, selection.indices, nullptr, observer);
    return {std::move(r.model), r.cost, std::move(r.epoch_loss)};
}

EvalMetrics error_metrics(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size()) {
        throw std::invalid_argument("error_metrics: prediction/target length mismatch");
    }
    EvalMetrics m;
    m.n_test = truth.size();
    if (m.n_test == 0) return m;
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = predictions[i] - truth[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(m.n_test);
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    return m;
}

EvalMetrics evaluate(const ModelState& model, const TimeSeriesDataset& test, const ScalerParams& scaler) {
    if (test.empty()) throw std::invalid_argument("evaluate: test dataset is empty");
    GradientWorkspace ws;
    std::vector<double> pred(test.size()), truth(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double p = predict(model, test.X[i].values(), ws);
        if (!std::isfinite(p)) throw NumericalError("non-finite prediction on test sample " + std::to_string(i));
        pred[i] = invert_scaler(scaler, p);
        truth[i] = invert_scaler(scaler, test.y[i]);
    }
    return error_metrics(pred, truth);
}

}  // namespace sampleimp
