#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "sampleimp/errors.hpp"
#include "sampleimp/training.hpp"

using namespace sampleimp;

namespace {

TrainConfig small_config(std::size_t epochs = 3, std::size_t batch = 8) {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.seed = 11;
    c.topology.hidden = 6;
    return c;
}

TimeSeriesDataset small_dataset(std::size_t points = 120) {
    const auto s = synth_series(4, points);
    return make_windows(apply_scaler(fit_scaler(s.values), s.values), 1);
}

double mean_loss(const ModelState& m, const TimeSeriesDataset& d) {
    double s = 0;
    for (std::size_t i = 0; i < d.size(); ++i) s += loss_mse(forward(m, d.X[i]), d.y[i]);
    return s / double(d.size());
}

}  // namespace

TEST_CASE("train_tracked fills an E x N log and counts every visit") {
    const auto d = small_dataset(4);  // 3 samples
    const auto run = train_tracked(small_config(1), d);
    CHECK(run.log.epochs_completed() == 1);
    CHECK(run.log.n_samples() == 3);
    CHECK(run.cost.sample_visits == 3);
    CHECK(run.cost.param_updates == 1);
    CHECK(run.cost.estimated_flops > 0);
    CHECK(run.cost.wall_time_s >= 0.0);
}

TEST_CASE("train_tracked is deterministic") {
    const auto d = small_dataset();
    const auto a = train_tracked(small_config(), d);
    const auto b = train_tracked(small_config(), d);
    CHECK(a.model == b.model);
    CHECK(a.log == b.log);
    CHECK(a.epoch_loss == b.epoch_loss);
}

TEST_CASE("every logged norm equals the replayed per-sample gradient norm") {
    const auto d = small_dataset(80);
    const auto cfg = small_config(3, 5);
    std::mt19937_64 pick(1);
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    while (chosen.size() < 10) chosen.insert({pick() % cfg.epochs, pick() % d.size()});

    struct Saved {
        std::size_t epoch, sample;
        ModelState model;
        double norm;
    };
    std::vector<Saved> trace;
    const auto run = train_tracked(cfg, d, [&](const TrainVisit& v) {
        if (chosen.count({v.epoch, v.sample})) trace.push_back({v.epoch, v.sample, v.model, v.norm});
    });
    REQUIRE(trace.size() == 10);
    for (const auto& t : trace) {
        const double replay = grad_norm(backward_per_sample(t.model, d.X[t.sample], d.y[t.sample]));
        CHECK(replay == t.norm);
        CHECK(run.log.at(t.epoch, t.sample) == t.norm);
    }
}

TEST_CASE("both batch sizes reduce the loss of a convex one-parameter probe") {
    TimeSeriesDataset d;
    d.window = 1;
    for (int i = 0; i < 40; ++i) {
        const double x = 0.05 + 0.02 * i;
        d.X.emplace_back(std::vector<std::size_t>{1, 1}, std::vector<double>{x});
        d.y.push_back(0.7 * x);
        d.origin_index.push_back(i);
    }
    TrainConfig c;
    c.topology.kind = ModelKind::linear_probe;
    c.epochs = 25;
    c.adam.learning_rate = 0.01;
    c.seed = 3;
    const double initial = mean_loss(init_model(c.topology, c.seed), d);
    for (std::size_t batch : {std::size_t{1}, d.size()}) {
        c.batch_size = batch;
        const auto run = train_tracked(c, d);
        CHECK(mean_loss(run.model, d) < initial);
        CHECK(run.epoch_loss.back() < run.epoch_loss.front());
    }
}

TEST_CASE("retrain_subset at p = 100 reproduces train_tracked bit-for-bit") {
    const auto d = small_dataset();
    const auto cfg = small_config(4, 7);
    const auto full = train_tracked(cfg, d);
    const auto sel = select_top_p(importance_scores(full.log), 100);
    const auto sub = retrain_subset(cfg, d, sel);
    CHECK(sub.model.params == full.model.params);
    CHECK(sub.cost.sample_visits == full.cost.sample_visits);
}

TEST_CASE("subset cost counters are exact") {
    const auto d = small_dataset(101);  // N = 100
    const auto cfg = small_config(3, 8);
    const auto full = train_tracked(cfg, d);
    const auto ranking = importance_scores(full.log);

    SelectionResult one;
    one.k = 1;
    one.indices = {ranking.order.front()};
    CHECK(retrain_subset(cfg, d, one).cost.sample_visits == cfg.epochs);

    for (double p : {10.0, 25.0, 33.0, 70.0, 100.0}) {
        const auto sel = select_top_p(ranking, p);
        const auto sub = retrain_subset(cfg, d, sel);
        CHECK(sub.cost.sample_visits == cfg.epochs * sel.k);
        CHECK(double(sub.cost.sample_visits) / double(full.cost.sample_visits) == double(sel.k) / double(d.size()));
        CHECK(sub.cost.param_updates == cfg.epochs * ((sel.k + cfg.batch_size - 1) / cfg.batch_size));
    }
}

TEST_CASE("retrain_subset and train_tracked reject bad inputs") {
    const auto d = small_dataset();
    CHECK_THROWS_AS(retrain_subset(small_config(), d, SelectionResult{}), std::invalid_argument);
    SelectionResult bad;
    bad.k = 1;
    bad.indices = {d.size()};
    CHECK_THROWS_AS(retrain_subset(small_config(), d, bad), std::invalid_argument);
    CHECK_THROWS_AS(train_tracked(small_config(), TimeSeriesDataset{}), std::invalid_argument);
    auto cfg = small_config();
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_tracked(cfg, d), ConfigError);
    cfg = small_config();
    cfg.topology.timesteps = 2;
    CHECK_THROWS_AS(train_tracked(cfg, d), ConfigError);
}

TEST_CASE("numerical failures name the epoch and sample") {
    auto d = small_dataset(20);
    d.y[5] = std::numeric_limits<double>::infinity();
    try {
        train_tracked(small_config(), d);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epoch 0") != std::string::npos);
        CHECK(msg.find("sample 5") != std::string::npos);
    }
}

TEST_CASE("error metrics") {
    const std::vector<double> y{1.0, -2.0, 3.5};
    const auto perfect = error_metrics(y, y);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.rmse == 0.0);

    const auto m = error_metrics(std::vector<double>{1, 2}, std::vector<double>{2, 4});
    CHECK(m.mae == 1.5);
    CHECK(m.rmse == doctest::Approx(std::sqrt(2.5)).epsilon(1e-15));

    const std::vector<double> shifted{1.25, -1.75, 3.75};
    const auto c = error_metrics(shifted, y);
    CHECK(c.mae == doctest::Approx(0.25));
    CHECK(c.rmse == doctest::Approx(0.25));

    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(1 + rng() % 30), b(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = nd(rng), b[i] = nd(rng);
        const auto e = error_metrics(a, b);
        CHECK(e.rmse >= e.mae * (1 - 1e-15));
        CHECK(e.mae >= 0.0);
    }
}

TEST_CASE("evaluate reports errors in original units") {
    const auto s = synth_series(2, 200);
    const auto data = prepare_dataset(s, 1, 0.8);
    const auto run = train_tracked(small_config(2, 16), data.train);
    const auto m = evaluate(run.model, data.test, data.scaler);
    CHECK(m.n_test == data.test.size());

    // Same predictions scored by hand in original units.
    double abs_sum = 0;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        const double pred = invert_scaler(data.scaler, forward(run.model, data.test.X[i]));
        abs_sum += std::abs(pred - s.values[data.test.origin_index[i] + 1]);
    }
    CHECK(m.mae == doctest::Approx(abs_sum / double(data.test.size())).epsilon(1e-12));
    CHECK_THROWS_AS(evaluate(run.model, TimeSeriesDataset{}, data.scaler), std::invalid_argument);
}
