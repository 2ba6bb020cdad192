#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sampleimp/adam.hpp"
#include "sampleimp/checkpoint.hpp"
#include "sampleimp/errors.hpp"
#include "sampleimp/model.hpp"
#include "sampleimp/rng.hpp"

using namespace sampleimp;

namespace {

Topology lstm(std::size_t h, std::size_t in = 1, std::size_t steps = 1) {
    Topology t;
    t.kind = ModelKind::lstm;
    t.hidden = h;
    t.input_width = in;
    t.timesteps = steps;
    return t;
}

Tensor random_input(const Topology& t, Rng& rng) {
    std::vector<double> v(t.timesteps * t.input_width);
    for (auto& x : v) x = uniform(rng, 0.0, 1.0);
    return Tensor({t.timesteps, t.input_width}, v);
}

// Central differences on the loss, one coordinate at a time.
std::vector<double> finite_difference_gradient(ModelState m, const Tensor& x, double y, double eps) {
    std::vector<double> g(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double keep = m.params[j];
        m.params[j] = keep + eps;
        const double up = loss_mse(forward(m, x), y);
        m.params[j] = keep - eps;
        const double down = loss_mse(forward(m, x), y);
        m.params[j] = keep;
        g[j] = (up - down) / (2 * eps);
    }
    return g;
}

bool gradient_matches(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    for (std::size_t j = 0; j < analytic.size(); ++j) {
        const double a = analytic[j], n = numeric[j];
        const double tol = std::max(1e-7, 1e-4 * std::max(std::abs(a), std::abs(n)));
        if (std::abs(a - n) > tol) return false;
    }
    return true;
}

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("init_model is deterministic in the seed") {
    const auto a = init_model(lstm(4), 7);
    const auto b = init_model(lstm(4), 7);
    CHECK(a.params == b.params);
    CHECK(a.init_seed == 7);
    CHECK(init_model(lstm(4), 8).params != a.params);
}

TEST_CASE("init_model rejects a zero dimension") {
    CHECK_THROWS_AS(init_model(lstm(0), 1), ConfigError);
    CHECK_THROWS_AS(init_model(lstm(4, 0), 1), ConfigError);
    Topology t = lstm(4);
    t.output = 0;
    CHECK_THROWS_AS(init_model(t, 1), ConfigError);
}

TEST_CASE("parameter count for h=4, in=1, out=1 is 101") {
    // 4*(4*5 + 4) + 4*1 + 1
    CHECK(parameter_count(lstm(4)) == 101);
    CHECK(init_model(lstm(4), 3).size() == 101);
}

TEST_CASE("init_model uses Xavier limits and zero biases") {
    const auto t = lstm(8, 2);
    const auto m = init_model(t, 11);
    for (const auto& b : parameter_blocks(t)) {
        const double limit = std::sqrt(6.0 / double(b.rows + b.cols));
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double v = m.params[b.offset + j];
            if (b.is_bias) {
                CHECK(v == 0.0);
            } else {
                CHECK(std::abs(v) <= limit);
            }
        }
    }
}

TEST_CASE("parameter count formula matches the allocated blocks on random topologies") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        Topology t = lstm(1 + rng() % 40, 1 + rng() % 6, 1 + rng() % 5);
        t.output = 1 + rng() % 4;
        const auto blocks = parameter_blocks(t);
        std::size_t expected_offset = 0, enumerated = 0;
        for (const auto& b : blocks) {
            CHECK(b.offset == expected_offset);  // contiguous, no overlap
            expected_offset += b.size();
            enumerated += b.size();
        }
        const std::size_t h = t.hidden, i = t.input_width, o = t.output;
        CHECK(enumerated == 4 * (h * (h + i) + h) + h * o + o);
        CHECK(parameter_count(t) == enumerated);
        CHECK(init_model(t, trial).size() == enumerated);
    }
}

TEST_CASE("forward of an all-zero model is 0") {
    auto m = init_model(lstm(5, 1, 3), 1);
    std::fill(m.params.begin(), m.params.end(), 0.0);
    CHECK(forward(m, Tensor({3, 1}, {0.3, -2.0, 7.0})) == 0.0);
}

TEST_CASE("forward is pure") {
    Rng rng(5);
    const auto t = lstm(6, 1, 2);
    const auto m = init_model(t, 21);
    const auto copy = m;
    const auto x = random_input(t, rng);
    const double a = forward(m, x);
    const double b = forward(m, x);
    CHECK(a == b);
    CHECK(m == copy);
}

TEST_CASE("forward rejects a mismatched input shape") {
    const auto m = init_model(lstm(4, 1, 2), 1);
    CHECK_THROWS_AS(forward(m, Tensor({1, 1}, {0.5})), std::invalid_argument);
    CHECK_THROWS_AS(forward(m, Tensor({2, 2}, {0.5, 0.5, 0.5, 0.5})), std::invalid_argument);
}

TEST_CASE("forward matches a hand-rolled h=2 LSTM cell") {
    // Layout: W rows [i0 i1 f0 f1 g0 g1 o0 o1], columns [x, h0, h1]; b; Wd; bd.
    const auto t = lstm(2);
    ModelState m = init_model(t, 0);
    const double W[8][3] = {{0.5, 0.1, -0.2}, {-0.3, 0.4, 0.2},  {0.8, -0.5, 0.3}, {0.1, 0.2, -0.1},
                            {-0.7, 0.3, 0.6}, {0.9, -0.4, 0.05}, {0.2, 0.7, -0.3}, {-0.6, 0.1, 0.4}};
    const double b[8] = {0.05, -0.1, 0.2, 0.0, -0.05, 0.1, 0.3, -0.2};
    const double Wd[2] = {1.5, -0.8};
    const double bd = 0.25;
    std::size_t k = 0;
    for (auto& row : W)
        for (double v : row) m.params[k++] = v;
    for (double v : b) m.params[k++] = v;
    for (double v : Wd) m.params[k++] = v;
    m.params[k++] = bd;
    REQUIRE(k == m.size());

    // Single step from zero state: only the x column contributes.
    const double x = 1.0;
    double h[2];
    for (int u = 0; u < 2; ++u) {
        const double ig = sig(W[u][0] * x + b[u]);
        const double fg = sig(W[2 + u][0] * x + b[2 + u]);
        const double gg = std::tanh(W[4 + u][0] * x + b[4 + u]);
        const double og = sig(W[6 + u][0] * x + b[6 + u]);
        const double c = fg * 0.0 + ig * gg;
        h[u] = og * std::tanh(c);
    }
    const double expected = Wd[0] * h[0] + Wd[1] * h[1] + bd;
    CHECK(forward(m, Tensor({1, 1}, {x})) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("loss_mse") {
    CHECK(loss_mse(2, 2) == 0.0);
    CHECK(loss_mse(3, 1) == 4.0);
    CHECK(loss_mse(-1, 1) == 4.0);
}

TEST_CASE("backward of a zero-loss sample is the zero vector") {
    Rng rng(8);
    const auto t = lstm(4, 1, 2);
    const auto m = init_model(t, 3);
    const auto x = random_input(t, rng);
    const auto g = backward_per_sample(m, x, forward(m, x));
    CHECK(grad_norm(g) == 0.0);
}

TEST_CASE("linear probe gradient is 2(wx - y)x") {
    Topology t;
    t.kind = ModelKind::linear_probe;
    ModelState m = init_model(t, 0);
    REQUIRE(m.size() == 1);
    m.params[0] = 1.0;
    const auto g = backward_per_sample(m, Tensor({1, 1}, {1.0}), 2.0);
    REQUIRE(g.size() == 1);
    CHECK(g.values[0] == -2.0);
}

TEST_CASE("backward matches central differences on the 101-parameter LSTM") {
    Rng rng(17);
    const auto t = lstm(4);
    const auto m = init_model(t, 17);
    const auto x = random_input(t, rng);
    const double y = 0.9;
    const auto before = m;
    const auto g = backward_per_sample(m, x, y);
    CHECK(m == before);
    CHECK(gradient_matches(g.values, finite_difference_gradient(m, x, y, 1e-5)));
}

TEST_CASE("gradient fidelity holds through several timesteps and wider inputs") {
    std::mt19937_64 pick(4);
    for (int trial = 0; trial < 6; ++trial) {
        const auto t = lstm(2 + pick() % 6, 1 + pick() % 3, 1 + pick() % 4);
        REQUIRE(parameter_count(t) <= 500);
        Rng rng(100 + trial);
        const auto m = init_model(t, 200 + trial);
        const auto x = random_input(t, rng);
        const double y = uniform(rng, -1.0, 2.0);
        const auto g = backward_per_sample(m, x, y);
        CHECK(gradient_matches(g.values, finite_difference_gradient(m, x, y, 1e-5)));
    }
}

TEST_CASE("doubling the residual doubles the dense-layer gradient") {
    Rng rng(23);
    const auto t = lstm(5, 1, 2);
    const auto m = init_model(t, 23);
    const auto x = random_input(t, rng);
    const double pred = forward(m, x);
    const double y1 = pred - 0.3;
    const double y2 = pred - 0.6;
    const auto g1 = backward_per_sample(m, x, y1);
    const auto g2 = backward_per_sample(m, x, y2);
    for (const auto& b : parameter_blocks(t)) {
        if (b.name.rfind("dense", 0) != 0) continue;
        for (std::size_t j = b.offset; j < b.offset + b.size(); ++j) {
            CHECK(g2.values[j] == doctest::Approx(2.0 * g1.values[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("non-finite inputs surface as NumericalError with the sample index") {
    const auto m = init_model(lstm(3), 1);
    try {
        backward_per_sample(m, Tensor({1, 1}, {0.5}), std::nan(""), 42);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("sample 42") != std::string::npos);
    }
}

TEST_CASE("saturated gate arguments are clamped, not propagated as inf/nan") {
    auto m = init_model(lstm(3), 1);
    for (auto& p : m.params) p *= 1e6;
    const double out = forward(m, Tensor({1, 1}, {1.0}));
    CHECK(std::isfinite(out));
    const auto g = backward_per_sample(m, Tensor({1, 1}, {1.0}), 0.0);
    CHECK(std::isfinite(grad_norm(g)));
}

TEST_CASE("grad_norm") {
    CHECK(grad_norm(GradientVector{{0, 0, 0}}) == 0.0);
    CHECK(grad_norm(GradientVector{{42, 56}}) == 70.0);
    CHECK(grad_norm(GradientVector{{-3}}) == 3.0);
}

TEST_CASE("adam_step with a zero gradient leaves parameters and moments unchanged") {
    auto m = init_model(lstm(3), 4);
    const auto before = m.params;
    AdamState st(m.size());
    adam_step(m, GradientVector{std::vector<double>(m.size(), 0.0)}, st, AdamHyper{});
    CHECK(m.params == before);
    CHECK(st.step == 1);
    for (std::size_t j = 0; j < m.size(); ++j) {
        CHECK(st.m[j] == 0.0);
        CHECK(st.v[j] == 0.0);
    }
}

TEST_CASE("first bias-corrected Adam step moves every parameter by lr * sign(g)") {
    auto m = init_model(lstm(3), 4);
    const auto before = m.params;
    AdamState st(m.size());
    AdamHyper hyper;
    Rng rng(2);
    std::vector<double> g(m.size());
    for (auto& v : g) v = uniform(rng, 0.01, 3.0) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
    adam_step(m, g, st, hyper);
    for (std::size_t j = 0; j < m.size(); ++j) {
        // Exact step is lr*|g|/(|g|+eps); its gap to lr is below lr*eps/|g|.
        const double moved = before[j] - m.params[j];
        const double expected = hyper.learning_rate * (g[j] > 0 ? 1.0 : -1.0);
        CHECK(std::abs(moved - expected) <= hyper.learning_rate * hyper.epsilon / std::abs(g[j]) + 1e-15);
    }
}

TEST_CASE("adam_step is deterministic and rejects non-finite updates") {
    auto a = init_model(lstm(3), 9);
    auto b = a;
    AdamState sa(a.size()), sb(b.size());
    std::vector<double> g(a.size(), 0.25);
    adam_step(a, g, sa, AdamHyper{});
    adam_step(b, g, sb, AdamHyper{});
    CHECK(a.params == b.params);
    CHECK(sa.m == sb.m);
    CHECK(sa.v == sb.v);

    const auto keep = a.params;
    const auto keep_step = sa.step;
    g[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(adam_step(a, g, sa, AdamHyper{}), NumericalError);
    CHECK(a.params == keep);
    CHECK(sa.step == keep_step);
    CHECK_THROWS_AS(adam_step(a, std::vector<double>(3, 0.0), sa, AdamHyper{}), std::invalid_argument);
}

TEST_CASE("checkpoint round-trips parameters bit-for-bit") {
    const auto m = init_model(lstm(7, 1, 2), 31);
    const auto path = std::filesystem::temp_directory_path() / "sampleimp_test.ckpt";
    const auto hash = config_hash("{\"train.epochs\":30}");
    CHECK(hash.size() == 16);
    save_checkpoint(path, m, hash);
    const auto ck = load_checkpoint(path);
    CHECK(ck.model == m);
    CHECK(ck.config_hash == hash);
    std::filesystem::remove(path);
}
