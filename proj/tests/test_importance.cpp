#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "sampleimp/importance.hpp"
#include "sampleimp/text.hpp"

using namespace sampleimp;

namespace {

GradientLog random_log(std::mt19937_64& rng, std::size_t E, std::size_t N) {
    std::uniform_real_distribution<double> d(0.0, 5.0);
    GradientLog log(N);
    std::vector<double> row(N);
    for (std::size_t e = 0; e < E; ++e) {
        for (auto& v : row) v = d(rng);
        log.record_epoch(e, row);
    }
    return log;
}

double sum_at(const std::vector<double>& scores, const std::vector<std::size_t>& idx) {
    double s = 0;
    for (auto i : idx) s += scores[i];
    return s;
}

// Best summed score over every subset of size <= k.
double exhaustive_best(const std::vector<double>& scores, std::size_t k) {
    const std::size_t n = scores.size();
    double best = 0.0;  // the empty set
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) > k) continue;
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) s += scores[i];
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

TEST_CASE("record_epoch appends rows in order") {
    GradientLog log(3);
    log.record_epoch(0, std::vector<double>{1, 2, 3});
    CHECK(log.epochs_completed() == 1);
    CHECK(log.at(0, 2) == 3.0);
    CHECK_THROWS_AS(log.record_epoch(0, std::vector<double>{1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(log.record_epoch(2, std::vector<double>{1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(log.record_epoch(1, std::vector<double>{1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(log.record_epoch(1, std::vector<double>{1, -0.5, 2}), std::invalid_argument);
    CHECK_THROWS_AS(log.record_epoch(1, std::vector<double>{1, NAN, 2}), std::invalid_argument);
    CHECK(log.epochs_completed() == 1);
}

TEST_CASE("importance_scores are column means with index tie-break") {
    GradientLog log(2);
    log.record_epoch(0, std::vector<double>{1, 3});
    log.record_epoch(1, std::vector<double>{3, 5});
    const auto r = importance_scores(log);
    CHECK(r.scores == std::vector<double>{2, 4});
    CHECK(r.order == std::vector<std::size_t>{1, 0});

    GradientLog single(3);
    single.record_epoch(0, std::vector<double>{0.5, 0.25, 0.5});
    const auto s = importance_scores(single);
    CHECK(s.scores == std::vector<double>{0.5, 0.25, 0.5});
    CHECK(s.order == std::vector<std::size_t>{0, 2, 1});

    CHECK_THROWS_AS(importance_scores(GradientLog(4)), std::invalid_argument);
}

TEST_CASE("importance_scores agree with a double-loop oracle") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t E = 1 + rng() % 5, N = 1 + rng() % 20;
        const auto log = random_log(rng, E, N);
        const auto r = importance_scores(log);
        for (std::size_t s = 0; s < N; ++s) {
            double acc = 0;
            for (std::size_t e = 0; e < E; ++e) acc += log.at(e, s);
            CHECK(std::abs(r.scores[s] - acc / double(E)) <= 1e-12);
        }
        // order is a permutation with non-increasing scores
        auto sorted = r.order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < N; ++i) CHECK(sorted[i] == i);
        for (std::size_t i = 1; i < N; ++i) CHECK(r.scores[r.order[i - 1]] >= r.scores[r.order[i]]);
    }
}

TEST_CASE("select_top_p examples") {
    const auto r = rank_by_score({0.1, 0.9, 0.3, 0.8, 0.2, 0.5, 0.05, 0.7, 0.4, 0.6});
    const auto sel = select_top_p(r, 30);
    CHECK(sel.k == 3);
    CHECK(sel.indices == std::vector<std::size_t>{1, 3, 7});

    CHECK(selection_size(50, 7) == 4);
    CHECK(selection_size(70, 10) == 7);
    CHECK(selection_size(100, 3999) == 3999);
    CHECK(selection_size(10, 3999) == 400);

    const auto tie = select_top_p(rank_by_score({5, 5, 3}), 34);
    CHECK(tie.k == 2);
    CHECK(tie.indices == std::vector<std::size_t>{0, 1});

    CHECK_THROWS_AS(select_top_p(r, 0), std::invalid_argument);
    CHECK_THROWS_AS(select_top_p(r, 100.5), std::invalid_argument);
    CHECK_THROWS_AS(select_top_p(r, -10), std::invalid_argument);
}

TEST_CASE("p = 100 keeps every sample in temporal order") {
    const auto r = rank_by_score({3, 1, 2, 5});
    const auto sel = select_top_p(r, 100);
    CHECK(sel.indices == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("selection attains the exhaustive optimum for N <= 12") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coarse(0, 6);  // forces ties
    for (std::size_t n = 1; n <= 12; ++n) {
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<double> scores(n);
            for (auto& s : scores) s = trial == 0 ? coarse(rng) * 0.5 : std::ldexp(double(rng() >> 11), -53);
            const auto r = rank_by_score(scores);
            for (std::size_t k = 1; k <= n; ++k) {
                const double p = 100.0 * double(k) / double(n);
                const auto sel = select_top_p(r, p);
                REQUIRE(sel.k == k);
                CHECK(sum_at(scores, sel.indices) == doctest::Approx(exhaustive_best(scores, k)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("selection beats sampled subsets for larger N") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> d(0, 1);
    for (const std::size_t n : {20u, 57u, 200u}) {
        std::vector<double> scores(n);
        for (auto& s : scores) s = d(rng);
        const auto r = rank_by_score(scores);
        for (double p = 5; p <= 100; p += 5) {
            const auto sel = select_top_p(r, p);
            const double chosen = sum_at(scores, sel.indices);
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            for (int t = 0; t < 1000; ++t) {
                std::shuffle(perm.begin(), perm.end(), rng);
                const std::vector<std::size_t> pick(perm.begin(), perm.begin() + std::ptrdiff_t(sel.k));
                CHECK(chosen >= sum_at(scores, pick) - 1e-12);
            }
        }
    }
}

TEST_CASE("selections nest as p grows and are invariant to positive scaling of G") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t E = 1 + rng() % 4, N = 5 + rng() % 60;
        const auto log = random_log(rng, E, N);
        const auto r = importance_scores(log);

        GradientLog scaled(N);
        for (std::size_t e = 0; e < E; ++e) {
            std::vector<double> row(log.row(e).begin(), log.row(e).end());
            for (auto& v : row) v *= 3.5;
            scaled.record_epoch(e, row);
        }
        CHECK(importance_scores(scaled).order == r.order);

        std::set<std::size_t> prev;
        for (int p = 10; p <= 100; p += 10) {
            const auto sel = select_top_p(r, p);
            CHECK(std::is_sorted(sel.indices.begin(), sel.indices.end()));
            const std::set<std::size_t> cur(sel.indices.begin(), sel.indices.end());
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            prev = cur;
        }
        CHECK(prev.size() == N);
    }
}

TEST_CASE("gradient log and ranking dumps") {
    std::mt19937_64 rng(3);
    const auto log = random_log(rng, 3, 7);
    const auto dir = std::filesystem::temp_directory_path();

    write_gradient_log_binary(dir / "sampleimp_g.bin", log);
    CHECK(read_gradient_log_binary(dir / "sampleimp_g.bin") == log);

    write_gradient_log_csv(dir / "sampleimp_g.csv", log);
    const auto csv = read_file(dir / "sampleimp_g.csv");
    CHECK(csv.rfind("epoch,0,1,2,3,4,5,6\n0,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    const auto r = importance_scores(log);
    write_ranking_csv(dir / "sampleimp_rank.csv", r);
    const auto text = read_file(dir / "sampleimp_rank.csv");
    CHECK(text.rfind("sample_index,score,rank\n", 0) == 0);
    CHECK(text.find("," + std::to_string(1) + "\n") != std::string::npos);
}
