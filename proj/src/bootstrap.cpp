#include "sampleimp/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sampleimp/rng.hpp"

namespace sampleimp {

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty sample");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double anchored_mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("anchored_mean: empty sample");
    const double anchor = values.front();
    double acc = 0.0;
    for (double v : values) acc += v - anchor;
    return anchor + acc / static_cast<double>(values.size());
}

Interval bootstrap_ci(std::span<const double> diffs, std::size_t resamples, double level,
                      std::uint64_t seed) {
    if (diffs.empty()) throw std::invalid_argument("bootstrap_ci: need at least one value");
    if (resamples == 0) throw std::invalid_argument("bootstrap_ci: resamples must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level must lie in (0, 1)");

    const std::size_t n = diffs.size();
    Rng rng(seed);
    std::vector<double> draw(n);
    std::vector<double> means(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            // Multiply-shift maps a 64-bit draw onto [0, n).
            const auto idx = static_cast<std::size_t>(
                (static_cast<unsigned __int128>(rng()) * n) >> 64);
            draw[i] = diffs[idx];
        }
        means[b] = anchored_mean(draw);
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

}  // namespace sampleimp
