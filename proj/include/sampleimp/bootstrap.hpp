#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sampleimp {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Linear-interpolation quantile (Hyndman-Fan type 7) of an ascending sample.
double quantile_sorted(std::span<const double> sorted, double q);

// Mean of `values`, computed as values[0] + mean(values - values[0]) so a
// constant sample returns its value exactly.
double anchored_mean(std::span<const double> values);

// Percentile bootstrap of the mean: `resamples` means of n draws with
// replacement, then the (1-level)/2 and 1-(1-level)/2 quantiles.
// Requires n >= 1, resamples >= 1, 0 < level < 1 (std::invalid_argument).
Interval bootstrap_ci(std::span<const double> diffs, std::size_t resamples, double level,
                      std::uint64_t seed);

}  // namespace sampleimp
