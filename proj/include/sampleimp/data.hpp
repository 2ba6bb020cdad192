#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sampleimp/tensor.hpp"

namespace sampleimp {

// Univariate series with strictly increasing millisecond timestamps.
struct RawSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const RawSeries&, const RawSeries&) = default;
};

struct IngestResult {
    RawSeries series;
    std::size_t dropped_rows = 0;  // rows whose timestamp or value did not parse
};

// Reads a headered, comma-delimited file. Rows come back sorted by timestamp.
// Throws DataError for an unreadable file, a missing column, duplicate
// timestamps, or when no usable row remains.
IngestResult ingest_csv(const std::filesystem::path& path, const std::string& value_column,
                        const std::string& timestamp_column);

// Writes `timestamp_column,value_column` rows; values use shortest round-trip text.
void write_series_csv(const std::filesystem::path& path, const RawSeries& series,
                      const std::string& value_column = "value",
                      const std::string& timestamp_column = "timestamp");

// ---------------------------------------------------------------------------
// Min-max scaling
// ---------------------------------------------------------------------------

struct ScalerParams {
    double min = 0.0;
    double max = 1.0;

    bool degenerate() const noexcept { return !(max > min); }
    friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

ScalerParams fit_scaler(std::span<const double> train_values);
// A degenerate scaler (max == min) maps everything to 0.5.
double apply_scaler(const ScalerParams& s, double v) noexcept;
double invert_scaler(const ScalerParams& s, double v) noexcept;
std::vector<double> apply_scaler(const ScalerParams& s, std::span<const double> values);
std::vector<double> invert_scaler(const ScalerParams& s, std::span<const double> values);

// ---------------------------------------------------------------------------
// Split and windowing
// ---------------------------------------------------------------------------

// First floor(fraction * n) points go to train, the rest to test, order kept.
std::pair<RawSeries, RawSeries> chrono_split(const RawSeries& series, double train_fraction = 0.8);

// Supervised samples in temporal order.
struct TimeSeriesDataset {
    std::vector<Tensor> X;                  // each (window, 1)
    std::vector<double> y;
    std::vector<std::size_t> origin_index;  // position of the window start in the source series
    std::size_t window = 1;

    std::size_t size() const noexcept { return y.size(); }
    bool empty() const noexcept { return y.empty(); }
};

// X_i = values[i .. i+window), y_i = values[i+window]. `index_offset` is added
// to origin_index so samples from a split still point into the full series.
TimeSeriesDataset make_windows(std::span<const double> values, std::size_t window = 1,
                               std::size_t index_offset = 0);

// ---------------------------------------------------------------------------
// Synthetic traffic-like series
// ---------------------------------------------------------------------------

// Defaults sample every 10 minutes: 144 points per day, 1008 per week.
struct SynthProfile {
    double base = 100.0;
    double daily_amplitude = 40.0;
    double daily_period = 144.0;
    double weekly_modulation = 0.3;
    double weekly_period = 1008.0;
    double noise_std = 4.0;
    double spike_rate = 0.005;
    double spike_scale = 60.0;
    std::int64_t start_ms = 1383260400000;  // 2013-11-01T00:00:00+01:00
    std::int64_t interval_ms = 600000;
};

// Noise-free, spike-free value at index t.
double synth_clean_value(const SynthProfile& profile, std::size_t t) noexcept;

// Seeds of the two independent draw streams used by synth_series.
std::uint64_t synth_noise_seed(std::uint64_t seed);
std::uint64_t synth_spike_seed(std::uint64_t seed);

// clean value + noise_std * N(0,1) + spikes. Per index the spike stream draws
// one uniform u; when u < spike_rate a second uniform w adds
// spike_scale * (0.5 + w). The noise stream is only consumed when noise_std > 0.
RawSeries synth_series(std::uint64_t seed, std::size_t length, const SynthProfile& profile = {});

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

struct CsvSource {
    std::string path;
    std::string value_column = "value";
    std::string timestamp_column = "timestamp";
};

struct SynthSource {
    std::uint64_t seed = 1;
    std::size_t length = 5000;
    SynthProfile profile;
};

struct DatasetSpec {
    std::variant<CsvSource, SynthSource> source = SynthSource{};
    std::size_t window = 1;
    double train_fraction = 0.8;
};

struct LoadedSeries {
    RawSeries series;
    std::size_t dropped_rows = 0;
};

LoadedSeries load_series(const DatasetSpec& spec);

// Train/test windows built per split (no window straddles the boundary),
// both scaled with parameters fit on the training split only.
struct PreparedData {
    TimeSeriesDataset train;
    TimeSeriesDataset test;
    ScalerParams scaler;
    std::size_t series_length = 0;
    std::size_t train_points = 0;
};

PreparedData prepare_dataset(const RawSeries& series, std::size_t window, double train_fraction);

// floor/ceil that ignore representation error below 1e-9 relative, so that
// e.g. 0.7 * 10 counts as exactly 7.
std::size_t snapped_floor(double x);
std::size_t snapped_ceil(double x);

}  // namespace sampleimp
