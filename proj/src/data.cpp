#include "sampleimp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "sampleimp/errors.hpp"
#include "sampleimp/rng.hpp"
#include "sampleimp/text.hpp"

namespace sampleimp {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

IngestResult ingest_csv(const std::filesystem::path& path, const std::string& value_column,
                        const std::string& timestamp_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file " + path.string() + " is empty");
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw DataError("column '" + name + "' not found in " + path.string());
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t vcol = column(value_column);
    const std::size_t tcol = column(timestamp_column);

    std::vector<std::pair<std::int64_t, double>> rows;
    IngestResult result;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        std::optional<std::int64_t> ts;
        std::optional<double> v;
        if (fields.size() > std::max(vcol, tcol)) {
            ts = parse_int64(fields[tcol]);
            v = parse_double(fields[vcol]);
        }
        if (!ts || !v || !std::isfinite(*v)) {
            ++result.dropped_rows;
            continue;
        }
        rows.emplace_back(*ts, *v);
    }
    if (rows.empty()) throw DataError("no usable rows in " + path.string());

    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].first == rows[i - 1].first) {
            throw DataError("duplicate timestamp " + std::to_string(rows[i].first) + " in " +
                            path.string());
        }
    }
    result.series.timestamps.reserve(rows.size());
    result.series.values.reserve(rows.size());
    for (const auto& [ts, v] : rows) {
        result.series.timestamps.push_back(ts);
        result.series.values.push_back(v);
    }
    return result;
}

void write_series_csv(const std::filesystem::path& path, const RawSeries& series,
                      const std::string& value_column, const std::string& timestamp_column) {
    std::string out = timestamp_column + "," + value_column + "\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += std::to_string(series.timestamps[i]);
        out += ',';
        out += format_double(series.values[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

ScalerParams fit_scaler(std::span<const double> train_values) {
    if (train_values.empty()) throw std::invalid_argument("fit_scaler: empty input");
    const auto [lo, hi] = std::minmax_element(train_values.begin(), train_values.end());
    return {*lo, *hi};
}

double apply_scaler(const ScalerParams& s, double v) noexcept {
    if (s.degenerate()) return 0.5;
    return (v - s.min) / (s.max - s.min);
}

double invert_scaler(const ScalerParams& s, double v) noexcept {
    if (s.degenerate()) return s.min;
    return s.min + v * (s.max - s.min);
}

std::vector<double> apply_scaler(const ScalerParams& s, std::span<const double> values) {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [&](double v) { return apply_scaler(s, v); });
    return out;
}

std::vector<double> invert_scaler(const ScalerParams& s, std::span<const double> values) {
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [&](double v) { return invert_scaler(s, v); });
    return out;
}

// ---------------------------------------------------------------------------
// Split / windows
// ---------------------------------------------------------------------------

std::size_t snapped_floor(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::floor(x));
}

std::size_t snapped_ceil(double x) {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::ceil(x));
}

std::pair<RawSeries, RawSeries> chrono_split(const RawSeries& series, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("chrono_split: train fraction must lie in (0, 1)");
    }
    if (series.size() < 2) throw std::invalid_argument("chrono_split: series shorter than 2");
    const std::size_t n_train = snapped_floor(train_fraction * static_cast<double>(series.size()));
    if (n_train == 0 || n_train == series.size()) {
        throw std::invalid_argument("chrono_split: split leaves one side empty");
    }
    RawSeries train, test;
    const auto cut = static_cast<std::ptrdiff_t>(n_train);
    train.timestamps.assign(series.timestamps.begin(), series.timestamps.begin() + cut);
    train.values.assign(series.values.begin(), series.values.begin() + cut);
    test.timestamps.assign(series.timestamps.begin() + cut, series.timestamps.end());
    test.values.assign(series.values.begin() + cut, series.values.end());
    return {std::move(train), std::move(test)};
}

TimeSeriesDataset make_windows(std::span<const double> values, std::size_t window,
                               std::size_t index_offset) {
    if (window == 0) throw std::invalid_argument("make_windows: window must be positive");
    if (values.size() <= window) {
        throw std::invalid_argument("make_windows: series length " + std::to_string(values.size()) +
                                    " must exceed window " + std::to_string(window));
    }
    TimeSeriesDataset ds;
    ds.window = window;
    const std::size_t n = values.size() - window;
    ds.X.reserve(n);
    ds.y.reserve(n);
    ds.origin_index.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.X.emplace_back(std::vector<std::size_t>{window, 1},
                          std::vector<double>(values.begin() + i, values.begin() + i + window));
        ds.y.push_back(values[i + window]);
        ds.origin_index.push_back(index_offset + i);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Synthetic series
// ---------------------------------------------------------------------------

double synth_clean_value(const SynthProfile& p, std::size_t t) noexcept {
    const double tt = static_cast<double>(t);
    const double daily = std::sin(2.0 * std::numbers::pi * tt / p.daily_period);
    const double weekly = 1.0 + p.weekly_modulation * std::sin(2.0 * std::numbers::pi * tt / p.weekly_period);
    return p.base + p.daily_amplitude * daily * weekly;
}

std::uint64_t synth_noise_seed(std::uint64_t seed) { return derive_seed(seed, 1); }
std::uint64_t synth_spike_seed(std::uint64_t seed) { return derive_seed(seed, 2); }

RawSeries synth_series(std::uint64_t seed, std::size_t length, const SynthProfile& profile) {
    if (length == 0) throw std::invalid_argument("synth_series: length must be positive");
    if (!(profile.daily_period > 0.0) || !(profile.weekly_period > 0.0) || profile.noise_std < 0.0 ||
        profile.spike_rate < 0.0 || profile.spike_rate > 1.0 || profile.interval_ms <= 0) {
        throw std::invalid_argument("synth_series: invalid profile");
    }
    Rng noise(synth_noise_seed(seed));
    Rng spikes(synth_spike_seed(seed));
    RawSeries s;
    s.timestamps.resize(length);
    s.values.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
        double v = synth_clean_value(profile, t);
        if (profile.noise_std > 0.0) v += profile.noise_std * standard_normal(noise);
        if (profile.spike_rate > 0.0 && uniform01(spikes) < profile.spike_rate) {
            v += profile.spike_scale * (0.5 + uniform01(spikes));
        }
        s.timestamps[t] = profile.start_ms + static_cast<std::int64_t>(t) * profile.interval_ms;
        s.values[t] = v;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

LoadedSeries load_series(const DatasetSpec& spec) {
    if (const auto* csv = std::get_if<CsvSource>(&spec.source)) {
        auto r = ingest_csv(csv->path, csv->value_column, csv->timestamp_column);
        return {std::move(r.series), r.dropped_rows};
    }
    const auto& syn = std::get<SynthSource>(spec.source);
    return {synth_series(syn.seed, syn.length, syn.profile), 0};
}

PreparedData prepare_dataset(const RawSeries& series, std::size_t window, double train_fraction) {
    std::pair<RawSeries, RawSeries> parts;
    try {
        parts = chrono_split(series, train_fraction);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("cannot split series: ") + e.what());
    }
    const auto& [train, test] = parts;
    if (train.size() <= window || test.size() <= window) {
        throw DataError("series too short: each split needs more than " + std::to_string(window) +
                        " points (train " + std::to_string(train.size()) + ", test " +
                        std::to_string(test.size()) + ")");
    }
    PreparedData d;
    d.scaler = fit_scaler(train.values);
    d.series_length = series.size();
    d.train_points = train.size();
    d.train = make_windows(apply_scaler(d.scaler, train.values), window, 0);
    d.test = make_windows(apply_scaler(d.scaler, test.values), window, train.size());
    return d;
}

}  // namespace sampleimp
