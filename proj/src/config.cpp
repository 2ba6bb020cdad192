#include "sampleimp/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sampleimp/errors.hpp"
#include "sampleimp/text.hpp"

namespace sampleimp {

FlatConfig default_flat_config() {
    const SynthProfile prof;
    const SynthSource syn;
    const CsvSource csv;
    const TrainConfig train;
    const SweepConfig sweep;
    FlatConfig c = FlatConfig::object();
    c["dataset.source"] = nullptr;
    c["dataset.csv.path"] = csv.path;
    c["dataset.csv.value_column"] = csv.value_column;
    c["dataset.csv.timestamp_column"] = csv.timestamp_column;
    c["dataset.synth.seed"] = syn.seed;
    c["dataset.synth.length"] = syn.length;
    c["dataset.synth.base"] = prof.base;
    c["dataset.synth.daily_amplitude"] = prof.daily_amplitude;
    c["dataset.synth.daily_period"] = prof.daily_period;
    c["dataset.synth.weekly_modulation"] = prof.weekly_modulation;
    c["dataset.synth.weekly_period"] = prof.weekly_period;
    c["dataset.synth.noise_std"] = prof.noise_std;
    c["dataset.synth.spike_rate"] = prof.spike_rate;
    c["dataset.synth.spike_scale"] = prof.spike_scale;
    c["dataset.synth.start_ms"] = prof.start_ms;
    c["dataset.synth.interval_ms"] = prof.interval_ms;
    c["dataset.window"] = sweep.dataset.window;
    c["dataset.train_fraction"] = sweep.dataset.train_fraction;
    c["model.kind"] = to_string(train.topology.kind);
    c["model.hidden"] = train.topology.hidden;
    c["train.epochs"] = train.epochs;
    c["train.batch_size"] = train.batch_size;
    c["train.learning_rate"] = train.adam.learning_rate;
    c["train.beta1"] = train.adam.beta1;
    c["train.beta2"] = train.adam.beta2;
    c["train.epsilon"] = train.adam.epsilon;
    c["sweep.p_values"] = sweep.p_values;
    c["sweep.runs"] = sweep.n_runs;
    c["sweep.bootstrap_resamples"] = sweep.bootstrap_resamples;
    c["sweep.ci_level"] = sweep.ci_level;
    c["sweep.master_seed"] = sweep.master_seed;
    c["report.wall_time"] = sweep.record_wall_time ? "measured" : "omitted";
    return c;
}

namespace {

enum class Kind { string, integer, real, real_list, nullable_string };

Kind kind_of(const std::string& key) {
    static const FlatConfig defaults = default_flat_config();
    if (!defaults.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    const auto& d = defaults.at(key);
    if (key == "dataset.source") return Kind::nullable_string;
    if (d.is_string()) return Kind::string;
    if (d.is_array()) return Kind::real_list;
    if (d.is_number_integer()) return Kind::integer;
    return Kind::real;
}

bool is_integral_number(const nlohmann::json& v) {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d && std::abs(d) < 9.0e15;
    }
    return false;
}

nlohmann::json normalise(const std::string& key, const nlohmann::json& v) {
    const auto wrong = [&](const char* want) {
        return ConfigError("config key '" + key + "' expects " + want + ", got " + v.dump());
    };
    switch (kind_of(key)) {
        case Kind::nullable_string:
            if (!v.is_string() && !v.is_null()) throw wrong("a string");
            return v;
        case Kind::string:
            if (!v.is_string()) throw wrong("a string");
            return v;
        case Kind::integer:
            if (!is_integral_number(v)) throw wrong("an integer");
            if (v.is_number_float()) {
                const double d = v.get<double>();
                return d < 0 ? nlohmann::json(static_cast<std::int64_t>(d))
                             : nlohmann::json(static_cast<std::uint64_t>(d));
            }
            return v;
        case Kind::real:
            if (!v.is_number()) throw wrong("a number");
            return v.get<double>();
        case Kind::real_list: {
            if (!v.is_array()) throw wrong("an array of numbers");
            nlohmann::json out = nlohmann::json::array();
            for (const auto& e : v) {
                if (!e.is_number()) throw wrong("an array of numbers");
                out.push_back(e.get<double>());
            }
            return out;
        }
    }
    return v;
}

}  // namespace

void merge_config(FlatConfig& config, const nlohmann::json& overrides) {
    if (!overrides.is_object()) throw ConfigError("config must be a JSON object of dotted keys");
    for (const auto& [key, value] : overrides.items()) config[key] = normalise(key, value);
}

void set_config_value(FlatConfig& config, const std::string& key, const std::string& text) {
    nlohmann::json v;
    switch (kind_of(key)) {
        case Kind::string:
        case Kind::nullable_string:
            v = text;
            break;
        case Kind::integer: {
            const auto i = parse_int64(text);
            if (!i) throw ConfigError("config key '" + key + "' expects an integer, got '" + text + "'");
            v = *i;
            break;
        }
        case Kind::real: {
            const auto d = parse_double(text);
            if (!d) throw ConfigError("config key '" + key + "' expects a number, got '" + text + "'");
            v = *d;
            break;
        }
        case Kind::real_list: {
            v = nlohmann::json::array();
            if (!text.empty()) {
                for (const auto& part : split_csv_line(text)) {
                    const auto d = parse_double(part);
                    if (!d) throw ConfigError("config key '" + key + "' expects numbers, got '" + text + "'");
                    v.push_back(*d);
                }
            }
            break;
        }
    }
    config[key] = normalise(key, v);
}

nlohmann::json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("schema_version")) return j.at("config");
    return j;
}

namespace {

std::uint64_t get_u64(const FlatConfig& c, const std::string& key) {
    const auto& v = c.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw ConfigError("config key '" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::int64_t get_i64(const FlatConfig& c, const std::string& key) { return c.at(key).get<std::int64_t>(); }
double get_real(const FlatConfig& c, const std::string& key) { return c.at(key).get<double>(); }
std::string get_str(const FlatConfig& c, const std::string& key) { return c.at(key).get<std::string>(); }

}  // namespace

SweepConfig sweep_from_flat(const FlatConfig& c) {
    SweepConfig s;
    const auto& src = c.at("dataset.source");
    if (src.is_null()) throw ConfigError("dataset.source is required (\"synthetic\" or \"csv\")");
    const auto source = src.get<std::string>();
    if (source == "csv") {
        CsvSource csv;
        csv.path = get_str(c, "dataset.csv.path");
        csv.value_column = get_str(c, "dataset.csv.value_column");
        csv.timestamp_column = get_str(c, "dataset.csv.timestamp_column");
        if (csv.path.empty()) throw ConfigError("dataset.csv.path is required when dataset.source is csv");
        s.dataset.source = csv;
    } else if (source == "synthetic") {
        SynthSource syn;
        syn.seed = get_u64(c, "dataset.synth.seed");
        syn.length = get_u64(c, "dataset.synth.length");
        auto& p = syn.profile;
        p.base = get_real(c, "dataset.synth.base");
        p.daily_amplitude = get_real(c, "dataset.synth.daily_amplitude");
        p.daily_period = get_real(c, "dataset.synth.daily_period");
        p.weekly_modulation = get_real(c, "dataset.synth.weekly_modulation");
        p.weekly_period = get_real(c, "dataset.synth.weekly_period");
        p.noise_std = get_real(c, "dataset.synth.noise_std");
        p.spike_rate = get_real(c, "dataset.synth.spike_rate");
        p.spike_scale = get_real(c, "dataset.synth.spike_scale");
        p.start_ms = get_i64(c, "dataset.synth.start_ms");
        p.interval_ms = get_i64(c, "dataset.synth.interval_ms");
        if (syn.length == 0) throw ConfigError("dataset.synth.length must be positive");
        if (!(p.daily_period > 0) || !(p.weekly_period > 0) || p.noise_std < 0 || p.spike_rate < 0 ||
            p.spike_rate > 1 || p.interval_ms <= 0) {
            throw ConfigError("dataset.synth profile values out of range");
        }
        s.dataset.source = syn;
    } else {
        throw ConfigError("dataset.source must be \"synthetic\" or \"csv\", got \"" + source + "\"");
    }
    s.dataset.window = get_u64(c, "dataset.window");
    s.dataset.train_fraction = get_real(c, "dataset.train_fraction");

    auto& t = s.train;
    t.topology.kind = model_kind_from_string(get_str(c, "model.kind"));
    t.topology.hidden = get_u64(c, "model.hidden");
    t.topology.timesteps = s.dataset.window;
    t.topology.input_width = 1;
    t.topology.output = 1;
    t.epochs = get_u64(c, "train.epochs");
    t.batch_size = get_u64(c, "train.batch_size");
    t.adam.learning_rate = get_real(c, "train.learning_rate");
    t.adam.beta1 = get_real(c, "train.beta1");
    t.adam.beta2 = get_real(c, "train.beta2");
    t.adam.epsilon = get_real(c, "train.epsilon");

    s.p_values = c.at("sweep.p_values").get<std::vector<double>>();
    s.n_runs = get_u64(c, "sweep.runs");
    s.bootstrap_resamples = get_u64(c, "sweep.bootstrap_resamples");
    s.ci_level = get_real(c, "sweep.ci_level");
    s.master_seed = get_u64(c, "sweep.master_seed");
    const auto wall = get_str(c, "report.wall_time");
    if (wall != "measured" && wall != "omitted") {
        throw ConfigError("report.wall_time must be \"measured\" or \"omitted\"");
    }
    s.record_wall_time = wall == "measured";
    validate(s);
    return s;
}

FlatConfig flat_from_sweep(const SweepConfig& s) {
    FlatConfig c = default_flat_config();
    if (const auto* csv = std::get_if<CsvSource>(&s.dataset.source)) {
        c["dataset.source"] = "csv";
        c["dataset.csv.path"] = csv->path;
        c["dataset.csv.value_column"] = csv->value_column;
        c["dataset.csv.timestamp_column"] = csv->timestamp_column;
    } else {
        const auto& syn = std::get<SynthSource>(s.dataset.source);
        c["dataset.source"] = "synthetic";
        c["dataset.synth.seed"] = syn.seed;
        c["dataset.synth.length"] = syn.length;
        c["dataset.synth.base"] = syn.profile.base;
        c["dataset.synth.daily_amplitude"] = syn.profile.daily_amplitude;
        c["dataset.synth.daily_period"] = syn.profile.daily_period;
        c["dataset.synth.weekly_modulation"] = syn.profile.weekly_modulation;
        c["dataset.synth.weekly_period"] = syn.profile.weekly_period;
        c["dataset.synth.noise_std"] = syn.profile.noise_std;
        c["dataset.synth.spike_rate"] = syn.profile.spike_rate;
        c["dataset.synth.spike_scale"] = syn.profile.spike_scale;
        c["dataset.synth.start_ms"] = syn.profile.start_ms;
        c["dataset.synth.interval_ms"] = syn.profile.interval_ms;
    }
    c["dataset.window"] = s.dataset.window;
    c["dataset.train_fraction"] = s.dataset.train_fraction;
    c["model.kind"] = to_string(s.train.topology.kind);
    c["model.hidden"] = s.train.topology.hidden;
    c["train.epochs"] = s.train.epochs;
    c["train.batch_size"] = s.train.batch_size;
    c["train.learning_rate"] = s.train.adam.learning_rate;
    c["train.beta1"] = s.train.adam.beta1;
    c["train.beta2"] = s.train.adam.beta2;
    c["train.epsilon"] = s.train.adam.epsilon;
    c["sweep.p_values"] = s.p_values;
    c["sweep.runs"] = s.n_runs;
    c["sweep.bootstrap_resamples"] = s.bootstrap_resamples;
    c["sweep.ci_level"] = s.ci_level;
    c["sweep.master_seed"] = s.master_seed;
    c["report.wall_time"] = s.record_wall_time ? "measured" : "omitted";
    return c;
}

}  // namespace sampleimp
