#pragma once

// Run configuration as a flat JSON object with dotted keys, e.g.
//   {"dataset.source": "synthetic", "train.epochs": 30, "sweep.p_values": [10, 50, 100]}
// Every key except dataset.source has a default. Unknown keys are rejected.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sampleimp/experiment.hpp"

namespace sampleimp {

using FlatConfig = nlohmann::ordered_json;

// All recognised keys with their defaults; dataset.source is null.
FlatConfig default_flat_config();

// Merges `overrides` (a flat object) into `config`. Throws ConfigError for an
// unknown key or a value whose JSON type does not match the default's.
void merge_config(FlatConfig& config, const nlohmann::json& overrides);

// Sets one key from command-line text, parsed according to the key's type.
// Arrays take comma-separated values.
void set_config_value(FlatConfig& config, const std::string& key, const std::string& text);

// Reads a config file. A report's summary.json is accepted too: its "config"
// object is the effective configuration of that run.
nlohmann::json read_config_file(const std::filesystem::path& path);

// Throws ConfigError when a value is out of range or dataset.source is missing.
SweepConfig sweep_from_flat(const FlatConfig& config);
FlatConfig flat_from_sweep(const SweepConfig& sweep);

}  // namespace sampleimp
