#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "sampleimp/model.hpp"

namespace sampleimp {

// Layout: "SIMPCKPT", u32 format version, u64 header length, UTF-8 JSON
// header (topology, init_seed, config_hash, param_count), then param_count
// little-endian doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelState model;
    std::string config_hash;
};

// FNV-1a 64 of the text, as 16 lowercase hex digits.
std::string config_hash(std::string_view canonical_config);

void save_checkpoint(const std::filesystem::path& path, const ModelState& model,
                     const std::string& config_hash);

// Throws std::runtime_error on a malformed or mismatched file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sampleimp
