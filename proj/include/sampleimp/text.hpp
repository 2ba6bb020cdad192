#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sampleimp {

// Shortest text that parses back to the same double ("nan"/"inf" for non-finite).
std::string format_double(double v);

// Fixed-point text with `digits` decimals.
std::string format_fixed(double v, int digits);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int64(std::string_view s);
std::optional<std::uint64_t> parse_uint64(std::string_view s);

// Splits one CSV record on commas; double-quoted fields may contain commas
// and "" escapes. Surrounding whitespace is trimmed from unquoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

// Writes via a sibling temporary and rename, so readers never see a half file.
// Throws std::runtime_error if the file cannot be written.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace sampleimp
