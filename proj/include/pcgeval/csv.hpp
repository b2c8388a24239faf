#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pcgeval {

// Shortest round-trip decimal form (std::to_chars); keeps emitted files
// byte-stable across runs.
std::string format_double(double value);

std::vector<std::string> split(std::string_view line, char sep);

// Whole-file CSV reader for the simple unquoted files this project emits.
// Returns one row per line, header included.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

} // namespace pcgeval
