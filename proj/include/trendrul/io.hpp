#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trendrul::io {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// FNV-1a 64-bit. Used for config and artifact fingerprints in manifests
// (reproducibility tags, not cryptographic).
std::uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Minimal CSV: a header row plus numeric columns.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

}  // namespace trendrul::io
