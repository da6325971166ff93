#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvefuse/errorcorr.hpp"

namespace curvefuse {

// Malformed or inconsistent input data (CLI exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Printed with full round-trip precision so written values re-ingest exactly.
std::string format_double(double value);

// Write-temp-then-rename; partial files never appear under the final name.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit content digest, hex encoded.
std::string fnv1a_digest(const std::string& content);
std::string file_digest(const std::filesystem::path& path);

// Flat "key = value" config text; '#' starts a comment. Later keys win.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

std::vector<std::string> split_csv_list(const std::string& text);

// Long-format dataset CSV: header subject,replicate,time,value with an empty
// value field marking a missing observation.
std::string long_csv(const FunctionalDataset& data);

std::string membership_csv(const std::vector<std::string>& ids, const std::vector<int>& labels);
std::map<std::string, int> read_membership_csv(const std::filesystem::path& path);

// Reproducibility sidecar written next to every command's outputs. The
// timestamp line is informational; everything else identifies the run.
struct RunManifest {
  std::string command;
  std::string version;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;   // key, value
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest

  std::string render(bool include_timestamp = true) const;
};

}  // namespace curvefuse
