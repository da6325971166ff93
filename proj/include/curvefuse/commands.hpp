#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "curvefuse/ingest.hpp"
#include "curvefuse/io.hpp"
#include "curvefuse/pipeline.hpp"
#include "curvefuse/simbench.hpp"

// Implementations of the CLI subcommands. The binary in tools/ only parses
// flags into these option structs; tests drive the same entry points.

namespace curvefuse::commands {

struct FitOptions {
  std::filesystem::path input_csv;
  std::filesystem::path output_dir = ".";
  IngestOptions ingest;
  CorrectionMode mode = CorrectionMode::Average;
  FusionConfig fusion;
  SplineConfig spline;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct CorrectOptions {
  FitOptions base;
  int max_outer_iterations = 10;
  bool emit_pseudo = false;
};

struct EvaluateOptions {
  std::filesystem::path truth_csv;
  std::filesystem::path estimate_csv;
  std::filesystem::path output_dir = ".";
};

struct BenchOptions {
  std::filesystem::path scenario_file;
  std::filesystem::path output_dir = ".";
  std::optional<std::uint64_t> seed_override;
  int threads = 1;
  bool emit_data = false;
};

// Applies "key = value" config entries (fusion.*, spline.*, pipeline.*,
// ingest.*, seed) onto the option struct. Unknown keys throw.
void apply_config(const std::map<std::string, std::string>& config, FitOptions& options,
                  int* max_outer = nullptr);

// Each command writes its outputs plus manifest.txt into output_dir and
// returns the rendered metrics/table text (also printed by the CLI).
std::string cmd_fit(const FitOptions& options);
std::string cmd_correct(const CorrectOptions& options);
std::string cmd_evaluate(const EvaluateOptions& options);
std::string cmd_bench(const BenchOptions& options);

}  // namespace curvefuse::commands
