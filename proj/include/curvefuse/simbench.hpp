#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvefuse/pipeline.hpp"

namespace curvefuse {

// Two-group synthetic design: f1(t) = cos(1.5*pi*t) + 2.5 and
// f2(t) = sin(1.5*pi*t) + c, iid N(0, noise_sd^2) curve noise, and J
// replicate measurements per subject contaminated by compound-symmetry
// errors gamma_ij + gamma'_ij(t), both N(0, sigma^2/4).
struct ScenarioConfig {
  int group_size = 20;  // n = 2 * group_size
  double c = -3.5;      // -0.5 close, -3.5 far
  double sigma = 2.0;
  int replicates = 3;
  int grid_size = 10;
  double noise_sd = 0.4;
  CorrectionMode correction_mode = CorrectionMode::Average;
  int n_mc = 50;
  std::uint64_t master_seed = 20260401;

  int max_outer_iterations = 10;
  FusionConfig fusion;
  SplineConfig spline;
  int threads = 1;  // replication fan-out

  void validate() const;
  std::string model_label() const;  // "far" / "close" / "c=<value>"
};

double mean_function_one(double t);
double mean_function_two(double t, double c);

struct SyntheticDataset {
  std::vector<int> truth;  // two equal groups
  Matrix true_curves;      // n x m latent Y
  FunctionalDataset data;  // observed W
  std::uint64_t seed = 0;
};

SyntheticDataset generate(const ScenarioConfig& config, std::uint64_t seed);

enum class Method { Oracle, Naive, Corrected };
const char* to_string(Method method);

struct BenchRow {
  std::string model;
  double sigma = 0.0;
  int n = 0;
  std::string method;
  double mean_clusters = 0.0;
  double mean_rand = 0.0;
  double mean_jaccard = 0.0;
  double mean_arand = 0.0;
  int failures = 0;  // replications excluded from the means
  int n_mc = 0;
};

struct RepOutcome {
  bool ok = false;
  double k_hat = 0.0;
  double rand = 0.0;
  double jaccard = 0.0;
  double arand = 0.0;
  std::string error;
};

// Per-replication outcomes for one method (index = replication). Seeds are a
// pure function of (master_seed, replication), so execution order and thread
// count cannot change any value.
std::vector<RepOutcome> run_method(const ScenarioConfig& config, Method method);

std::vector<BenchRow> run_benchmark(const ScenarioConfig& config,
                                    const std::vector<Method>& methods);

std::string render_table(const std::vector<BenchRow>& rows);
std::string table_csv(const std::vector<BenchRow>& rows);

}  // namespace curvefuse
