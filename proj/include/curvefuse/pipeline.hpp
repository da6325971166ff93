#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvefuse/errorcorr.hpp"
#include "curvefuse/fusion.hpp"

namespace curvefuse {

struct PipelineConfig {
  CorrectionMode mode = CorrectionMode::Average;
  int max_outer_iterations = 10;
  std::uint64_t seed = 1;
  FusionConfig fusion;
  SplineConfig spline;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;  // 0 = initial clustering, >= 1 = correction passes
  std::vector<int> partition;
  int k_hat = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double bic2 = 0.0;
  int membership_changes = 0;  // vs previous record, canonical labels
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  std::string stop_reason;  // membership-stable | bic-increase | max-iterations
                            // (covariance-fallback when estimation failed)
  std::vector<std::string> warnings;
};

struct PipelineResult {
  std::vector<int> partition;
  FusionFit fit;
  IterationTrace trace;
  Matrix pseudo_data;  // the draw behind the returned fit; empty if the
                       // initial clustering was returned
};

// Step 1 of the algorithm: cluster the averaged curves (or the first
// replicate) with the two-step tuned fusion fit.
std::pair<std::vector<int>, FusionFit> initial_cluster(const FunctionalDataset& data,
                                                       const PipelineConfig& config);

// Full iterative correction: initial clustering, then repeat {estimate
// covariances, simulate pseudo-curves, re-cluster} until the membership
// stabilizes, the BIC rises (previous iteration returned), or the iteration
// cap. Covariance failure (no group of size >= 3) falls back to the initial
// clustering with a warning in the trace.
PipelineResult run(const FunctionalDataset& data, const PipelineConfig& config);

// Curves used by clustering in the given mode (shared grid).
CurveSet curves_from_dataset(const FunctionalDataset& data, CorrectionMode mode);
CurveSet curves_from_matrix(const FunctionalDataset& data, const Matrix& values);

}  // namespace curvefuse
