#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "curvefuse/basis.hpp"
#include "curvefuse/mcp.hpp"

namespace curvefuse {

struct SubjectCurve {
  std::string id;
  TimeGrid grid;
  Vector values;
};

// Possibly unbalanced collection of observed curves. All subjects share the
// spline basis (knots live on [0,1]) but may be observed on different grids.
struct CurveSet {
  std::vector<SubjectCurve> subjects;

  int size() const { return static_cast<int>(subjects.size()); }
  void validate() const;
  long long total_observations() const;
};

struct FusionConfig {
  std::vector<double> lambda1_grid;  // roughness penalty candidates
  std::vector<double> lambda2_grid;  // fusion penalty candidates
  // gamma sets the MCP flat point (gamma*lambda2) and with it the reach of
  // the collective pull during fusion: below ~4 the solver carves noisy
  // groups into chunks instead of peeling stragglers off a fused core.
  double mcp_gamma = 4.75;
  double admm_theta = 1.0;
  int max_iterations = 2000;
  double primal_tolerance = 1e-5;
  double fuse_tolerance = 1e-6;
  // Warm-starting each lambda2 candidate from the previous one is faster but
  // biases the nonconvex solver toward the fragmented local minima it came
  // from; cold starts decided the benchmarks here (see select_and_fit).
  bool warm_start_path = false;
  int threads = 1;

  FusionConfig();
  void validate() const;
};

std::vector<double> log_grid(double lo, double hi, int count);

// Result of one fusion fit. beta rows are the per-subject coefficients after
// fused components are averaged; partition labels are canonical
// (first-occurrence order, 0-based).
struct FusionFit {
  Matrix beta;
  std::vector<int> partition;
  int k_hat = 0;

  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double bic1 = std::numeric_limits<double>::quiet_NaN();
  double bic2 = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> objective_trace;
  std::vector<double> primal_residual_trace;
  bool converged = false;  // false = max_iterations fired

  Vector df_per_subject;   // df_i at the fit's lambda1
  Vector rss_per_subject;  // ||y_i - B_i beta_i||^2 at the returned beta

  struct PathEntry {
    double lambda2;
    double bic2;
    int k_hat;
    int iterations;
    bool converged;
  };
  std::vector<PathEntry> lambda2_path;  // filled by select_and_fit

  std::vector<std::string> warnings;
};

// Warm-start state threaded along the lambda2 path.
struct FusionState {
  Matrix beta;
  Matrix delta;
  Matrix dual;
};

std::vector<SplineDesign> build_designs(const CurveSet& curves, const SplineConfig& config);

// Objective of the penalized pairwise-grouping criterion:
//   1/2 sum_i { ||y_i - B_i b_i||^2 + lambda1 * b_i^T D b_i }
//   + sum_{i<j} rho(||b_i - b_j||_2, lambda2)
double objective(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                 const Matrix& beta, double lambda1, double lambda2, double gamma);

// Alternating scheme at fixed (lambda1, lambda2): exact coupled beta solve,
// group-MCP slack update, dual ascent. Stops on the primal residual or on
// max_iterations.
FusionFit fit_fixed(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                    double lambda1, double lambda2, const FusionConfig& config,
                    const FusionState* warm_start = nullptr, FusionState* final_state = nullptr);

// Connected components of the graph with an edge where ||delta_ij|| is within
// fuse_tolerance; labels in first-occurrence order.
std::vector<int> extract_clusters(const Matrix& delta, int n_subjects, double fuse_tolerance);

// BIC over per-subject ridge fits (lambda2 = 0):
//   sum_i { log(rss_i/n_i) + log(n_i)/n_i * df_i },
//   df_i = tr{ B_i (B_i^T B_i + lambda1 D)^-1 B_i^T }.
// Returns -inf when a subject interpolates exactly (degenerate).
double bic_lambda1(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                   double lambda1);

// BIC of a fused fit: log(sum_i rss_i / N) + log(N) * df / N with
// df = (K_hat/n) * sum_i df_i. Uses the rss/df recorded in the fit.
double bic_lambda2(const CurveSet& curves, const FusionFit& fit);

// Two-step tuning: lambda1 by bic_lambda1 with fusion off, then lambda2 along
// an ascending warm-started path by bic_lambda2. Ties prefer the smaller
// candidate.
FusionFit select_and_fit(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                         const FusionConfig& config);

}  // namespace curvefuse
