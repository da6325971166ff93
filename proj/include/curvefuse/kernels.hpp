#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "curvefuse/basis.hpp"

// Data-parallel inner loops shared by the fusion solver and the covariance
// estimators. Every kernel comes in two flavours: a plain serial reference
// (the _serial functions) and an OpenMP version that partitions independent
// output slots across threads. Both perform the same floating-point
// operations in the same order per slot, so results are bitwise identical
// for any thread count; the unit tests and tools/bench_kernels rely on that.

namespace curvefuse::kernels {

// Unordered pairs (i<j) of n subjects in lexicographic order.
struct PairIndex {
  int n = 0;
  std::vector<std::pair<int, int>> pairs;

  explicit PairIndex(int n_subjects);
  int count() const { return static_cast<int>(pairs.size()); }

  // Position of pair (i,j), i<j, in lexicographic order.
  int position(int i, int j) const { return i * n - i * (i + 1) / 2 + (j - i - 1); }
};

// Slack/dual sweep of the splitting scheme:
//   z      = beta_i - beta_j + v_ij/theta
//   delta  = group-MCP threshold of z
//   v     += theta * (beta_i - beta_j - delta)
// Returns max_{i<j} ||beta_i - beta_j - delta_ij||_2 after the update.
double pair_prox_dual_step_serial(const Matrix& beta, const PairIndex& pairs, double lambda2,
                                  double gamma, double theta, Matrix& delta, Matrix& v);
double pair_prox_dual_step(const Matrix& beta, const PairIndex& pairs, double lambda2,
                           double gamma, double theta, Matrix& delta, Matrix& v, int threads);

// Per-subject coupling term of the beta-step right-hand side:
//   out_i = sum_{j>i} c_ij - sum_{j<i} c_ji,  c = delta - v/theta.
void pair_coupling_rhs_serial(const Matrix& c, const PairIndex& pairs, Matrix& out);
void pair_coupling_rhs(const Matrix& c, const PairIndex& pairs, Matrix& out, int threads);

// X^T X accumulated entry by entry (upper triangle, mirrored). The serial
// row order inside each entry is preserved in the parallel version.
Matrix gram_serial(const Matrix& x);
Matrix gram(const Matrix& x, int threads);

}  // namespace curvefuse::kernels
