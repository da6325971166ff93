#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvefuse/basis.hpp"

namespace curvefuse {

// Which observed curve the conditional law conditions on: the replicate
// average (with Sigma_U/J) or the first replicate alone (J taken as 1).
enum class CorrectionMode { Average, Single };

const char* to_string(CorrectionMode mode);
CorrectionMode correction_mode_from_string(const std::string& text);

// n subjects x J replicates of curves observed on one shared grid.
struct FunctionalDataset {
  TimeGrid grid;
  std::vector<std::string> subject_ids;
  std::vector<Matrix> observations;  // one J x m matrix per subject

  int n_subjects() const { return static_cast<int>(observations.size()); }
  int n_replicates() const {
    return observations.empty() ? 0 : static_cast<int>(observations.front().rows());
  }
  int grid_size() const { return grid.size(); }

  void validate() const;

  // Replicate average per subject (n x m), or the first replicate only.
  Matrix replicate_means() const;
  Matrix conditioning_curves(CorrectionMode mode) const;
};

struct CovarianceEstimates {
  Matrix sigma_u;        // within-subject measurement-error covariance
  Matrix sigma_w;        // between-subject covariance over big groups
  Matrix sigma_eps;      // sigma_w - sigma_u projected onto the PSD cone
  Matrix raw_sigma_eps;  // pre-projection difference (diagnostics)
  std::vector<int> groups_used;  // cluster labels with size >= 3
  int clipped_eigenvalues = 0;
};

struct ConditionalLaw {
  Matrix means;      // n x m, row i is the conditional mean of subject i
  Matrix sigma_bar;  // shared conditional covariance
  Matrix shrinkage;  // S = sigma_eps (sigma_eps + sigma_u/J)^-1
  std::vector<bool> pooled;  // subjects whose singleton group was pooled
};

// (1/(n(J-1))) sum_ij (W_ij - Wbar_i)(W_ij - Wbar_i)^T. Needs J >= 2.
Matrix estimate_sigma_u(const FunctionalDataset& data, int threads = 1);

// Per-replicate within-group covariances averaged over groups of size >= 3.
// Returns the estimate and the labels of the groups used. Throws when no
// group reaches size 3.
std::pair<Matrix, std::vector<int>> estimate_sigma_w(const FunctionalDataset& data,
                                                     const std::vector<int>& partition,
                                                     int threads = 1);

// sigma_w - sigma_u, re-symmetrized and eigenvalue-clipped at zero.
// clipped_out (optional) receives the number of negative eigenvalues.
Matrix estimate_sigma_eps(const Matrix& sigma_w, const Matrix& sigma_u, Matrix* raw_out = nullptr,
                          int* clipped_out = nullptr);

CovarianceEstimates estimate_covariances(const FunctionalDataset& data,
                                         const std::vector<int>& partition, int threads = 1);

// Conditional mean and covariance of the latent curve given the observed one:
//   mu    = group_mean + S (observed - group_mean)
//   Sigma = sigma_eps - S sigma_eps,   S = sigma_eps (sigma_eps + sigma_u/J)^-1.
// The sum matrix gets a small ridge when badly conditioned.
std::pair<Vector, Matrix> conditional_params(const Vector& observed, const Vector& group_mean,
                                             const Matrix& sigma_eps, const Matrix& sigma_u,
                                             double replicates);

// Pooled mean for a singleton group: the nearest group of size >= 3 in L2
// distance, blended as w*singleton + (1-w)*nearest with
//   w = d_near / sum_k d_k   (several big groups)
//   w = 1/2                  (exactly one big group).
// Returns the pooled mean and the weight.
std::pair<Vector, double> pooled_group_mean(const Vector& singleton_mean,
                                            const std::vector<Vector>& big_group_means);

ConditionalLaw compute_conditional_law(const FunctionalDataset& data,
                                       const std::vector<int>& partition,
                                       const CovarianceEstimates& estimates, CorrectionMode mode);

// One pseudo-curve per subject drawn from N(mu_i, Sigma_bar) via a symmetric
// square root. Subject i uses the stream derived from (seed, i), so serial
// and parallel execution produce identical draws.
Matrix simulate_pseudo(const FunctionalDataset& data, const std::vector<int>& partition,
                       const CovarianceEstimates& estimates, std::uint64_t seed,
                       CorrectionMode mode = CorrectionMode::Average, int threads = 1);

}  // namespace curvefuse
