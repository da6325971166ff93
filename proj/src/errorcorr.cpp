#include "curvefuse/errorcorr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "curvefuse/kernels.hpp"
#include "curvefuse/rng.hpp"

#ifdef CURVEFUSE_HAVE_OPENMP
#include <omp.h>
#endif

namespace curvefuse {

const char* to_string(CorrectionMode mode) {
  return mode == CorrectionMode::Average ? "average" : "single";
}

CorrectionMode correction_mode_from_string(const std::string& text) {
  if (text == "average") return CorrectionMode::Average;
  if (text == "single") return CorrectionMode::Single;
  throw std::invalid_argument("unknown correction mode '" + text + "' (use average|single)");
}

void FunctionalDataset::validate() const {
  // Grid checks are looser than TimeGrid::validate(): covariance estimation
  // works on any strictly increasing grid, only spline fitting needs m >= 2
  // and the [0,1] range.
  if (grid.size() < 1) throw std::invalid_argument("dataset grid is empty");
  for (int k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1]))
      throw std::invalid_argument("dataset grid must be strictly increasing");
  if (observations.empty()) throw std::invalid_argument("dataset has no subjects");
  if (subject_ids.size() != observations.size())
    throw std::invalid_argument("dataset: one id per subject required");
  const int j = n_replicates();
  if (j < 1) throw std::invalid_argument("dataset needs at least one replicate");
  for (const auto& w : observations) {
    if (w.rows() != j) throw std::invalid_argument("dataset: replicate counts differ across subjects");
    if (w.cols() != grid.size())
      throw std::invalid_argument("dataset: curve length does not match the grid");
  }
}

Matrix FunctionalDataset::replicate_means() const {
  const int n = n_subjects();
  Matrix out(n, grid.size());
  for (int i = 0; i < n; ++i)
    out.row(i) = observations[static_cast<std::size_t>(i)].colwise().mean();
  return out;
}

Matrix FunctionalDataset::conditioning_curves(CorrectionMode mode) const {
  if (mode == CorrectionMode::Average) return replicate_means();
  const int n = n_subjects();
  Matrix out(n, grid.size());
  for (int i = 0; i < n; ++i) out.row(i) = observations[static_cast<std::size_t>(i)].row(0);
  return out;
}

Matrix estimate_sigma_u(const FunctionalDataset& data, int threads) {
  data.validate();
  const int n = data.n_subjects();
  const int j = data.n_replicates();
  const int m = data.grid_size();
  if (j < 2)
    throw std::invalid_argument(
        "measurement-error covariance unidentifiable without replicates (J >= 2 required)");

  // Deviations are anchored at the first replicate so identical replicates
  // cancel exactly (colwise means can round by an ulp and leak into the
  // estimate).
  Matrix deviations(n * j, m);
  for (int i = 0; i < n; ++i) {
    const Matrix& w = data.observations[static_cast<std::size_t>(i)];
    Eigen::RowVectorXd shifted_mean = Eigen::RowVectorXd::Zero(m);
    for (int r = 0; r < j; ++r) shifted_mean += w.row(r) - w.row(0);
    shifted_mean /= static_cast<double>(j);
    for (int r = 0; r < j; ++r)
      deviations.row(i * j + r) = (w.row(r) - w.row(0)) - shifted_mean;
  }
  return kernels::gram(deviations, threads) / (static_cast<double>(n) * (j - 1));
}

namespace {

std::map<int, std::vector<int>> group_members(const std::vector<int>& partition) {
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < partition.size(); ++i)
    groups[partition[i]].push_back(static_cast<int>(i));
  return groups;
}

// S = sigma_eps (sigma_eps + sigma_u/J)^-1 and Sigma_bar = sigma_eps - S sigma_eps.
// Adds a small ridge when the sum is badly conditioned; throws if it stays
// singular. Sigma_u = 0 short-circuits to S = I, Sigma_bar = 0: with no
// measurement error the conditioning is exact even when sigma_eps is singular.
std::pair<Matrix, Matrix> shrinkage_and_conditional_cov(const Matrix& sigma_eps,
                                                        const Matrix& sigma_u,
                                                        double replicates) {
  const Eigen::Index m = sigma_eps.rows();
  if (sigma_u.norm() == 0.0) return {Matrix::Identity(m, m), Matrix::Zero(m, m)};
  Matrix sum = sigma_eps + sigma_u / replicates;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sum);
  const double max_eval = eig.eigenvalues().maxCoeff();
  const double min_eval = eig.eigenvalues().minCoeff();
  if (max_eval <= 0.0) return {Matrix::Identity(m, m), Matrix::Zero(m, m)};
  if (min_eval <= 0.0 || max_eval / min_eval > 1e12)
    sum.diagonal().array() += 1e-8 * sum.trace() / static_cast<double>(m);

  Eigen::LDLT<Matrix> ldlt(sum);
  Matrix solved = ldlt.solve(sigma_eps);  // sum^-1 sigma_eps
  const double check = (sum * solved - sigma_eps).norm() / std::max(1.0, sigma_eps.norm());
  if (!std::isfinite(check) || check > 1e-6)
    throw std::runtime_error(
        "conditional law: sigma_eps + sigma_u/J is numerically singular even after ridge "
        "(relative solve residual " +
        std::to_string(check) + ")");

  Matrix shrink = solved.transpose();  // sigma_eps sum^-1 (sigma_eps symmetric)
  Matrix sigma_bar = sigma_eps - shrink * sigma_eps;
  sigma_bar = 0.5 * (sigma_bar + sigma_bar.transpose()).eval();
  return {std::move(shrink), std::move(sigma_bar)};
}

}  // namespace

std::pair<Matrix, std::vector<int>> estimate_sigma_w(const FunctionalDataset& data,
                                                     const std::vector<int>& partition,
                                                     int threads) {
  data.validate();
  const int n = data.n_subjects();
  const int j = data.n_replicates();
  const int m = data.grid_size();
  if (static_cast<int>(partition.size()) != n)
    throw std::invalid_argument("partition size does not match the dataset");

  auto groups = group_members(partition);
  std::vector<int> big;
  for (const auto& [label, members] : groups)
    if (members.size() >= 3) big.push_back(label);
  if (big.empty())
    throw std::runtime_error("no subgroup of size >= 3; cannot estimate signal variance");

  Matrix accum = Matrix::Zero(m, m);
  for (int label : big) {
    const auto& members = groups[label];
    const int gsize = static_cast<int>(members.size());
    Matrix rows(gsize, m);
    for (int r = 0; r < j; ++r) {
      for (int a = 0; a < gsize; ++a)
        rows.row(a) =
            data.observations[static_cast<std::size_t>(members[static_cast<std::size_t>(a)])].row(r);
      const Eigen::RowVectorXd group_mean = rows.colwise().mean();
      rows.rowwise() -= group_mean;
      accum += kernels::gram(rows, threads) / (gsize - 1);
    }
  }
  accum /= static_cast<double>(j) * static_cast<double>(big.size());
  return {std::move(accum), std::move(big)};
}

Matrix estimate_sigma_eps(const Matrix& sigma_w, const Matrix& sigma_u, Matrix* raw_out,
                          int* clipped_out) {
  if (sigma_w.rows() != sigma_w.cols() || sigma_u.rows() != sigma_u.cols() ||
      sigma_w.rows() != sigma_u.rows())
    throw std::invalid_argument("covariance matrices must be square and equally sized");

  Matrix raw = sigma_w - sigma_u;
  raw = 0.5 * (raw + raw.transpose()).eval();
  if (raw_out) *raw_out = raw;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(raw);
  Vector values = eig.eigenvalues();
  int clipped = 0;
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (values(k) < 0.0) {
      values(k) = 0.0;
      ++clipped;
    }
  if (clipped_out) *clipped_out = clipped;
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

CovarianceEstimates estimate_covariances(const FunctionalDataset& data,
                                         const std::vector<int>& partition, int threads) {
  CovarianceEstimates est;
  est.sigma_u = estimate_sigma_u(data, threads);
  auto [sigma_w, used] = estimate_sigma_w(data, partition, threads);
  est.sigma_w = std::move(sigma_w);
  est.groups_used = std::move(used);
  est.sigma_eps =
      estimate_sigma_eps(est.sigma_w, est.sigma_u, &est.raw_sigma_eps, &est.clipped_eigenvalues);
  return est;
}

std::pair<Vector, Matrix> conditional_params(const Vector& observed, const Vector& group_mean,
                                             const Matrix& sigma_eps, const Matrix& sigma_u,
                                             double replicates) {
  const Eigen::Index m = sigma_eps.rows();
  if (sigma_eps.cols() != m || sigma_u.rows() != m || sigma_u.cols() != m ||
      observed.size() != m || group_mean.size() != m)
    throw std::invalid_argument("conditional_params: dimension mismatch");
  if (replicates < 1.0) throw std::invalid_argument("conditional_params: replicates must be >= 1");

  // No measurement error: conditioning is exact, bypass the arithmetic.
  if (sigma_u.norm() == 0.0) return {observed, Matrix::Zero(m, m)};

  auto [shrink, sigma_bar] = shrinkage_and_conditional_cov(sigma_eps, sigma_u, replicates);
  Vector mu = group_mean + shrink * (observed - group_mean);
  return {std::move(mu), std::move(sigma_bar)};
}

std::pair<Vector, double> pooled_group_mean(const Vector& singleton_mean,
                                            const std::vector<Vector>& big_group_means) {
  if (big_group_means.empty())
    throw std::runtime_error("singleton pooling needs at least one group of size >= 3");

  double nearest = std::numeric_limits<double>::infinity();
  double distance_sum = 0.0;
  std::size_t nearest_idx = 0;
  for (std::size_t k = 0; k < big_group_means.size(); ++k) {
    const double d = (singleton_mean - big_group_means[k]).norm();
    distance_sum += d;
    if (d < nearest) {
      nearest = d;
      nearest_idx = k;
    }
  }

  double weight;
  if (big_group_means.size() == 1)
    weight = 0.5;
  else if (distance_sum <= 0.0)
    weight = 0.0;  // coincides with every big group
  else
    weight = nearest / distance_sum;

  Vector pooled = weight * singleton_mean + (1.0 - weight) * big_group_means[nearest_idx];
  return {std::move(pooled), weight};
}

ConditionalLaw compute_conditional_law(const FunctionalDataset& data,
                                       const std::vector<int>& partition,
                                       const CovarianceEstimates& estimates,
                                       CorrectionMode mode) {
  data.validate();
  const int n = data.n_subjects();
  const int m = data.grid_size();
  if (static_cast<int>(partition.size()) != n)
    throw std::invalid_argument("partition size does not match the dataset");

  const double j_eff =
      mode == CorrectionMode::Average ? static_cast<double>(data.n_replicates()) : 1.0;
  const Matrix observed = data.conditioning_curves(mode);
  const Matrix averaged = data.replicate_means();

  // Group means come from the replicate averages in both modes; they estimate
  // the latent group trajectory regardless of the conditioning variable.
  auto groups = group_members(partition);
  std::map<int, Vector> group_mean;
  std::vector<Vector> big_means;
  for (const auto& [label, members] : groups) {
    Vector mean = Vector::Zero(m);
    for (int i : members) mean += averaged.row(i).transpose();
    mean /= static_cast<double>(members.size());
    group_mean[label] = mean;
    if (members.size() >= 3) big_means.push_back(mean);
  }

  ConditionalLaw law;
  law.means.resize(n, m);
  law.pooled.assign(static_cast<std::size_t>(n), false);

  auto [shrink, sigma_bar] =
      shrinkage_and_conditional_cov(estimates.sigma_eps, estimates.sigma_u, j_eff);
  law.shrinkage = std::move(shrink);
  law.sigma_bar = std::move(sigma_bar);

  if (estimates.sigma_u.norm() == 0.0) {
    law.means = observed;  // exact conditioning, no round trip through S
    return law;
  }

  for (int i = 0; i < n; ++i) {
    const int label = partition[static_cast<std::size_t>(i)];
    Vector mean = group_mean.at(label);
    if (groups.at(label).size() == 1) {
      mean = pooled_group_mean(mean, big_means).first;
      law.pooled[static_cast<std::size_t>(i)] = true;
    }
    law.means.row(i) =
        (mean + law.shrinkage * (observed.row(i).transpose() - mean)).transpose();
  }
  return law;
}

Matrix simulate_pseudo(const FunctionalDataset& data, const std::vector<int>& partition,
                       const CovarianceEstimates& estimates, std::uint64_t seed,
                       CorrectionMode mode, int threads) {
  ConditionalLaw law = compute_conditional_law(data, partition, estimates, mode);
  const int n = data.n_subjects();
  const int m = data.grid_size();

  // Symmetric square root; Sigma_bar may be singular, so Cholesky is out.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(law.sigma_bar);
  Vector values = eig.eigenvalues();
  for (Eigen::Index k = 0; k < values.size(); ++k) values(k) = std::sqrt(std::max(values(k), 0.0));
  const Matrix root = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();

  Matrix pseudo(n, m);
  auto draw_one = [&](int i) {
    RandomStream stream(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Vector z(m);
    for (int k = 0; k < m; ++k) z(k) = stream.normal();
    pseudo.row(i) = (law.means.row(i).transpose() + root * z).transpose();
  };

#ifdef CURVEFUSE_HAVE_OPENMP
  if (threads > 1) {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int i = 0; i < n; ++i) draw_one(i);
    return pseudo;
  }
#endif
  for (int i = 0; i < n; ++i) draw_one(i);
  return pseudo;
}

}  // namespace curvefuse
