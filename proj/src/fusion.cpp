#include "curvefuse/fusion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "curvefuse/kernels.hpp"

namespace curvefuse {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void CurveSet::validate() const {
  if (subjects.empty()) throw std::invalid_argument("curve set is empty");
  for (const auto& s : subjects) {
    s.grid.validate();
    if (s.values.size() != s.grid.size())
      throw std::invalid_argument("curve '" + s.id + "': values and grid lengths differ");
  }
}

long long CurveSet::total_observations() const {
  long long total = 0;
  for (const auto& s : subjects) total += s.values.size();
  return total;
}

FusionConfig::FusionConfig()
    : lambda1_grid(log_grid(1e-4, 1e2, 25)), lambda2_grid(log_grid(1e-2, 1e1, 30)) {}

void FusionConfig::validate() const {
  if (lambda1_grid.empty() || lambda2_grid.empty())
    throw std::invalid_argument("tuning grids must be nonempty");
  for (double l : lambda1_grid)
    if (l < 0.0) throw std::invalid_argument("lambda1 candidates must be nonnegative");
  for (double l : lambda2_grid)
    if (l < 0.0) throw std::invalid_argument("lambda2 candidates must be nonnegative");
  if (!std::is_sorted(lambda1_grid.begin(), lambda1_grid.end()) ||
      !std::is_sorted(lambda2_grid.begin(), lambda2_grid.end()))
    throw std::invalid_argument("tuning grids must be sorted ascending");
  if (mcp_gamma <= 1.0) throw std::invalid_argument("mcp gamma must exceed 1");
  if (admm_theta <= 0.0) throw std::invalid_argument("theta must be positive");
  if (mcp_gamma * admm_theta <= 1.0)
    throw std::invalid_argument("gamma*theta must exceed 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (primal_tolerance <= 0.0) throw std::invalid_argument("primal tolerance must be positive");
  if (fuse_tolerance < 0.0) throw std::invalid_argument("fuse tolerance must be nonnegative");
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (count < 1 || lo <= 0.0 || hi < lo) throw std::invalid_argument("bad log grid spec");
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int k = 0; k < count; ++k)
    grid[static_cast<std::size_t>(k)] = std::exp(std::log(lo) + k * step);
  return grid;
}

std::vector<SplineDesign> build_designs(const CurveSet& curves, const SplineConfig& config) {
  curves.validate();
  std::vector<SplineDesign> designs;
  designs.reserve(curves.subjects.size());
  for (const auto& s : curves.subjects) designs.push_back(build_design(s.grid, config));
  return designs;
}

double objective(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                 const Matrix& beta, double lambda1, double lambda2, double gamma) {
  const int n = curves.size();
  if (static_cast<int>(designs.size()) != n || beta.rows() != n)
    throw std::invalid_argument("objective: size mismatch between curves, designs, beta");

  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& d = designs[static_cast<std::size_t>(i)];
    if (d.basis.cols() != beta.cols() || d.basis.rows() != curves.subjects[static_cast<std::size_t>(i)].values.size())
      throw std::invalid_argument("objective: design dimensions inconsistent");
    const Vector b = beta.row(i).transpose();
    const Vector resid = curves.subjects[static_cast<std::size_t>(i)].values - d.basis * b;
    value += 0.5 * (resid.squaredNorm() + lambda1 * b.dot(d.penalty * b));
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      value += mcp_penalty((beta.row(i) - beta.row(j)).norm(), lambda2, gamma);
  return value;
}

namespace {

// Per-(curves, designs, lambda1) workspace for the exact coupled beta solve.
//
// Stationarity of the beta-step gives, with G_i = B_i^T B_i + lambda1*D +
// theta*n*I and s = sum_j beta_j,
//   G_i beta_i - theta * s = B_i^T y_i + theta * d_i,
// so beta_i = G_i^{-1}(r_i + theta*s) and s solves the Jn x Jn system
//   (I - theta * sum_i G_i^{-1}) s = sum_i G_i^{-1} r_i.
struct BetaStepSolver {
  int n = 0;
  int jn = 0;
  double theta = 0.0;
  std::vector<Eigen::LLT<Matrix>> factors;  // G_i
  std::vector<Vector> bty;                  // B_i^T y_i
  Eigen::PartialPivLU<Matrix> coupling;     // I - theta * sum G_i^{-1}

  BetaStepSolver(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                 double lambda1, double theta_in) {
    n = curves.size();
    jn = designs.front().dimension();
    theta = theta_in;

    Matrix ginv_sum = Matrix::Zero(jn, jn);
    factors.reserve(static_cast<std::size_t>(n));
    bty.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& d = designs[static_cast<std::size_t>(i)];
      Matrix g = d.basis.transpose() * d.basis + lambda1 * d.penalty;
      g.diagonal().array() += theta * n;
      factors.emplace_back(g);
      if (factors.back().info() != Eigen::Success)
        throw std::runtime_error("beta-step system not positive definite");
      ginv_sum += factors.back().solve(Matrix::Identity(jn, jn));
      bty.push_back(d.basis.transpose() * curves.subjects[static_cast<std::size_t>(i)].values);
    }

    Matrix coupling_matrix = Matrix::Identity(jn, jn) - theta * ginv_sum;
    coupling.compute(coupling_matrix);
    // Rank check: the coupling matrix is singular iff every B_i^T B_i +
    // lambda1*D is singular (pure shift invariance).
    Matrix probe = coupling.solve(Matrix::Identity(jn, jn));
    double residual = (coupling_matrix * probe - Matrix::Identity(jn, jn)).norm();
    if (!std::isfinite(residual) || residual > 1e-6)
      throw std::runtime_error(
          "singular beta-step system: basis Gram plus penalty is rank-deficient for every "
          "subject (residual " +
          std::to_string(residual) + "); increase lambda1 or enrich the grid");
  }

  // rhs rows hold r_i = B_i^T y_i + theta * d_i; result rows are beta_i.
  void solve(const Matrix& coupling_rhs, Matrix& beta) const {
    Matrix h(n, jn);
    for (int i = 0; i < n; ++i) {
      Vector r = bty[static_cast<std::size_t>(i)] +
                 theta * coupling_rhs.row(i).transpose();
      h.row(i) = factors[static_cast<std::size_t>(i)].solve(r).transpose();
    }
    Vector s = coupling.solve(h.colwise().sum().transpose());
    for (int i = 0; i < n; ++i)
      beta.row(i) =
          h.row(i) + theta * factors[static_cast<std::size_t>(i)].solve(s).transpose();
  }
};

Vector ridge_fit(const SplineDesign& design, const Vector& y, double lambda1) {
  Matrix a = design.basis.transpose() * design.basis + lambda1 * design.penalty;
  Eigen::LDLT<Matrix> ldlt(a);
  Vector b = ldlt.solve(design.basis.transpose() * y);
  double rel = (a * b - design.basis.transpose() * y).norm() /
               std::max(1e-300, (design.basis.transpose() * y).norm());
  if (!std::isfinite(rel) || rel > 1e-6)
    throw std::runtime_error(
        "singular per-subject ridge system; lambda1 = 0 with a rank-deficient basis");
  return b;
}

double effective_df(const SplineDesign& design, double lambda1) {
  // tr{B (B^T B + lambda1 D)^-1 B^T} = tr{(B^T B + lambda1 D)^-1 B^T B}
  Matrix a = design.basis.transpose() * design.basis + lambda1 * design.penalty;
  Eigen::LDLT<Matrix> ldlt(a);
  Matrix sol = ldlt.solve(design.basis.transpose() * design.basis);
  return sol.trace();
}

}  // namespace

std::vector<int> extract_clusters(const Matrix& delta, int n_subjects, double fuse_tolerance) {
  kernels::PairIndex pairs(n_subjects);
  std::vector<int> parent(static_cast<std::size_t>(n_subjects));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  for (int p = 0; p < pairs.count(); ++p) {
    if (delta.row(p).norm() <= fuse_tolerance) {
      auto [i, j] = pairs.pairs[static_cast<std::size_t>(p)];
      int ri = find(i), rj = find(j);
      if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(n_subjects), -1);
  int next = 0;
  for (int i = 0; i < n_subjects; ++i) {
    int root = find(i);
    if (labels[static_cast<std::size_t>(root)] == -1) labels[static_cast<std::size_t>(root)] = next++;
    labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(root)];
  }
  return labels;
}

FusionFit fit_fixed(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                    double lambda1, double lambda2, const FusionConfig& config,
                    const FusionState* warm_start, FusionState* final_state) {
  curves.validate();
  config.validate();
  const int n = curves.size();
  if (static_cast<int>(designs.size()) != n)
    throw std::invalid_argument("fit_fixed: one design per subject required");
  const int jn = designs.front().dimension();
  for (const auto& d : designs)
    if (d.dimension() != jn)
      throw std::invalid_argument("fit_fixed: all designs must share the basis dimension");

  kernels::PairIndex pairs(n);
  const int npairs = pairs.count();
  const double theta = config.admm_theta;
  const double gamma = config.mcp_gamma;

  BetaStepSolver solver(curves, designs, lambda1, theta);

  Matrix beta(n, jn), delta(std::max(npairs, 1), jn), dual(std::max(npairs, 1), jn);
  if (warm_start) {
    beta = warm_start->beta;
    delta = warm_start->delta;
    dual = warm_start->dual;
  } else {
    for (int i = 0; i < n; ++i)
      beta.row(i) = ridge_fit(designs[static_cast<std::size_t>(i)],
                              curves.subjects[static_cast<std::size_t>(i)].values, lambda1)
                        .transpose();
    for (int p = 0; p < npairs; ++p) {
      auto [i, j] = pairs.pairs[static_cast<std::size_t>(p)];
      delta.row(p) = beta.row(i) - beta.row(j);
    }
    dual.setZero();
  }

  FusionFit fit;
  fit.lambda1 = lambda1;
  fit.lambda2 = lambda2;
  fit.objective_trace.reserve(static_cast<std::size_t>(config.max_iterations));
  fit.primal_residual_trace.reserve(static_cast<std::size_t>(config.max_iterations));

  Matrix coupling_c(std::max(npairs, 1), jn);
  Matrix coupling_rhs(n, jn);

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    if (npairs > 0) {
      coupling_c = delta - dual / theta;
      kernels::pair_coupling_rhs(coupling_c, pairs, coupling_rhs, config.threads);
    } else {
      coupling_rhs.setZero();
    }
    solver.solve(coupling_rhs, beta);

    double residual = 0.0;
    if (npairs > 0)
      residual = kernels::pair_prox_dual_step(beta, pairs, lambda2, gamma, theta, delta, dual,
                                              config.threads);

    fit.objective_trace.push_back(objective(curves, designs, beta, lambda1, lambda2, gamma));
    fit.primal_residual_trace.push_back(residual);
    if (residual <= config.primal_tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged)
    fit.warnings.push_back("fit_fixed hit max_iterations before the primal tolerance");

  if (final_state) {
    final_state->beta = beta;
    final_state->delta = delta;
    final_state->dual = dual;
  }

  fit.partition = (npairs > 0) ? extract_clusters(delta, n, config.fuse_tolerance)
                               : std::vector<int>(1, 0);
  fit.k_hat = fit.partition.empty()
                  ? 0
                  : 1 + *std::max_element(fit.partition.begin(), fit.partition.end());

  // Refit convention: fused components share the average of their members.
  Matrix averaged = Matrix::Zero(fit.k_hat, jn);
  std::vector<int> counts(static_cast<std::size_t>(fit.k_hat), 0);
  for (int i = 0; i < n; ++i) {
    averaged.row(fit.partition[static_cast<std::size_t>(i)]) += beta.row(i);
    counts[static_cast<std::size_t>(fit.partition[static_cast<std::size_t>(i)])]++;
  }
  for (int k = 0; k < fit.k_hat; ++k) averaged.row(k) /= counts[static_cast<std::size_t>(k)];
  for (int i = 0; i < n; ++i) beta.row(i) = averaged.row(fit.partition[static_cast<std::size_t>(i)]);
  fit.beta = beta;

  fit.df_per_subject.resize(n);
  fit.rss_per_subject.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& d = designs[static_cast<std::size_t>(i)];
    fit.df_per_subject(i) = effective_df(d, lambda1);
    fit.rss_per_subject(i) =
        (curves.subjects[static_cast<std::size_t>(i)].values - d.basis * beta.row(i).transpose())
            .squaredNorm();
  }
  return fit;
}

double bic_lambda1(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                   double lambda1) {
  curves.validate();
  if (lambda1 < 0.0) throw std::invalid_argument("lambda1 must be nonnegative");
  const int n = curves.size();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& d = designs[static_cast<std::size_t>(i)];
    const Vector& y = curves.subjects[static_cast<std::size_t>(i)].values;
    const double ni = static_cast<double>(y.size());
    Vector b = ridge_fit(d, y, lambda1);
    const double rss = (y - d.basis * b).squaredNorm();
    if (rss <= 0.0) return kNegInf;
    total += std::log(rss / ni) + std::log(ni) / ni * effective_df(d, lambda1);
  }
  return total;
}

double bic_lambda2(const CurveSet& curves, const FusionFit& fit) {
  const long long total_obs = curves.total_observations();
  if (total_obs <= 0) throw std::invalid_argument("bic_lambda2: no observations");
  const double n_total = static_cast<double>(total_obs);
  const double rss = fit.rss_per_subject.sum();
  if (rss <= 0.0) return kNegInf;
  const double df =
      static_cast<double>(fit.k_hat) / static_cast<double>(curves.size()) * fit.df_per_subject.sum();
  return std::log(rss / n_total) + std::log(n_total) * df / n_total;
}

FusionFit select_and_fit(const CurveSet& curves, const std::vector<SplineDesign>& designs,
                         const FusionConfig& config) {
  curves.validate();
  config.validate();

  // Step 1: lambda1 with the fusion penalty off. Ascending scan with strict
  // improvement keeps the smallest candidate on ties; a -inf (interpolating)
  // candidate wins at the smallest such lambda1.
  double best_lambda1 = config.lambda1_grid.front();
  double best_bic1 = std::numeric_limits<double>::infinity();
  bool degenerate = false;
  for (double l1 : config.lambda1_grid) {
    double value = bic_lambda1(curves, designs, l1);
    if (value < best_bic1) {
      best_bic1 = value;
      best_lambda1 = l1;
      if (value == kNegInf) {
        degenerate = true;
        break;  // smaller lambda1 candidates were already scanned
      }
    }
  }

  // Step 2: lambda2 path at the selected lambda1, warm-started ascending.
  FusionState state;
  bool have_state = false;
  std::optional<FusionFit> best;
  double best_bic2 = std::numeric_limits<double>::infinity();
  std::vector<FusionFit::PathEntry> path;
  path.reserve(config.lambda2_grid.size());

  for (double l2 : config.lambda2_grid) {
    FusionFit fit = fit_fixed(curves, designs, best_lambda1, l2, config,
                              (config.warm_start_path && have_state) ? &state : nullptr, &state);
    have_state = true;
    const double value = bic_lambda2(curves, fit);
    path.push_back({l2, value, fit.k_hat,
                    static_cast<int>(fit.primal_residual_trace.size()), fit.converged});
    if (value < best_bic2) {
      best_bic2 = value;
      fit.bic2 = value;
      best = std::move(fit);
    }
  }

  best->bic1 = best_bic1;
  best->lambda2_path = std::move(path);
  if (degenerate)
    best->warnings.push_back(
        "bic_lambda1 hit an exact-interpolation candidate; smallest such lambda1 used");
  return *best;
}

}  // namespace curvefuse
