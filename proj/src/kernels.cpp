#include "curvefuse/kernels.hpp"

#include <stdexcept>

#include "curvefuse/mcp.hpp"

#ifdef CURVEFUSE_HAVE_OPENMP
#include <omp.h>
#endif

namespace curvefuse::kernels {

PairIndex::PairIndex(int n_subjects) : n(n_subjects) {
  if (n < 1) throw std::invalid_argument("pair index needs at least one subject");
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
}

namespace {

inline double pair_update_one(const Matrix& beta, const std::pair<int, int>& ij, double lambda2,
                              double gamma, double theta, Matrix& delta, Matrix& v, int p) {
  const auto [i, j] = ij;
  const Eigen::RowVectorXd diff = beta.row(i) - beta.row(j);
  const Eigen::RowVectorXd z = diff + v.row(p) / theta;
  delta.row(p) = mcp_threshold(z, lambda2, gamma, theta);
  const Eigen::RowVectorXd resid = diff - delta.row(p);
  v.row(p) += theta * resid;
  return resid.norm();
}

inline void coupling_one(const Matrix& c, const PairIndex& pairs, Matrix& out, int i) {
  out.row(i).setZero();
  for (int j = 0; j < pairs.n; ++j) {
    if (j == i) continue;
    if (j > i)
      out.row(i) += c.row(pairs.position(i, j));
    else
      out.row(i) -= c.row(pairs.position(j, i));
  }
}

inline double gram_entry(const Matrix& x, int a, int b) {
  double acc = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) acc += x(r, a) * x(r, b);
  return acc;
}

}  // namespace

double pair_prox_dual_step_serial(const Matrix& beta, const PairIndex& pairs, double lambda2,
                                  double gamma, double theta, Matrix& delta, Matrix& v) {
  double worst = 0.0;
  for (int p = 0; p < pairs.count(); ++p) {
    double r = pair_update_one(beta, pairs.pairs[static_cast<std::size_t>(p)], lambda2, gamma,
                               theta, delta, v, p);
    if (r > worst) worst = r;
  }
  return worst;
}

double pair_prox_dual_step(const Matrix& beta, const PairIndex& pairs, double lambda2,
                           double gamma, double theta, Matrix& delta, Matrix& v, int threads) {
#ifdef CURVEFUSE_HAVE_OPENMP
  if (threads > 1) {
    double worst = 0.0;
#pragma omp parallel for num_threads(threads) schedule(static) reduction(max : worst)
    for (int p = 0; p < pairs.count(); ++p) {
      double r = pair_update_one(beta, pairs.pairs[static_cast<std::size_t>(p)], lambda2, gamma,
                                 theta, delta, v, p);
      if (r > worst) worst = r;
    }
    return worst;
  }
#endif
  (void)threads;
  return pair_prox_dual_step_serial(beta, pairs, lambda2, gamma, theta, delta, v);
}

void pair_coupling_rhs_serial(const Matrix& c, const PairIndex& pairs, Matrix& out) {
  for (int i = 0; i < pairs.n; ++i) coupling_one(c, pairs, out, i);
}

void pair_coupling_rhs(const Matrix& c, const PairIndex& pairs, Matrix& out, int threads) {
#ifdef CURVEFUSE_HAVE_OPENMP
  if (threads > 1) {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int i = 0; i < pairs.n; ++i) coupling_one(c, pairs, out, i);
    return;
  }
#endif
  (void)threads;
  pair_coupling_rhs_serial(c, pairs, out);
}

Matrix gram_serial(const Matrix& x) {
  const int m = static_cast<int>(x.cols());
  Matrix out(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      double acc = gram_entry(x, a, b);
      out(a, b) = acc;
      out(b, a) = acc;
    }
  return out;
}

Matrix gram(const Matrix& x, int threads) {
#ifdef CURVEFUSE_HAVE_OPENMP
  if (threads > 1) {
    const int m = static_cast<int>(x.cols());
    Matrix out(m, m);
    const int entries = m * (m + 1) / 2;
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int e = 0; e < entries; ++e) {
      // Unflatten the upper-triangle index.
      int a = 0;
      int rem = e;
      while (rem >= m - a) {
        rem -= m - a;
        ++a;
      }
      int b = a + rem;
      double acc = gram_entry(x, a, b);
      out(a, b) = acc;
      out(b, a) = acc;
    }
    return out;
  }
#endif
  (void)threads;
  return gram_serial(x);
}

}  // namespace curvefuse::kernels
