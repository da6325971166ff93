#include <doctest.h>

#include "curvefuse/kernels.hpp"
#include "curvefuse/rng.hpp"

using namespace curvefuse;
namespace kernels = curvefuse::kernels;

namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  RandomStream stream(seed);
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = stream.normal();
  return out;
}

}  // namespace

TEST_CASE("pair index enumerates lexicographic pairs") {
  kernels::PairIndex pairs(5);
  CHECK(pairs.count() == 10);
  int p = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j, ++p) {
      CHECK(pairs.pairs[static_cast<std::size_t>(p)] == std::make_pair(i, j));
      CHECK(pairs.position(i, j) == p);
    }
}

TEST_CASE("pair prox/dual step: OpenMP matches the serial reference bitwise") {
  const int n = 17, jn = 4;
  kernels::PairIndex pairs(n);
  Matrix beta = random_matrix(n, jn, 1);
  Matrix delta0 = random_matrix(pairs.count(), jn, 2);
  Matrix dual0 = random_matrix(pairs.count(), jn, 3);

  Matrix delta_ref = delta0, dual_ref = dual0;
  double resid_ref =
      kernels::pair_prox_dual_step_serial(beta, pairs, 0.7, 3.0, 1.3, delta_ref, dual_ref);

  for (int threads : {2, 4, 8}) {
    Matrix delta = delta0, dual = dual0;
    double resid = kernels::pair_prox_dual_step(beta, pairs, 0.7, 3.0, 1.3, delta, dual, threads);
    CHECK(resid == resid_ref);
    CHECK((delta - delta_ref).norm() == 0.0);
    CHECK((dual - dual_ref).norm() == 0.0);
  }
}

TEST_CASE("pair coupling rhs: OpenMP matches the serial reference bitwise") {
  const int n = 23, jn = 5;
  kernels::PairIndex pairs(n);
  Matrix c = random_matrix(pairs.count(), jn, 4);

  Matrix ref(n, jn);
  kernels::pair_coupling_rhs_serial(c, pairs, ref);

  // Independent route: accumulate pair contributions in pair order.
  Matrix direct = Matrix::Zero(n, jn);
  for (int p = 0; p < pairs.count(); ++p) {
    auto [i, j] = pairs.pairs[static_cast<std::size_t>(p)];
    direct.row(i) += c.row(p);
    direct.row(j) -= c.row(p);
  }
  CHECK((ref - direct).norm() < 1e-12);

  for (int threads : {2, 4, 8}) {
    Matrix out(n, jn);
    kernels::pair_coupling_rhs(c, pairs, out, threads);
    CHECK((out - ref).norm() == 0.0);
  }
}

TEST_CASE("gram kernel matches Eigen and its own serial reference") {
  Matrix x = random_matrix(64, 9, 5);
  Matrix ref = kernels::gram_serial(x);
  CHECK((ref - x.transpose() * x).norm() < 1e-10);
  CHECK((ref - ref.transpose()).norm() == 0.0);

  for (int threads : {2, 4, 8}) {
    Matrix par = kernels::gram(x, threads);
    CHECK((par - ref).norm() == 0.0);
  }
}
