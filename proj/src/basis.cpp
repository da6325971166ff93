#include "curvefuse/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace curvefuse {

void TimeGrid::validate() const {
  if (points.size() < 2)
    throw std::invalid_argument("time grid needs at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] >= 0.0 && points[i] <= 1.0))
      throw std::invalid_argument("time grid point outside [0,1]: " + std::to_string(points[i]));
    if (i > 0 && !(points[i] > points[i - 1]))
      throw std::invalid_argument("time grid points must be strictly increasing");
  }
}

TimeGrid TimeGrid::equally_spaced(int m) {
  if (m < 2) throw std::invalid_argument("time grid needs at least two points");
  std::vector<double> pts(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) pts[static_cast<std::size_t>(i)] = static_cast<double>(i) / (m - 1);
  return TimeGrid(std::move(pts));
}

void SplineConfig::validate() const {
  if (degree < 0) throw std::invalid_argument("spline degree must be >= 0");
  if (interior_knots < 0) throw std::invalid_argument("interior knot count must be >= 0");
  if (penalty_order < 1) throw std::invalid_argument("penalty order must be >= 1");
  if (penalty_order >= basis_dimension())
    throw std::invalid_argument("penalty order exceeds basis dimension");
}

namespace {

// Clamped knot vector on [0,1] with equally spaced interior knots.
std::vector<double> make_knots(const SplineConfig& config) {
  const int p = config.degree;
  const int k = config.interior_knots;
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(2 * (p + 1) + k));
  for (int i = 0; i <= p; ++i) knots.push_back(0.0);
  for (int i = 1; i <= k; ++i) knots.push_back(static_cast<double>(i) / (k + 1));
  for (int i = 0; i <= p; ++i) knots.push_back(1.0);
  return knots;
}

}  // namespace

Vector evaluate_basis(double t, const SplineConfig& config) {
  config.validate();
  const int p = config.degree;
  const int jn = config.basis_dimension();
  const std::vector<double> knots = make_knots(config);

  Vector out = Vector::Zero(jn);

  // Knot span containing t; the last basis function owns t = 1.
  int span = p;
  if (t >= knots[static_cast<std::size_t>(jn)]) {
    span = jn - 1;
  } else {
    while (span < jn - 1 && t >= knots[static_cast<std::size_t>(span + 1)]) ++span;
  }

  // Cox-de Boor triangle for the p+1 basis functions alive on this span.
  std::vector<double> vals(static_cast<std::size_t>(p + 1), 0.0);
  vals[0] = 1.0;
  std::vector<double> left(static_cast<std::size_t>(p + 1));
  std::vector<double> right(static_cast<std::size_t>(p + 1));
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = t - knots[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(span + j)] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      double den = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      double temp = (den != 0.0) ? vals[static_cast<std::size_t>(r)] / den : 0.0;
      vals[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    vals[static_cast<std::size_t>(j)] = saved;
  }

  for (int j = 0; j <= p; ++j) {
    int idx = span - p + j;
    if (idx >= 0 && idx < jn) out(idx) = vals[static_cast<std::size_t>(j)];
  }
  return out;
}

SplineDesign build_design(const TimeGrid& grid, const SplineConfig& config) {
  grid.validate();
  config.validate();

  const int m = grid.size();
  const int jn = config.basis_dimension();

  SplineDesign design;
  design.basis.resize(m, jn);
  for (int i = 0; i < m; ++i) design.basis.row(i) = evaluate_basis(grid[i], config).transpose();

  auto [delta, penalty] = difference_penalty(jn, config.penalty_order);
  design.delta = std::move(delta);
  design.penalty = std::move(penalty);
  design.underdetermined = m < jn;
  return design;
}

std::pair<Matrix, Matrix> difference_penalty(int basis_dimension, int order) {
  if (order < 1) throw std::invalid_argument("penalty order must be >= 1");
  if (order >= basis_dimension)
    throw std::invalid_argument("penalty order exceeds basis dimension");

  const int jn = basis_dimension;
  const int d = order;

  // Row r of Delta_d: signed binomial coefficients of the d-th forward
  // difference starting at position r.
  Matrix delta = Matrix::Zero(jn - d, jn);
  std::vector<double> coef(static_cast<std::size_t>(d + 1));
  coef[0] = 1.0;
  for (int k = 1; k <= d; ++k)
    coef[static_cast<std::size_t>(k)] = coef[static_cast<std::size_t>(k - 1)] * (d - k + 1) / k;
  for (int r = 0; r < jn - d; ++r)
    for (int k = 0; k <= d; ++k)
      delta(r, r + k) = ((d - k) % 2 == 0 ? 1.0 : -1.0) * coef[static_cast<std::size_t>(k)];

  Matrix penalty = delta.transpose() * delta;
  return {std::move(delta), std::move(penalty)};
}

}  // namespace curvefuse
