#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace curvefuse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Common observation grid, rescaled to [0,1].
struct TimeGrid {
  std::vector<double> points;

  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> pts) : points(std::move(pts)) {}

  int size() const { return static_cast<int>(points.size()); }
  double operator[](int i) const { return points[static_cast<std::size_t>(i)]; }

  // Throws std::invalid_argument unless points are in [0,1], strictly
  // increasing, and there are at least two of them.
  void validate() const;

  static TimeGrid equally_spaced(int m);
};

struct SplineConfig {
  int degree = 3;          // 0 = step, 1 = linear, 3 = cubic
  int interior_knots = 1;  // equally spaced inside (0,1)
  int penalty_order = 2;   // d in the difference penalty

  int basis_dimension() const { return degree + 1 + interior_knots; }
  void validate() const;
};

// B-spline basis evaluated on a grid plus the d-th order difference penalty.
// The knot vector is clamped (open) on [0,1], so the basis spans constants and
// interpolates the endpoints.
struct SplineDesign {
  Matrix basis;    // m x Jn, rows sum to 1
  Matrix delta;    // (Jn - d) x Jn, d-th forward differences
  Matrix penalty;  // Jn x Jn, delta^T delta
  bool underdetermined = false;  // m < Jn: fitting is rank-deficient

  int dimension() const { return static_cast<int>(basis.cols()); }
  int grid_size() const { return static_cast<int>(basis.rows()); }
};

// Values of all Jn basis functions at t (clamped knot vector on [0,1]).
Vector evaluate_basis(double t, const SplineConfig& config);

SplineDesign build_design(const TimeGrid& grid, const SplineConfig& config);

// (Delta_d, D_d) with Delta_d the d-th order forward-difference operator.
// Throws if d >= Jn.
std::pair<Matrix, Matrix> difference_penalty(int basis_dimension, int order);

}  // namespace curvefuse
