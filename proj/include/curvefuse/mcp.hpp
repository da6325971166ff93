#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace curvefuse {

// Minimax concave penalty at ||.||_2 = norm:
//   rho(t) = lambda*t - t^2/(2*gamma)   for t <  gamma*lambda
//          = gamma*lambda^2/2           for t >= gamma*lambda
inline double mcp_penalty(double norm, double lambda, double gamma) {
  if (gamma <= 1.0) throw std::invalid_argument("mcp gamma must exceed 1");
  if (lambda < 0.0) throw std::invalid_argument("mcp lambda must be nonnegative");
  if (norm < gamma * lambda) return lambda * norm - norm * norm / (2.0 * gamma);
  return gamma * lambda * lambda / 2.0;
}

// Group-MCP proximal step used by the slack update. Identity beyond the MCP
// flat point, scaled soft-thresholding inside. Requires gamma*theta > 1.
template <typename Derived>
typename Derived::PlainObject mcp_threshold(const Eigen::MatrixBase<Derived>& z, double lambda,
                                            double gamma, double theta) {
  if (gamma * theta <= 1.0) throw std::invalid_argument("mcp threshold needs gamma*theta > 1");
  using Plain = typename Derived::PlainObject;
  const double norm = z.norm();
  if (norm > gamma * lambda) return z;
  const double shrunk = norm - lambda / theta;
  if (shrunk <= 0.0) return Plain::Zero(z.rows(), z.cols());
  return Plain((shrunk / norm / (1.0 - 1.0 / (gamma * theta))) * z);
}

}  // namespace curvefuse
