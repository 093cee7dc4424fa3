#pragma once

#include <vector>

#include "nsmf/mesh.hpp"

namespace nsmf {

/// Tensor-product Gauss-Legendre rule on the reference cube [-1,1]^dim.
/// Unused trailing coordinates of each point are zero.
struct QuadratureRule {
  int dim = 1;
  std::vector<Point> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

/// Exact for polynomials of degree 2*points_per_axis - 1 in each variable.
/// Supports dim in {1,2,3} and points_per_axis in {1,2,3}.
QuadratureRule gauss_rule(int dim, int points_per_axis);

}  // namespace nsmf
