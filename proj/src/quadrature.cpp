#include "nsmf/quadrature.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace nsmf {

namespace {

struct Rule1d {
  std::array<double, 3> x{};
  std::array<double, 3> w{};
};

Rule1d gauss_1d(int n) {
  switch (n) {
    case 1: return {{0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return {{-a, a, 0.0}, {1.0, 1.0, 0.0}};
    }
    case 3: {
      const double a = std::sqrt(0.6);
      return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    default: throw std::invalid_argument("unsupported Gauss order " + std::to_string(n));
  }
}

}  // namespace

QuadratureRule gauss_rule(int dim, int points_per_axis) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("unsupported quadrature dimension " + std::to_string(dim));
  const Rule1d r = gauss_1d(points_per_axis);
  const int n = points_per_axis;
  const int nz = dim == 3 ? n : 1;
  const int ny = dim >= 2 ? n : 1;

  QuadratureRule rule;
  rule.dim = dim;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < n; ++i) {
        Point p{r.x[static_cast<std::size_t>(i)], 0.0, 0.0};
        double w = r.w[static_cast<std::size_t>(i)];
        if (dim >= 2) {
          p[1] = r.x[static_cast<std::size_t>(j)];
          w *= r.w[static_cast<std::size_t>(j)];
        }
        if (dim == 3) {
          p[2] = r.x[static_cast<std::size_t>(k)];
          w *= r.w[static_cast<std::size_t>(k)];
        }
        rule.points.push_back(p);
        rule.weights.push_back(w);
      }
    }
  }
  return rule;
}

}  // namespace nsmf
