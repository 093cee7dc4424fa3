#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "nsmf/assembly.hpp"
#include "nsmf/fem.hpp"
#include "nsmf/quadrature.hpp"
#include "test_support.hpp"

using namespace nsmf;
using nsmf::testing::fd_jacobian_error;

namespace {

// Perturbed rectangle, nodes in tensor order (x fastest).
std::array<Point, 9> random_quad9(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double hx = 0.5 + 0.5 * std::abs(u(rng)), hy = 0.5 + 0.5 * std::abs(u(rng));
  const double x0 = 3.0 * u(rng), y0 = 3.0 * u(rng);
  std::array<Point, 9> c{};
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) {
      c[static_cast<std::size_t>(3 * b + a)] = {x0 + 0.5 * hx * a + 0.05 * hx * u(rng),
                                                y0 + 0.5 * hy * b + 0.05 * hy * u(rng), 0.0};
    }
  }
  return c;
}

std::array<Point, 8> random_hex(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h[3] = {0.5 + 0.5 * std::abs(u(rng)), 0.5 + 0.5 * std::abs(u(rng)), 0.5 + 0.5 * std::abs(u(rng))};
  std::array<Point, 8> c{};
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        c[static_cast<std::size_t>(4 * k + 2 * j + i)] = {h[0] * i + 0.08 * h[0] * u(rng), h[1] * j + 0.08 * h[1] * u(rng),
                                                          h[2] * k + 0.08 * h[2] * u(rng)};
      }
    }
  }
  return c;
}

template <std::size_t N>
std::array<double, N> random_state(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::array<double, N> s{};
  for (auto& v : s) v = u(rng);
  return s;
}

}  // namespace

TEST(Quadrature, Midpoint) {
  const QuadratureRule r = gauss_rule(1, 1);
  ASSERT_EQ(r.size(), 1U);
  EXPECT_EQ(r.points[0][0], 0.0);
  EXPECT_EQ(r.weights[0], 2.0);
}

TEST(Quadrature, TwoByTwo) {
  const QuadratureRule r = gauss_rule(2, 2);
  ASSERT_EQ(r.size(), 4U);
  for (std::size_t q = 0; q < 4; ++q) {
    EXPECT_NEAR(std::abs(r.points[q][0]), 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(std::abs(r.points[q][1]), 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_DOUBLE_EQ(r.weights[q], 1.0);
  }
}

TEST(Quadrature, ThreePointQuarticProduct) {
  const QuadratureRule r = gauss_rule(2, 3);
  double s = 0.0;
  for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q][0], 4) * std::pow(r.points[q][1], 4);
  EXPECT_NEAR(s, 4.0 / 25.0, 1e-14);
}

TEST(Quadrature, MonomialExactness) {
  auto exact_1d = [](int k) { return k % 2 == 1 ? 0.0 : 2.0 / (k + 1); };
  for (int dim = 1; dim <= 3; ++dim) {
    for (int n = 1; n <= 3; ++n) {
      const QuadratureRule r = gauss_rule(dim, n);
      double wsum = 0.0;
      for (double w : r.weights) wsum += w;
      EXPECT_NEAR(wsum, std::pow(2.0, dim), 1e-14);
      const int deg = 2 * n - 1;
      for (int a = 0; a <= deg; ++a) {
        for (int b = 0; b <= (dim > 1 ? deg : 0); ++b) {
          for (int c = 0; c <= (dim > 2 ? deg : 0); ++c) {
            double s = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q) {
              s += r.weights[q] * std::pow(r.points[q][0], a) * std::pow(r.points[q][1], b) * std::pow(r.points[q][2], c);
            }
            const double expect = exact_1d(a) * (dim > 1 ? exact_1d(b) : 1.0) * (dim > 2 ? exact_1d(c) : 1.0);
            EXPECT_NEAR(s, expect, 1e-13) << dim << "d n=" << n << " x^" << a << " y^" << b << " z^" << c;
          }
        }
      }
    }
  }
}

TEST(Quadrature, UnsupportedOrderThrows) {
  EXPECT_THROW(gauss_rule(2, 4), std::invalid_argument);
  EXPECT_THROW(gauss_rule(4, 2), std::invalid_argument);
  EXPECT_THROW(gauss_rule(1, 0), std::invalid_argument);
}

TEST(FlowParams, Validation) {
  FlowParams p;
  p.reynolds = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.reynolds = 10.0;
  p.formulation = Formulation::Penalty3D;
  p.penalty = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Element2d, ZeroStateGivesZeroResidual) {
  std::mt19937_64 rng(1);
  const auto c = random_quad9(rng);
  const std::array<double, kDofs2d> zero{};
  const ElementSystem s = element_system_2d(c, zero, FlowParams{});
  for (double r : s.residual) EXPECT_EQ(r, 0.0);
}

TEST(Element2d, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (double re : {1.0, 100.0}) {
    FlowParams p;
    p.reynolds = re;
    for (int trial = 0; trial < 10; ++trial) {
      const auto c = random_quad9(rng);
      const auto x = random_state<kDofs2d>(rng);
      const ElementSystem s = element_system_2d(c, x, p);
      const double err = fd_jacobian_error(
          [&](const std::vector<double>& y) {
            return element_residual_2d(c, std::span<const double, kDofs2d>(y.data(), kDofs2d), p);
          },
          std::vector<double>(x.begin(), x.end()), s.jacobian);
      EXPECT_LE(err, 1e-5) << "Re=" << re << " trial " << trial;
    }
  }
}

TEST(Element2d, ResidualOnlyMatchesSystem) {
  std::mt19937_64 rng(3);
  const auto c = random_quad9(rng);
  const auto x = random_state<kDofs2d>(rng);
  EXPECT_EQ(element_residual_2d(c, x, FlowParams{}), element_system_2d(c, x, FlowParams{}).residual);
}

TEST(Element2d, UniformFlowHasZeroContinuityRows) {
  std::array<Point, 9> c{};
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) c[static_cast<std::size_t>(3 * b + a)] = {0.5 * a, 0.5 * b, 0.0};
  }
  std::array<double, kDofs2d> x{};
  for (int a = 0; a < 9; ++a) x[static_cast<std::size_t>(2 * a)] = 1.0;
  const ElementSystem s = element_system_2d(c, x, FlowParams{});
  for (std::size_t k = 18; k < 22; ++k) EXPECT_EQ(s.residual[k], 0.0) << k;
}

TEST(Element2d, TranslationInvariance) {
  std::mt19937_64 rng(4);
  const auto c = random_quad9(rng);
  auto shifted = c;
  for (auto& pt : shifted) {
    pt[0] += 7.25;
    pt[1] -= 3.5;
  }
  const auto x = random_state<kDofs2d>(rng);
  const ElementSystem a = element_system_2d(c, x, FlowParams{});
  const ElementSystem b = element_system_2d(shifted, x, FlowParams{});
  for (std::size_t i = 0; i < a.residual.size(); ++i) EXPECT_NEAR(a.residual[i], b.residual[i], 1e-12);
  for (std::size_t i = 0; i < a.jacobian.size(); ++i) EXPECT_NEAR(a.jacobian[i], b.jacobian[i], 1e-11);
}

TEST(Element2d, DegenerateGeometryThrows) {
  std::array<Point, 9> c{};
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) c[static_cast<std::size_t>(3 * b + a)] = {0.5 * a, 0.0, 0.0};
  }
  const std::array<double, kDofs2d> x{};
  EXPECT_THROW(element_system_2d(c, x, FlowParams{}), std::domain_error);
}

TEST(Element3d, ZeroStateGivesZeroResidual) {
  std::mt19937_64 rng(5);
  const auto c = random_hex(rng);
  const std::array<double, kDofs3d> zero{};
  FlowParams p;
  p.formulation = Formulation::Penalty3D;
  for (double r : element_system_3d(c, zero, p).residual) EXPECT_EQ(r, 0.0);
}

TEST(Element3d, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  FlowParams p;
  p.formulation = Formulation::Penalty3D;
  p.reynolds = 100.0;
  p.penalty = 1e7;
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_hex(rng);
    const auto x = random_state<kDofs3d>(rng);
    const ElementSystem s = element_system_3d(c, x, p);
    const double err = fd_jacobian_error(
        [&](const std::vector<double>& y) {
          return element_residual_3d(c, std::span<const double, kDofs3d>(y.data(), kDofs3d), p);
        },
        std::vector<double>(x.begin(), x.end()), s.jacobian);
    EXPECT_LE(err, 1e-5) << "trial " << trial;
  }
}

TEST(Element3d, PenaltyVanishesForDivergenceFreeField) {
  std::array<Point, 8> c{};
  std::array<double, kDofs3d> x{};
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        const auto a = static_cast<std::size_t>(4 * k + 2 * j + i);
        c[a] = {0.5 * i, 0.25 * j, 0.25 * k};
        x[3 * a] = c[a][1];  // u = y
      }
    }
  }
  for (double r : penalty_residual_3d(c, x, 1e7)) EXPECT_EQ(r, 0.0);
}

TEST(Element3d, PenaltyResidualIsPartOfTheElementResidual) {
  std::mt19937_64 rng(7);
  const auto c = random_hex(rng);
  const auto x = random_state<kDofs3d>(rng);
  FlowParams p;
  p.formulation = Formulation::Penalty3D;
  p.penalty = 1e3;
  FlowParams q = p;
  q.penalty = 2e3;
  const auto ra = element_residual_3d(c, x, p);
  const auto rb = element_residual_3d(c, x, q);
  const auto pen = penalty_residual_3d(c, x, 1e3);
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_NEAR(rb[i] - ra[i], pen[i], 1e-9 * (1.0 + std::abs(pen[i])));
}

TEST(PressureRecovery, LinearFieldsOnAMesh) {
  const Mesh mesh = build_channel_mesh_3d(3, 2, 2, {});
  const DofMap dofs = build_dof_map(mesh, Formulation::Penalty3D);
  FlowParams p;
  p.formulation = Formulation::Penalty3D;
  p.penalty = 10.0;
  std::vector<double> state(static_cast<std::size_t>(dofs.n_dofs), 0.0);
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) state[static_cast<std::size_t>(dofs.velocity(v, 0))] = mesh.node_coords[v][0];
  for (double pe : recover_pressure_3d(mesh, dofs, state, p)) EXPECT_NEAR(pe, -10.0, 1e-12);

  // u = y, v = x is divergence free.
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    state[static_cast<std::size_t>(dofs.velocity(v, 0))] = mesh.node_coords[v][1];
    state[static_cast<std::size_t>(dofs.velocity(v, 1))] = mesh.node_coords[v][0];
  }
  for (double pe : recover_pressure_3d(mesh, dofs, state, p)) EXPECT_NEAR(pe, 0.0, 1e-12);
}
