#include "nsmf/fem.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nsmf/quadrature.hpp"

namespace nsmf {

void FlowParams::validate() const {
  if (!(reynolds > 0.0)) throw std::invalid_argument("Reynolds number must be positive");
  if (formulation == Formulation::Penalty3D && !(penalty > 0.0)) {
    throw std::invalid_argument("penalty parameter must be positive");
  }
}

namespace {

// Reference-element shape data at one point.
template <int Dim, int NV>
struct RefShape {
  std::array<double, NV> N{};
  std::array<std::array<double, Dim>, NV> dN{};  // d/dxi
};

double lagrange2(int a, double s) {
  switch (a) {
    case 0: return 0.5 * s * (s - 1.0);
    case 1: return 1.0 - s * s;
    default: return 0.5 * s * (s + 1.0);
  }
}

double lagrange2_d(int a, double s) {
  switch (a) {
    case 0: return s - 0.5;
    case 1: return -2.0 * s;
    default: return s + 0.5;
  }
}

double lagrange1(int a, double s) { return a == 0 ? 0.5 * (1.0 - s) : 0.5 * (1.0 + s); }
double lagrange1_d(int a, double) { return a == 0 ? -0.5 : 0.5; }

RefShape<2, 9> q2_shape(const Point& xi) {
  RefShape<2, 9> s;
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) {
      const auto n = static_cast<std::size_t>(3 * b + a);
      s.N[n] = lagrange2(a, xi[0]) * lagrange2(b, xi[1]);
      s.dN[n][0] = lagrange2_d(a, xi[0]) * lagrange2(b, xi[1]);
      s.dN[n][1] = lagrange2(a, xi[0]) * lagrange2_d(b, xi[1]);
    }
  }
  return s;
}

std::array<double, 4> q1_2d_values(const Point& xi) {
  std::array<double, 4> v{};
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) v[static_cast<std::size_t>(2 * b + a)] = lagrange1(a, xi[0]) * lagrange1(b, xi[1]);
  }
  return v;
}

RefShape<3, 8> q1_3d_shape(const Point& xi) {
  RefShape<3, 8> s;
  for (int c = 0; c < 2; ++c) {
    for (int b = 0; b < 2; ++b) {
      for (int a = 0; a < 2; ++a) {
        const auto n = static_cast<std::size_t>(4 * c + 2 * b + a);
        const double la = lagrange1(a, xi[0]), lb = lagrange1(b, xi[1]), lc = lagrange1(c, xi[2]);
        s.N[n] = la * lb * lc;
        s.dN[n][0] = lagrange1_d(a, xi[0]) * lb * lc;
        s.dN[n][1] = la * lagrange1_d(b, xi[1]) * lc;
        s.dN[n][2] = la * lb * lagrange1_d(c, xi[2]);
      }
    }
  }
  return s;
}

// Tabulated reference data for one element family and quadrature rule.
template <int Dim, int NV, int NP>
struct Tabulation {
  std::vector<RefShape<Dim, NV>> shape;
  std::vector<std::array<double, (NP > 0 ? NP : 1)>> pressure;
  std::vector<double> weights;
};

const Tabulation<2, 9, 4>& tab_2d() {
  static const Tabulation<2, 9, 4> t = [] {
    Tabulation<2, 9, 4> tab;
    const QuadratureRule rule = gauss_rule(2, 3);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      tab.shape.push_back(q2_shape(rule.points[q]));
      tab.pressure.push_back(q1_2d_values(rule.points[q]));
      tab.weights.push_back(rule.weights[q]);
    }
    return tab;
  }();
  return t;
}

const Tabulation<3, 8, 0>& tab_3d(int points_per_axis) {
  static const auto make = [](int n) {
    Tabulation<3, 8, 0> tab;
    const QuadratureRule rule = gauss_rule(3, n);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      tab.shape.push_back(q1_3d_shape(rule.points[q]));
      tab.pressure.push_back({0.0});
      tab.weights.push_back(rule.weights[q]);
    }
    return tab;
  };
  static const Tabulation<3, 8, 0> full = make(2);
  static const Tabulation<3, 8, 0> reduced = make(1);
  return points_per_axis == 1 ? reduced : full;
}

// Physical gradients and determinant at one point.
template <int Dim, int NV>
struct PhysShape {
  std::array<std::array<double, Dim>, NV> dN{};
  double det = 0.0;
};

template <int Dim, int NV>
PhysShape<Dim, NV> map_to_physical(const RefShape<Dim, NV>& ref, std::span<const Point, NV> coords) {
  double jac[Dim][Dim] = {};
  for (int a = 0; a < NV; ++a) {
    for (int d = 0; d < Dim; ++d) {
      for (int r = 0; r < Dim; ++r) jac[d][r] += coords[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)] * ref.dN[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)];
    }
  }
  double inv[Dim][Dim] = {};
  double det = 0.0;
  if constexpr (Dim == 2) {
    det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    inv[0][0] = jac[1][1] / det;
    inv[0][1] = -jac[0][1] / det;
    inv[1][0] = -jac[1][0] / det;
    inv[1][1] = jac[0][0] / det;
  } else {
    det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
          jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
          jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    inv[0][0] = (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) / det;
    inv[0][1] = (jac[0][2] * jac[2][1] - jac[0][1] * jac[2][2]) / det;
    inv[0][2] = (jac[0][1] * jac[1][2] - jac[0][2] * jac[1][1]) / det;
    inv[1][0] = (jac[1][2] * jac[2][0] - jac[1][0] * jac[2][2]) / det;
    inv[1][1] = (jac[0][0] * jac[2][2] - jac[0][2] * jac[2][0]) / det;
    inv[1][2] = (jac[0][2] * jac[1][0] - jac[0][0] * jac[1][2]) / det;
    inv[2][0] = (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]) / det;
    inv[2][1] = (jac[0][1] * jac[2][0] - jac[0][0] * jac[2][1]) / det;
    inv[2][2] = (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]) / det;
  }
  if (!(det > 0.0) || !std::isfinite(det)) throw std::domain_error("degenerate element geometry");

  PhysShape<Dim, NV> out;
  out.det = det;
  // dN/dx_d = sum_r dN/dxi_r * dxi_r/dx_d, with dxi/dx = inv(jac).
  for (int a = 0; a < NV; ++a) {
    for (int d = 0; d < Dim; ++d) {
      double s = 0.0;
      for (int r = 0; r < Dim; ++r) s += ref.dN[static_cast<std::size_t>(a)][static_cast<std::size_t>(r)] * inv[r][d];
      out.dN[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)] = s;
    }
  }
  // Close the partition of unity exactly so constant fields have zero gradient
  // when summed in node order.
  for (int d = 0; d < Dim; ++d) {
    double s = 0.0;
    for (int a = 0; a + 1 < NV; ++a) s += out.dN[static_cast<std::size_t>(a)][static_cast<std::size_t>(d)];
    out.dN[static_cast<std::size_t>(NV - 1)][static_cast<std::size_t>(d)] = -s;
  }
  return out;
}

// Momentum (convective + viscous [+ pressure]) and continuity contributions
// accumulated over one quadrature rule. NP == 0 means no pressure unknowns.
template <int Dim, int NV, int NP, bool WithJacobian>
void accumulate_flow(const Tabulation<Dim, NV, NP>& tab, std::span<const Point, NV> coords,
                     std::span<const double> state, double inv_re, std::vector<double>& R, std::vector<double>& K) {
  constexpr int nvel = NV * Dim;
  constexpr int ndof = nvel + NP;

  for (std::size_t q = 0; q < tab.weights.size(); ++q) {
    const RefShape<Dim, NV>& ref = tab.shape[q];
    const PhysShape<Dim, NV> phys = map_to_physical<Dim, NV>(ref, coords);
    const double w = tab.weights[q] * phys.det;
    const auto& N = ref.N;
    const auto& dN = phys.dN;

    std::array<double, Dim> U{};
    std::array<std::array<double, Dim>, Dim> G{};  // G[a][b] = du_a/dx_b
    for (int j = 0; j < NV; ++j) {
      for (int a = 0; a < Dim; ++a) {
        const double uj = state[static_cast<std::size_t>(j * Dim + a)];
        U[a] += N[static_cast<std::size_t>(j)] * uj;
        for (int b = 0; b < Dim; ++b) G[a][b] += dN[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)] * uj;
      }
    }
    double div = 0.0;
    for (int a = 0; a < Dim; ++a) div += G[a][a];

    double P = 0.0;
    if constexpr (NP > 0) {
      for (int k = 0; k < NP; ++k) P += tab.pressure[q][static_cast<std::size_t>(k)] * state[static_cast<std::size_t>(nvel + k)];
    }

    // conv_a = d(u_a u_b)/dx_b = (G U)_a + U_a div
    std::array<double, Dim> conv{};
    for (int a = 0; a < Dim; ++a) {
      double s = U[a] * div;
      for (int b = 0; b < Dim; ++b) s += G[a][b] * U[b];
      conv[a] = s;
    }
    std::array<std::array<double, Dim>, Dim> tau{};
    for (int a = 0; a < Dim; ++a) {
      for (int b = 0; b < Dim; ++b) tau[a][b] = inv_re * (G[a][b] + G[b][a]);
    }

    for (int i = 0; i < NV; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      for (int a = 0; a < Dim; ++a) {
        double r = N[ii] * conv[a] - P * dN[ii][static_cast<std::size_t>(a)];
        for (int b = 0; b < Dim; ++b) r += tau[a][b] * dN[ii][static_cast<std::size_t>(b)];
        R[static_cast<std::size_t>(i * Dim + a)] += w * r;
      }
    }
    if constexpr (NP > 0) {
      for (int k = 0; k < NP; ++k) R[static_cast<std::size_t>(nvel + k)] += w * tab.pressure[q][static_cast<std::size_t>(k)] * div;
    }

    if constexpr (WithJacobian) {
      for (int j = 0; j < NV; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        double adv = N[jj] * div;  // grad(phi_j).U + phi_j div
        for (int b = 0; b < Dim; ++b) adv += dN[jj][static_cast<std::size_t>(b)] * U[b];
        for (int i = 0; i < NV; ++i) {
          const auto ii = static_cast<std::size_t>(i);
          double grad_dot = 0.0;
          for (int b = 0; b < Dim; ++b) grad_dot += dN[jj][static_cast<std::size_t>(b)] * dN[ii][static_cast<std::size_t>(b)];
          for (int a = 0; a < Dim; ++a) {
            double* row = &K[static_cast<std::size_t>((i * Dim + a) * ndof + j * Dim)];
            for (int c = 0; c < Dim; ++c) {
              double v = N[ii] * (N[jj] * G[a][c] + U[a] * dN[jj][static_cast<std::size_t>(c)]) +
                         inv_re * dN[jj][static_cast<std::size_t>(a)] * dN[ii][static_cast<std::size_t>(c)];
              if (a == c) v += N[ii] * adv + inv_re * grad_dot;
              row[c] += w * v;
            }
          }
        }
      }
      if constexpr (NP > 0) {
        for (int k = 0; k < NP; ++k) {
          const double psi = tab.pressure[q][static_cast<std::size_t>(k)];
          for (int i = 0; i < NV; ++i) {
            for (int a = 0; a < Dim; ++a) {
              const double g = w * psi * dN[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
              K[static_cast<std::size_t>((i * Dim + a) * ndof + nvel + k)] -= g;
              K[static_cast<std::size_t>((nvel + k) * ndof + i * Dim + a)] += g;
            }
          }
        }
      }
    }
  }
}

// lambda * int div(u) div(v) with the one-point rule.
template <bool WithJacobian>
void accumulate_penalty(std::span<const Point, 8> coords, std::span<const double> state, double penalty,
                        std::vector<double>& R, std::vector<double>& K) {
  const auto& tab = tab_3d(1);
  const PhysShape<3, 8> phys = map_to_physical<3, 8>(tab.shape[0], coords);
  const double w = tab.weights[0] * phys.det * penalty;
  const auto& dN = phys.dN;
  double div = 0.0;
  for (int j = 0; j < 8; ++j) {
    for (int c = 0; c < 3; ++c) div += dN[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] * state[static_cast<std::size_t>(3 * j + c)];
  }
  for (int i = 0; i < 8; ++i) {
    for (int a = 0; a < 3; ++a) R[static_cast<std::size_t>(3 * i + a)] += w * div * dN[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
  }
  if constexpr (WithJacobian) {
    for (int i = 0; i < 8; ++i) {
      for (int a = 0; a < 3; ++a) {
        const double gi = w * dN[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
        double* row = &K[static_cast<std::size_t>((3 * i + a) * kDofs3d)];
        for (int j = 0; j < 8; ++j) {
          for (int c = 0; c < 3; ++c) row[3 * j + c] += gi * dN[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
        }
      }
    }
  }
}

}  // namespace

ElementSystem element_system_2d(std::span<const Point, 9> coords, std::span<const double, kDofs2d> local_state,
                                const FlowParams& params) {
  params.validate();
  ElementSystem sys;
  sys.residual.assign(kDofs2d, 0.0);
  sys.jacobian.assign(kDofs2d * kDofs2d, 0.0);
  accumulate_flow<2, 9, 4, true>(tab_2d(), coords, local_state, 1.0 / params.reynolds, sys.residual, sys.jacobian);
  return sys;
}

std::vector<double> element_residual_2d(std::span<const Point, 9> coords,
                                        std::span<const double, kDofs2d> local_state, const FlowParams& params) {
  params.validate();
  std::vector<double> R(kDofs2d, 0.0);
  std::vector<double> unused;
  accumulate_flow<2, 9, 4, false>(tab_2d(), coords, local_state, 1.0 / params.reynolds, R, unused);
  return R;
}

ElementSystem element_system_3d(std::span<const Point, 8> coords, std::span<const double, kDofs3d> local_state,
                                const FlowParams& params) {
  params.validate();
  ElementSystem sys;
  sys.residual.assign(kDofs3d, 0.0);
  sys.jacobian.assign(kDofs3d * kDofs3d, 0.0);
  accumulate_flow<3, 8, 0, true>(tab_3d(2), coords, local_state, 1.0 / params.reynolds, sys.residual, sys.jacobian);
  accumulate_penalty<true>(coords, local_state, params.penalty, sys.residual, sys.jacobian);
  return sys;
}

std::vector<double> element_residual_3d(std::span<const Point, 8> coords,
                                        std::span<const double, kDofs3d> local_state, const FlowParams& params) {
  params.validate();
  std::vector<double> R(kDofs3d, 0.0);
  std::vector<double> unused;
  accumulate_flow<3, 8, 0, false>(tab_3d(2), coords, local_state, 1.0 / params.reynolds, R, unused);
  accumulate_penalty<false>(coords, local_state, params.penalty, R, unused);
  return R;
}

std::vector<double> penalty_residual_3d(std::span<const Point, 8> coords,
                                        std::span<const double, kDofs3d> local_state, double penalty) {
  std::vector<double> R(kDofs3d, 0.0);
  std::vector<double> unused;
  accumulate_penalty<false>(coords, local_state, penalty, R, unused);
  return R;
}

double centroid_divergence_3d(std::span<const Point, 8> coords, std::span<const double, kDofs3d> local_state) {
  const PhysShape<3, 8> phys = map_to_physical<3, 8>(tab_3d(1).shape[0], coords);
  double div = 0.0;
  for (int j = 0; j < 8; ++j) {
    for (int c = 0; c < 3; ++c) div += phys.dN[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] * local_state[static_cast<std::size_t>(3 * j + c)];
  }
  return div;
}

void gather_element(const Mesh& mesh, const DofMap& dofs, std::size_t e, std::span<const double> state,
                    std::span<Point> coords, std::span<double> local_state) {
  const std::int32_t* nodes = mesh.element(e);
  const int npe = mesh.nodes_per_element();
  const int nc = dofs.velocity_components;
  std::size_t k = 0;
  for (int a = 0; a < npe; ++a) {
    const auto node = static_cast<std::size_t>(nodes[a]);
    coords[static_cast<std::size_t>(a)] = mesh.node_coords[node];
    for (int c = 0; c < nc; ++c) local_state[k++] = state[static_cast<std::size_t>(dofs.velocity(node, c))];
  }
  if (dofs.formulation == Formulation::Mixed2D) {
    for (int slot : kQ2VertexSlots) {
      local_state[k++] = state[static_cast<std::size_t>(dofs.pressure(static_cast<std::size_t>(nodes[slot])))];
    }
  }
}

std::vector<double> recover_pressure_3d(const Mesh& mesh, const DofMap& dofs, std::span<const double> state,
                                        const FlowParams& params) {
  if (dofs.formulation != Formulation::Penalty3D) throw std::invalid_argument("pressure recovery needs a 3D penalty state");
  if (state.size() != static_cast<std::size_t>(dofs.n_dofs)) throw std::invalid_argument("state length mismatch");
  std::vector<double> p(mesh.num_elements());
  std::array<Point, 8> coords{};
  std::array<double, kDofs3d> local{};
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    gather_element(mesh, dofs, e, state, coords, local);
    p[e] = -params.penalty * centroid_divergence_3d(coords, local);
  }
  return p;
}

}  // namespace nsmf
