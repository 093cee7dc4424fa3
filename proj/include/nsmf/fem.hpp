#pragma once

#include <span>
#include <vector>

#include "nsmf/mesh.hpp"

namespace nsmf {

inline constexpr double kDefaultPenalty = 1e7;

struct FlowParams {
  double reynolds = 100.0;
  /// Penalty parameter; only read by the 3D formulation.
  double penalty = kDefaultPenalty;
  Formulation formulation = Formulation::Mixed2D;

  /// Throws std::invalid_argument if Re <= 0 or (3D and penalty <= 0).
  void validate() const;
};

/// Residual and Jacobian of a single element. The Jacobian is dense and
/// row-major (`jacobian[r * size + c]`), with local DOFs laid out as velocity
/// components interleaved per element node followed by pressures.
struct ElementSystem {
  std::vector<double> residual;
  std::vector<double> jacobian;
  /// Filled by the assembler; empty when produced by the element routines.
  std::vector<std::int32_t> global_dofs;

  [[nodiscard]] std::size_t size() const { return residual.size(); }
  [[nodiscard]] double J(std::size_t r, std::size_t c) const { return jacobian[r * size() + c]; }
};

inline constexpr int kDofs2d = 22;
inline constexpr int kDofs3d = 24;

/// Galerkin residual of the steady 2D momentum/continuity equations on one
/// biquadratic-velocity / bilinear-pressure element, with the viscous term in
/// stress-divergence form, and its exact Jacobian.
ElementSystem element_system_2d(std::span<const Point, 9> coords, std::span<const double, kDofs2d> local_state,
                                const FlowParams& params);
/// Residual only; identical values to `element_system_2d(...).residual`.
std::vector<double> element_residual_2d(std::span<const Point, 9> coords,
                                        std::span<const double, kDofs2d> local_state, const FlowParams& params);

/// Penalty formulation on a trilinear hexahedron. The penalty term uses the
/// one-point rule; everything else uses 2x2x2 Gauss points.
ElementSystem element_system_3d(std::span<const Point, 8> coords, std::span<const double, kDofs3d> local_state,
                                const FlowParams& params);
std::vector<double> element_residual_3d(std::span<const Point, 8> coords,
                                        std::span<const double, kDofs3d> local_state, const FlowParams& params);

/// The penalty term's share of the 3D element residual.
std::vector<double> penalty_residual_3d(std::span<const Point, 8> coords,
                                        std::span<const double, kDofs3d> local_state, double penalty);

/// Velocity divergence at the element centroid of a trilinear hexahedron.
double centroid_divergence_3d(std::span<const Point, 8> coords, std::span<const double, kDofs3d> local_state);

struct DofMap;

/// Per-element pressure -penalty * div(u) at the centroid, in element order.
std::vector<double> recover_pressure_3d(const Mesh& mesh, const DofMap& dofs, std::span<const double> state,
                                        const FlowParams& params);

/// Gather an element's node coordinates and local state.
void gather_element(const Mesh& mesh, const DofMap& dofs, std::size_t e, std::span<const double> state,
                    std::span<Point> coords, std::span<double> local_state);

}  // namespace nsmf
