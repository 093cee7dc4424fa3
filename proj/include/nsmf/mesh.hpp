#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace nsmf {

using Point = std::array<double, 3>;

/// Non-dimensional channel extents. `depth` is ignored in 2D.
struct ChannelGeometry {
  double length = 10.0;
  double height = 1.0;
  double depth = 1.0;

  bool operator==(const ChannelGeometry&) const = default;
};

enum class BoundaryTag : std::uint8_t { Interior, Inlet, Exit, Wall };

enum class Formulation : std::uint8_t { Mixed2D, Penalty3D };

std::string_view to_string(BoundaryTag tag);
std::string_view to_string(Formulation f);
Formulation formulation_from_string(std::string_view s);

/// Structured channel mesh.
///
/// 2D meshes carry biquadratic (9-node) velocity elements on a
/// (2nx+1) x (2ny+1) node lattice; the element vertices double as the
/// bilinear pressure nodes. 3D meshes carry trilinear (8-node) hexahedra on
/// an (nx+1) x (ny+1) x (nz+1) lattice and have no pressure nodes.
///
/// Nodes are numbered lexicographically with x fastest, then y, then z.
/// Element node lists use the tensor-product local order (x fastest).
struct Mesh {
  int dim = 2;
  int nx = 0, ny = 0, nz = 0;
  ChannelGeometry geometry;
  std::vector<Point> node_coords;
  std::vector<BoundaryTag> boundary_tags;
  /// Node indices per element, `nodes_per_element()` entries each.
  std::vector<std::int32_t> element_nodes;
  /// Pressure node number per node, or -1 when the node carries no pressure.
  std::vector<std::int32_t> pressure_index;
  std::int32_t num_pressure_nodes = 0;

  [[nodiscard]] int nodes_per_element() const { return dim == 2 ? 9 : 8; }
  [[nodiscard]] std::size_t num_nodes() const { return node_coords.size(); }
  [[nodiscard]] std::size_t num_elements() const {
    return element_nodes.size() / static_cast<std::size_t>(nodes_per_element());
  }
  [[nodiscard]] const std::int32_t* element(std::size_t e) const {
    return element_nodes.data() + e * static_cast<std::size_t>(nodes_per_element());
  }
  /// Lattice extents (nodes per axis).
  [[nodiscard]] std::array<int, 3> lattice() const;
};

Mesh build_channel_mesh_2d(int nx, int ny, const ChannelGeometry& geom);
Mesh build_channel_mesh_3d(int nx, int ny, int nz, const ChannelGeometry& geom);

/// Per-node global DOF numbers. Fields are interleaved per node
/// (u, v[, w][, p]) and nodes are visited in lexicographic order.
struct DofMap {
  Formulation formulation = Formulation::Mixed2D;
  int velocity_components = 2;
  /// `velocity_components` entries per node.
  std::vector<std::int32_t> velocity_dofs;
  /// One entry per node, -1 for nodes without pressure.
  std::vector<std::int32_t> pressure_dofs;
  std::int32_t n_dofs = 0;

  [[nodiscard]] std::int32_t velocity(std::size_t node, int comp) const {
    return velocity_dofs[node * static_cast<std::size_t>(velocity_components) +
                         static_cast<std::size_t>(comp)];
  }
  [[nodiscard]] std::int32_t pressure(std::size_t node) const { return pressure_dofs[node]; }

  /// Local-to-global DOF list for one element: velocity components interleaved
  /// per element node, then the element's pressure DOFs (2D only).
  [[nodiscard]] std::vector<std::int32_t> element_dofs(const Mesh& mesh, std::size_t e) const;
  /// DOFs per element: 22 for the mixed 2D element, 24 for the 3D hexahedron.
  [[nodiscard]] int dofs_per_element() const;
  /// Coordinates of the node owning each DOF (used by geometric orderings).
  [[nodiscard]] std::vector<Point> dof_coordinates(const Mesh& mesh) const;
};

DofMap build_dof_map(const Mesh& mesh, Formulation formulation);

/// Local vertex positions (within the 9-node element) of the four pressure nodes.
inline constexpr std::array<int, 4> kQ2VertexSlots{0, 2, 6, 8};

/// Plain-text node/element listing for debugging.
void dump_mesh(const Mesh& mesh, std::ostream& os);

}  // namespace nsmf
