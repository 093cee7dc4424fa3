#include "nsmf/mesh.hpp"

#include <ostream>
#include <stdexcept>
#include <string>

namespace nsmf {

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Interior: return "interior";
    case BoundaryTag::Inlet: return "inlet";
    case BoundaryTag::Exit: return "exit";
    case BoundaryTag::Wall: return "wall";
  }
  return "?";
}

std::string_view to_string(Formulation f) {
  return f == Formulation::Mixed2D ? "2d" : "3d";
}

Formulation formulation_from_string(std::string_view s) {
  if (s == "2d") return Formulation::Mixed2D;
  if (s == "3d") return Formulation::Penalty3D;
  throw std::invalid_argument("unknown formulation '" + std::string(s) + "'");
}

std::array<int, 3> Mesh::lattice() const {
  if (dim == 2) return {2 * nx + 1, 2 * ny + 1, 1};
  return {nx + 1, ny + 1, nz + 1};
}

namespace {

void check_geometry(const ChannelGeometry& g, int dim) {
  if (!(g.length > 0.0) || !(g.height > 0.0) || (dim == 3 && !(g.depth > 0.0))) {
    throw std::invalid_argument("channel extents must be positive");
  }
}

// Wall dominates inlet, inlet dominates exit.
BoundaryTag classify(bool wall, bool inlet, bool exit) {
  if (wall) return BoundaryTag::Wall;
  if (inlet) return BoundaryTag::Inlet;
  if (exit) return BoundaryTag::Exit;
  return BoundaryTag::Interior;
}

}  // namespace

Mesh build_channel_mesh_2d(int nx, int ny, const ChannelGeometry& geom) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("element counts must be >= 1");
  check_geometry(geom, 2);

  Mesh mesh;
  mesh.dim = 2;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.nz = 0;
  mesh.geometry = geom;

  const int mx = 2 * nx + 1;
  const int my = 2 * ny + 1;
  const auto n_nodes = static_cast<std::size_t>(mx) * static_cast<std::size_t>(my);
  mesh.node_coords.resize(n_nodes);
  mesh.boundary_tags.resize(n_nodes);
  mesh.pressure_index.assign(n_nodes, -1);

  std::int32_t next_p = 0;
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < mx; ++i) {
      const auto n = static_cast<std::size_t>(j) * mx + i;
      mesh.node_coords[n] = {geom.length * i / (mx - 1), geom.height * j / (my - 1), 0.0};
      mesh.boundary_tags[n] = classify(j == 0 || j == my - 1, i == 0, i == mx - 1);
      if (i % 2 == 0 && j % 2 == 0) mesh.pressure_index[n] = next_p++;
    }
  }
  mesh.num_pressure_nodes = next_p;

  mesh.element_nodes.reserve(static_cast<std::size_t>(nx) * ny * 9);
  for (int ey = 0; ey < ny; ++ey) {
    for (int ex = 0; ex < nx; ++ex) {
      for (int b = 0; b < 3; ++b) {
        for (int a = 0; a < 3; ++a) {
          mesh.element_nodes.push_back((2 * ey + b) * mx + (2 * ex + a));
        }
      }
    }
  }
  return mesh;
}

Mesh build_channel_mesh_3d(int nx, int ny, int nz, const ChannelGeometry& geom) {
  if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("element counts must be >= 1");
  check_geometry(geom, 3);

  Mesh mesh;
  mesh.dim = 3;
  mesh.nx = nx;
  mesh.ny = ny;
  mesh.nz = nz;
  mesh.geometry = geom;

  const int mx = nx + 1, my = ny + 1, mz = nz + 1;
  const auto n_nodes = static_cast<std::size_t>(mx) * my * mz;
  mesh.node_coords.resize(n_nodes);
  mesh.boundary_tags.resize(n_nodes);
  mesh.pressure_index.assign(n_nodes, -1);

  for (int k = 0; k < mz; ++k) {
    for (int j = 0; j < my; ++j) {
      for (int i = 0; i < mx; ++i) {
        const auto n = (static_cast<std::size_t>(k) * my + j) * mx + i;
        mesh.node_coords[n] = {geom.length * i / nx, geom.height * j / ny, geom.depth * k / nz};
        const bool wall = j == 0 || j == ny || k == 0 || k == nz;
        mesh.boundary_tags[n] = classify(wall, i == 0, i == nx);
      }
    }
  }

  mesh.element_nodes.reserve(static_cast<std::size_t>(nx) * ny * nz * 8);
  for (int ez = 0; ez < nz; ++ez) {
    for (int ey = 0; ey < ny; ++ey) {
      for (int ex = 0; ex < nx; ++ex) {
        for (int c = 0; c < 2; ++c) {
          for (int b = 0; b < 2; ++b) {
            for (int a = 0; a < 2; ++a) {
              mesh.element_nodes.push_back(((ez + c) * my + (ey + b)) * mx + (ex + a));
            }
          }
        }
      }
    }
  }
  return mesh;
}

DofMap build_dof_map(const Mesh& mesh, Formulation formulation) {
  const bool ok = (formulation == Formulation::Mixed2D && mesh.dim == 2) ||
                  (formulation == Formulation::Penalty3D && mesh.dim == 3);
  if (!ok) throw std::invalid_argument("formulation does not match mesh dimension");

  DofMap map;
  map.formulation = formulation;
  map.velocity_components = mesh.dim;
  const std::size_t n_nodes = mesh.num_nodes();
  map.velocity_dofs.resize(n_nodes * static_cast<std::size_t>(mesh.dim));
  map.pressure_dofs.assign(n_nodes, -1);

  std::int32_t next = 0;
  for (std::size_t n = 0; n < n_nodes; ++n) {
    for (int c = 0; c < mesh.dim; ++c) {
      map.velocity_dofs[n * static_cast<std::size_t>(mesh.dim) + static_cast<std::size_t>(c)] = next++;
    }
    if (formulation == Formulation::Mixed2D && mesh.pressure_index[n] >= 0) {
      map.pressure_dofs[n] = next++;
    }
  }
  map.n_dofs = next;
  return map;
}

int DofMap::dofs_per_element() const {
  return formulation == Formulation::Mixed2D ? 22 : 24;
}

std::vector<std::int32_t> DofMap::element_dofs(const Mesh& mesh, std::size_t e) const {
  const std::int32_t* nodes = mesh.element(e);
  const int npe = mesh.nodes_per_element();
  std::vector<std::int32_t> dofs;
  dofs.reserve(static_cast<std::size_t>(dofs_per_element()));
  for (int a = 0; a < npe; ++a) {
    for (int c = 0; c < velocity_components; ++c) {
      dofs.push_back(velocity(static_cast<std::size_t>(nodes[a]), c));
    }
  }
  if (formulation == Formulation::Mixed2D) {
    for (int slot : kQ2VertexSlots) dofs.push_back(pressure(static_cast<std::size_t>(nodes[slot])));
  }
  return dofs;
}

std::vector<Point> DofMap::dof_coordinates(const Mesh& mesh) const {
  std::vector<Point> coords(static_cast<std::size_t>(n_dofs));
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    for (int c = 0; c < velocity_components; ++c) coords[static_cast<std::size_t>(velocity(n, c))] = mesh.node_coords[n];
    if (pressure_dofs[n] >= 0) coords[static_cast<std::size_t>(pressure_dofs[n])] = mesh.node_coords[n];
  }
  return coords;
}

void dump_mesh(const Mesh& mesh, std::ostream& os) {
  os << "# nodes " << mesh.num_nodes() << " dim " << mesh.dim << '\n';
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    os << n;
    for (int d = 0; d < mesh.dim; ++d) os << ' ' << mesh.node_coords[n][static_cast<std::size_t>(d)];
    os << ' ' << to_string(mesh.boundary_tags[n]) << '\n';
  }
  os << "# elements " << mesh.num_elements() << '\n';
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    os << e;
    const std::int32_t* nodes = mesh.element(e);
    for (int a = 0; a < mesh.nodes_per_element(); ++a) os << ' ' << nodes[a];
    os << '\n';
  }
}

}  // namespace nsmf
