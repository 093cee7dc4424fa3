#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmf/fem.hpp"
#include "nsmf/mesh.hpp"
#include "nsmf/sparse.hpp"

namespace nsmf {

/// Contiguous, balanced element blocks: worker w owns elements
/// [begin[w], begin[w+1]).
struct Partition {
  int p = 1;
  std::vector<std::size_t> begin;
  std::vector<std::int32_t> owner;

  [[nodiscard]] std::size_t load(int worker) const {
    return begin[static_cast<std::size_t>(worker) + 1] - begin[static_cast<std::size_t>(worker)];
  }
  [[nodiscard]] std::vector<std::size_t> loads() const;
};

/// Throws std::invalid_argument unless 1 <= p <= element count.
Partition partition_elements(const Mesh& mesh, int p);

/// Error raised while evaluating a specific element.
class ElementError : public std::runtime_error {
 public:
  ElementError(std::size_t element, const std::string& what);
  [[nodiscard]] std::size_t element() const { return element_; }

 private:
  std::size_t element_;
};

/// Element systems of one worker's elements, in ascending element order, as
/// coordinate triplets (d^2 per element) plus -R as rhs contributions.
TripletBatch assemble_partition(const Mesh& mesh, const DofMap& dofs, const Partition& partition, int worker,
                                std::span<const double> state, const FlowParams& params);

/// Only the -R contributions of one worker's elements.
TripletBatch assemble_partition_residual(const Mesh& mesh, const DofMap& dofs, const Partition& partition, int worker,
                                         std::span<const double> state, const FlowParams& params);

/// Runs every worker concurrently (one thread each) and merges in worker order.
LinearSystem assemble_global(const Mesh& mesh, const DofMap& dofs, const Partition& partition,
                             std::span<const double> state, const FlowParams& params);

/// Pressure DOF pinned to zero: the exit-plane vertex nearest the centerline
/// (lowest index on ties). -1 for the penalty formulation.
std::int32_t pressure_datum_dof(const Mesh& mesh, const DofMap& dofs);

/// Sorted list of constrained DOFs: velocity components on inlet and wall
/// nodes, plus the pressure datum in 2D.
std::vector<std::int32_t> dirichlet_dofs(const Mesh& mesh, const DofMap& dofs);

/// Replace constrained rows by identity rows with zero rhs. Columns are left
/// alone so the sparsity pattern is unchanged.
LinearSystem apply_dirichlet(LinearSystem system, const Mesh& mesh, const DofMap& dofs);

/// Prescribed values of the constrained DOFs (inlet u = 1, all else 0).
std::vector<double> dirichlet_values(const Mesh& mesh, const DofMap& dofs);

/// Repeated assembly over a fixed mesh and partition. The sparsity pattern is
/// computed once; later calls scatter element values straight into it, in the
/// same (worker, emission) order that `merge_triplets` uses.
class Assembler {
 public:
  Assembler(const Mesh& mesh, const DofMap& dofs, int workers, FlowParams params);

  /// Jacobian and -R with boundary conditions applied.
  LinearSystem assemble(std::span<const double> state);
  /// -R with constrained entries zeroed; skips Jacobian evaluation.
  std::vector<double> assemble_residual(std::span<const double> state);

  [[nodiscard]] const Partition& partition() const { return partition_; }
  [[nodiscard]] const std::vector<std::int32_t>& constrained() const { return constrained_; }
  [[nodiscard]] const std::vector<std::uint8_t>& mask() const { return mask_; }

 private:
  void build_pattern();

  const Mesh& mesh_;
  const DofMap& dofs_;
  Partition partition_;
  FlowParams params_;
  std::vector<std::int32_t> element_dofs_;  // dofs_per_element() per element
  std::vector<std::int32_t> constrained_;
  std::vector<std::uint8_t> mask_;
  SparseCSR pattern_;
  std::vector<std::int64_t> slots_;  // CSR value slot per element-matrix entry
  std::vector<double> element_values_;
  std::vector<double> element_residuals_;
};

}  // namespace nsmf
