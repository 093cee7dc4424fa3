#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nsmf/mesh.hpp"
#include "nsmf/sparse.hpp"

namespace nsmf {

/// Off-diagonal structure of A + A^T as symmetric adjacency lists (sorted,
/// no self loops). Optional per-vertex coordinates steer geometric bisection.
struct SparsityPattern {
  std::int32_t n = 0;
  std::vector<std::int64_t> xadj{0};
  std::vector<std::int32_t> adj;
  std::vector<Point> coords;

  [[nodiscard]] std::int32_t degree(std::int32_t v) const {
    return static_cast<std::int32_t>(xadj[static_cast<std::size_t>(v) + 1] - xadj[static_cast<std::size_t>(v)]);
  }
  [[nodiscard]] std::span<const std::int32_t> neighbors(std::int32_t v) const {
    return {adj.data() + xadj[static_cast<std::size_t>(v)], static_cast<std::size_t>(degree(v))};
  }
  /// Number of stored off-diagonal entries (both triangles).
  [[nodiscard]] std::size_t num_edges_directed() const { return adj.size(); }

  /// From unsorted, possibly duplicated undirected edges; self loops dropped.
  static SparsityPattern from_edges(std::int32_t n, std::span<const std::pair<std::int32_t, std::int32_t>> edges);
};

SparsityPattern symmetrize_pattern(const SparseCSR& matrix);
/// Generic CSR input; throws std::invalid_argument when rows != cols.
SparsityPattern symmetrize_pattern(std::int32_t rows, std::int32_t cols, std::span<const std::int64_t> row_ptr,
                                   std::span<const std::int32_t> col_idx);

enum class OrderingMethod : std::uint8_t { Natural, RCM, MinDegree, NestedDissection };

std::string_view to_string(OrderingMethod m);
/// Accepts the CLI spellings natural, rcm, amd, nd.
OrderingMethod ordering_from_string(std::string_view s);

struct Permutation {
  /// perm[old] = new position.
  std::vector<std::int32_t> perm;
  OrderingMethod method = OrderingMethod::Natural;

  [[nodiscard]] std::vector<std::int32_t> inverse() const;
  [[nodiscard]] bool is_valid() const;
  static Permutation identity(std::int32_t n);
};

struct NestedDissectionOptions {
  std::int32_t leaf_size = 32;
};

Permutation compute_ordering(const SparsityPattern& pattern, OrderingMethod method,
                             const NestedDissectionOptions& nd = {});

struct FillStats {
  /// Nonzeros of L + U counting both triangles and the diagonal once.
  std::int64_t nnz_factors = 0;
  /// Elimination tree in permuted numbering; -1 marks roots.
  std::vector<std::int32_t> etree;
  /// Largest column front order (1 + off-diagonal count of a factor column).
  std::int32_t peak_front = 0;
};

FillStats symbolic_fill(const SparsityPattern& pattern, const Permutation& perm);

/// Pattern relabelled by `perm` (coordinates follow their vertices).
SparsityPattern permute_pattern(const SparsityPattern& pattern, std::span<const std::int32_t> perm);

/// Elimination tree of a pattern in its own numbering.
std::vector<std::int32_t> elimination_tree(const SparsityPattern& pattern);

/// Postorder of a forest given by parent pointers: post[k] is the k-th vertex
/// visited. Children are visited in increasing index order.
std::vector<std::int32_t> tree_postorder(std::span<const std::int32_t> parent);

/// Strict lower-triangular row structure of each factor column, in the
/// pattern's own numbering (sorted ascending). Requires the etree.
std::vector<std::vector<std::int32_t>> factor_column_structures(const SparsityPattern& pattern,
                                                                std::span<const std::int32_t> etree);

}  // namespace nsmf
