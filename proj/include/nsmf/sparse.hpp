#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nsmf {

/// Coordinate-format contributions from one worker. Duplicates are expected;
/// they are summed on merge.
struct TripletBatch {
  std::vector<std::int32_t> rows;
  std::vector<std::int32_t> cols;
  std::vector<double> vals;
  std::vector<std::int32_t> rhs_index;
  std::vector<double> rhs_value;

  [[nodiscard]] std::size_t size() const { return vals.size(); }
  void reserve(std::size_t entries, std::size_t rhs_entries);
};

/// Compressed sparse row matrix with strictly increasing columns per row.
struct SparseCSR {
  std::int32_t n = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<std::int32_t> col_idx;
  std::vector<double> vals;

  [[nodiscard]] std::size_t nnz() const { return col_idx.size(); }
  /// Index into `vals` of entry (i, j), or -1 when not stored.
  [[nodiscard]] std::int64_t find(std::int32_t i, std::int32_t j) const;
  [[nodiscard]] double at(std::int32_t i, std::int32_t j) const;
  [[nodiscard]] bool same_pattern(const SparseCSR& other) const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  [[nodiscard]] double norm_inf() const;

  static SparseCSR identity(std::int32_t n);
  /// Build from dense row-major storage, keeping only nonzero entries.
  static SparseCSR from_dense(std::int32_t n, std::span<const double> dense);
  [[nodiscard]] std::vector<double> to_dense() const;
};

struct LinearSystem {
  SparseCSR matrix;
  std::vector<double> rhs;
  /// Per-DOF flag; empty before boundary conditions are imposed.
  std::vector<std::uint8_t> dirichlet_mask;
};

/// Sum duplicates into CSR. Contributions to each entry are added in
/// (batch, emission) order, so the result is bitwise reproducible.
/// Throws std::out_of_range for indices outside [0, n_dofs).
LinearSystem merge_triplets(std::span<const TripletBatch> batches, std::int32_t n_dofs);

double norm_inf(std::span<const double> v);

/// Matrix Market coordinate real general, 1-based indices.
void write_matrix_market(const SparseCSR& a, std::ostream& os);
SparseCSR read_matrix_market(std::istream& is);
/// Dense vector in Matrix Market array format.
void write_vector_market(std::span<const double> v, std::ostream& os);
std::vector<double> read_vector_market(std::istream& is);

}  // namespace nsmf
