#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsmf/ordering.hpp"
#include "nsmf/sparse.hpp"

namespace nsmf {

/// Supernode amalgamation: a child front is merged into its parent when it
/// would add at most `max_new_rows` padded rows, or when the merged front has
/// order at most `max_front`.
struct AnalyzeOptions {
  bool amalgamate = true;
  std::int32_t max_new_rows = 2;
  std::int32_t max_front = 16;
  NestedDissectionOptions nested_dissection;
};

/// One node of the assembly tree. Variables are original (unpermuted) indices.
struct SymbolicFront {
  std::vector<std::int32_t> pivots;  // eliminated here, in order
  std::vector<std::int32_t> border;  // remaining rows/columns, by elimination position
  std::int32_t parent = -1;
  std::vector<std::int32_t> children;

  [[nodiscard]] std::int32_t order() const {
    return static_cast<std::int32_t>(pivots.size() + border.size());
  }
};

struct SymbolicFactorization {
  std::int32_t n = 0;
  /// Final elimination order (a postorder of the assembly tree); perm[old] = new.
  Permutation perm;
  /// Elimination tree over columns in the final numbering.
  std::vector<std::int32_t> etree;
  /// Fronts stored in postorder: children always precede parents.
  std::vector<SymbolicFront> fronts;
  /// Front owning each variable as a pivot.
  std::vector<std::int32_t> front_of;
  /// Exact nonzeros of L + U (no amalgamation padding).
  std::int64_t nnz_factors = 0;
  /// Entries stored by the fronts, padding included.
  std::int64_t front_entries = 0;
  std::int32_t peak_front = 0;
  /// Structure the analysis covered (off-diagonal, symmetric).
  SparsityPattern pattern;
};

SymbolicFactorization analyze(const SparsityPattern& pattern, OrderingMethod method, const AnalyzeOptions& opts = {});

/// Thrown when a column (or row) of the matrix has no stored entries.
class StructurallySingular : public std::runtime_error {
 public:
  StructurallySingular(std::int32_t column, const std::string& what)
      : std::runtime_error(what), column_(column) {}
  [[nodiscard]] std::int32_t column() const { return column_; }

 private:
  std::int32_t column_;
};

struct FactorizeOptions {
  /// Threshold partial pivoting: a fully-summed pivot is accepted when it is at
  /// least `threshold` times the largest entry of its column in the front.
  double threshold = 0.01;
  /// Static pivot floor relative to the front's largest entry.
  double perturbation = 1e-12;
};

struct PivotPerturbation {
  std::int32_t column;   // original column index
  double original;
  double replaced;
};

/// Dense factor block of one front: P_f F Q_f = L U restricted to the pivots.
struct FrontFactor {
  std::int32_t npiv = 0;
  std::int32_t m = 0;
  /// Global row / column indices; first npiv are the pivot rows / columns.
  std::vector<std::int32_t> rows;
  std::vector<std::int32_t> cols;
  /// m x npiv column-major: unit-lower L (below diagonal) and U11 (on and above).
  std::vector<double> lcols;
  /// npiv x (m - npiv) row-major block U12.
  std::vector<double> urows;
};

/// Immutable numeric factorization. Safe to share across threads for solves.
class NumericFactor {
 public:
  [[nodiscard]] std::int32_t n() const { return n_; }
  [[nodiscard]] const std::vector<FrontFactor>& fronts() const { return fronts_; }
  [[nodiscard]] const std::vector<PivotPerturbation>& perturbations() const { return perturbations_; }
  /// Pivots moved from a front to its parent by threshold pivoting.
  [[nodiscard]] std::int64_t delayed_pivots() const { return delayed_; }
  /// Entries actually stored in L and U, including delayed-pivot growth.
  [[nodiscard]] std::int64_t stored_entries() const { return stored_; }
  [[nodiscard]] std::int32_t largest_front() const { return largest_front_; }
  [[nodiscard]] const SparseCSR& matrix() const { return *matrix_; }

  /// Forward and back substitution with the stored factors (no refinement).
  void apply_inverse(std::span<const double> b, std::span<double> x) const;

  /// Dense L and U of P A Q (row-major n x n each) plus the row/col orders;
  /// intended for verification on small systems.
  struct Dense {
    std::vector<double> L, U;
    std::vector<std::int32_t> row_order, col_order;
  };
  [[nodiscard]] Dense to_dense() const;

 private:
  friend NumericFactor factorize(const SymbolicFactorization&, const SparseCSR&, const FactorizeOptions&);
  std::int32_t n_ = 0;
  std::vector<FrontFactor> fronts_;
  std::vector<PivotPerturbation> perturbations_;
  std::int64_t delayed_ = 0;
  std::int64_t stored_ = 0;
  std::int32_t largest_front_ = 0;
  std::shared_ptr<const SparseCSR> matrix_;
};

/// Multifrontal LU in the postorder of the assembly tree. Throws
/// StructurallySingular for empty rows or columns and std::invalid_argument
/// when the matrix has entries outside the analysed pattern.
NumericFactor factorize(const SymbolicFactorization& symbolic, const SparseCSR& matrix,
                        const FactorizeOptions& opts = {});

struct SolveReport {
  int refinement_steps = 0;
  double backward_error = 0.0;
};

struct SolveOptions {
  int max_refine = 2;
  double target_backward_error = 1e-12;
};

/// ||b - A x||_inf / (||A||_inf ||x||_inf + ||b||_inf)
double backward_error(const SparseCSR& a, std::span<const double> x, std::span<const double> b);

/// Solve with iterative refinement against the original matrix.
/// Throws std::invalid_argument for a wrong-length or non-finite rhs.
std::vector<double> solve(const NumericFactor& factor, std::span<const double> rhs, SolveReport* report = nullptr,
                          const SolveOptions& opts = {});

struct MemoryStats {
  std::int64_t nnz_factors = 0;
  std::int32_t peak_front = 0;
  std::int64_t estimated_bytes = 0;

  bool operator==(const MemoryStats&) const = default;
};

/// Factor storage predicted by the analysis: 8 bytes per factor entry plus
/// 32-bit index lists.
MemoryStats estimate_memory(const SymbolicFactorization& symbolic);
MemoryStats memory_report(const SymbolicFactorization& symbolic, const NumericFactor& factor);

/// analyze + factorize + solve in one call.
std::vector<double> solve_direct(const SparseCSR& a, std::span<const double> rhs, OrderingMethod method,
                                 SolveReport* report = nullptr);

}  // namespace nsmf
