#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsmf/assembly.hpp"
#include "nsmf/direct_solver.hpp"
#include "nsmf/fem.hpp"
#include "nsmf/mesh.hpp"

namespace nsmf {

enum class NewtonVariant { Full, Modified };

std::string_view to_string(NewtonVariant v);
NewtonVariant newton_variant_from_string(std::string_view s);

struct NewtonConfig {
  NewtonVariant variant = NewtonVariant::Full;
  double alpha = 1.0;
  double tol = 1e-6;
  int max_iters = 100;
  int workers = 1;
  /// Modified Newton only: refresh the Jacobian every N iterations (0 = never).
  int refactor_every = 0;
  OrderingMethod ordering = OrderingMethod::NestedDissection;
  AnalyzeOptions analyze;
  /// Halve alpha (at most this many times) when a correction grows tenfold.
  int max_halvings = 4;
  double divergence_limit = 1e6;

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double correction_norm = 0.0;  // ||dX||_inf before relaxation
  double residual_norm = 0.0;    // ||R||_inf at the start of the iteration
  double alpha = 1.0;            // relaxation actually applied
  double assemble_time = 0.0;
  double analyze_time = 0.0;
  double factorize_time = 0.0;
  double solve_time = 0.0;
  bool analyzed = false;
  bool factorized = false;
  double backward_error = 0.0;
  int refinement_steps = 0;
};

struct ConvergenceHistory {
  std::vector<IterationRecord> records;
  bool converged = false;

  [[nodiscard]] int iterations() const { return static_cast<int>(records.size()); }
  [[nodiscard]] int analyze_count() const;
  [[nodiscard]] int factorize_count() const;
  [[nodiscard]] double assemble_time() const;
  [[nodiscard]] double analyze_time() const;
  [[nodiscard]] double factorize_time() const;
  [[nodiscard]] double solve_time() const;
  [[nodiscard]] double total_time() const;
  [[nodiscard]] double max_backward_error() const;
};

/// Raised when a correction exceeds the divergence limit or is not finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, ConvergenceHistory history)
      : std::runtime_error(what), history_(std::move(history)) {}
  [[nodiscard]] const ConvergenceHistory& history() const { return history_; }

 private:
  ConvergenceHistory history_;
};

/// u = 1 except on walls, all other components zero.
std::vector<double> initial_state(const Mesh& mesh, const DofMap& dofs);

/// state += alpha * delta. Throws std::domain_error if the update is not finite.
void newton_step(std::span<double> state, std::span<const double> delta, double alpha);

/// -R with constrained entries zeroed, assembled from per-worker batches.
std::vector<double> residual_only_assembly(const Mesh& mesh, const DofMap& dofs, const Partition& partition,
                                           std::span<const double> state, const FlowParams& params);

struct NonlinearResult {
  std::vector<double> state;
  ConvergenceHistory history;
  MemoryStats memory;
  std::int64_t delayed_pivots = 0;
  std::size_t perturbed_pivots = 0;
};

/// Newton iteration from `start` (initial_state when empty). Analysis runs
/// once; Full refactorizes every iteration, Modified keeps the first factors.
NonlinearResult solve_nonlinear(const Mesh& mesh, const DofMap& dofs, const FlowParams& params,
                                const NewtonConfig& config, std::span<const double> start = {});

}  // namespace nsmf
