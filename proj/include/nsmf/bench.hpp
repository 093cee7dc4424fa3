#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsmf/direct_solver.hpp"
#include "nsmf/fem.hpp"
#include "nsmf/mesh.hpp"
#include "nsmf/newton.hpp"

namespace nsmf {

struct CaseConfig {
  Formulation formulation = Formulation::Mixed2D;
  int nx = 40, ny = 20, nz = 0;
  ChannelGeometry geometry;
  double reynolds = 100.0;
  double penalty = kDefaultPenalty;
  OrderingMethod ordering = OrderingMethod::NestedDissection;
  NewtonVariant variant = NewtonVariant::Full;
  double alpha = 1.0;
  double tol = 1e-6;
  int max_iters = 100;
  int workers = 1;
  int refactor_every = 0;
  std::uint64_t seed = 0;
  /// Timed repetitions; phase times are the median over repetitions.
  int repeats = 3;
  /// Retry through Re = 10, 50 when the target Reynolds number fails.
  bool continuation = true;

  void validate() const;
  [[nodiscard]] FlowParams flow_params() const;
  [[nodiscard]] NewtonConfig newton_config() const;
  bool operator==(const CaseConfig&) const = default;
};

/// Default 3D case: 20 x 8 x 8 at Re = 50.
CaseConfig default_case_3d();

struct PhaseTimes {
  double assemble = 0.0;
  double analyze = 0.0;
  double factorize = 0.0;
  double solve = 0.0;
  double total = 0.0;

  bool operator==(const PhaseTimes&) const = default;
};

struct Validation {
  /// 2D: max |u - 6y(1-y)| on the station x = 0.9 L, and that value over 1.5.
  std::optional<double> profile_error;
  std::optional<double> profile_relative_error;
  std::optional<double> flux_defect;
  /// |flux at the station - flux through the inlet|, the discrete mass balance.
  std::optional<double> conservation_defect;
  /// 3D: largest axial velocity on the mid-length cross-section, and its
  /// ratio to the section's mean axial velocity.
  std::optional<double> max_axial_velocity;
  std::optional<double> axial_peak_ratio;
  std::optional<bool> pressure_monotone;

  bool operator==(const Validation&) const = default;
};

struct CaseReport {
  CaseConfig config;
  std::int32_t n_dofs = 0;
  std::vector<double> reynolds_path;  // Reynolds numbers solved, last = target
  int iterations = 0;
  bool converged = false;
  int analyze_count = 0;
  int factorize_count = 0;
  std::vector<double> corrections;  // ||dX||_inf per iteration of the final stage
  double max_backward_error = 0.0;
  PhaseTimes times;
  MemoryStats memory;
  std::int64_t delayed_pivots = 0;
  std::int64_t perturbed_pivots = 0;
  Validation validation;

  bool operator==(const CaseReport&) const = default;
};

/// Raised when a case diverges; carries what was gathered so far.
class CaseFailure : public std::runtime_error {
 public:
  CaseFailure(const std::string& what, CaseReport partial) : std::runtime_error(what), report_(std::move(partial)) {}
  [[nodiscard]] const CaseReport& report() const { return report_; }

 private:
  CaseReport report_;
};

CaseReport run_case(const CaseConfig& config, std::vector<double>* final_state = nullptr);

struct PoiseuilleCheck {
  std::vector<double> y, u, u_exact;
  double max_error = 0.0;
  double flux = 0.0;         // per unit height
  double inlet_flux = 0.0;   // per unit height
  double flux_defect = 0.0;  // |flux - 1|
  double conservation_defect = 0.0;
};

/// Samples u on the vertical line x = station * L and compares it with the
/// unit-mean parabola. Requires a 2D state and L >= 10 H.
PoiseuilleCheck validate_poiseuille(const Mesh& mesh, const DofMap& dofs, std::span<const double> state,
                                    double station = 0.9);

struct DuctCheck {
  double max_axial_velocity = 0.0;
  double mean_axial_velocity = 0.0;
  double peak_ratio = 0.0;
  /// Recovered pressure averaged over the core elements of each x-slab.
  std::vector<double> core_pressure;
  bool pressure_monotone = false;
};

DuctCheck validate_duct(const Mesh& mesh, const DofMap& dofs, std::span<const double> state,
                        const FlowParams& params);

struct OrderingRow {
  OrderingMethod method = OrderingMethod::Natural;
  bool solved = false;
  int iterations = 0;
  double time_per_iter = 0.0;
  double analyze_time = 0.0;
  std::int64_t nnz_factors = 0;
  std::int32_t peak_front = 0;
  std::int64_t estimated_bytes = 0;
};

/// One row per method. With `symbolic_only` the Jacobian at the initial
/// state is analysed but not factorized or iterated.
std::vector<OrderingRow> compare_orderings(const CaseConfig& base, std::span<const OrderingMethod> methods,
                                           bool symbolic_only = false);

struct VariantRow {
  int workers = 1;
  double full_time = 0.0;
  double modified_time = 0.0;
  double full_assemble_time = 0.0;
  double modified_assemble_time = 0.0;
  int full_iters = 0;
  int modified_iters = 0;
  bool full_converged = false;
  bool modified_converged = false;
  std::int64_t nnz_factors = 0;
  std::int64_t estimated_bytes = 0;
  /// Set when Modified needed fewer iterations than Full.
  bool flagged = false;
};

std::vector<VariantRow> compare_newton_variants(const CaseConfig& base, std::span<const int> worker_counts);

enum class ReportFormat { Csv, Json };
ReportFormat report_format_from_string(std::string_view s);

void emit_report(const CaseReport& report, ReportFormat format, std::ostream& os);
void emit_report(std::span<const OrderingRow> rows, const CaseConfig& base, ReportFormat format, std::ostream& os);
void emit_report(std::span<const VariantRow> rows, const CaseConfig& base, ReportFormat format, std::ostream& os);

std::string report_to_json(const CaseReport& report);
CaseReport report_from_json(std::string_view text);

/// Copy with timings zeroed, for reproducibility comparisons.
CaseReport without_timings(CaseReport report);

}  // namespace nsmf
