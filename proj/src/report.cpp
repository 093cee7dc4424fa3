// CSV and JSON serialisation of benchmark reports.

#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "nsmf/bench.hpp"

namespace nsmf {

using nlohmann::json;

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void to_json(json& j, const CaseConfig& c) {
  j = json{{"formulation", to_string(c.formulation)},
           {"nx", c.nx},
           {"ny", c.ny},
           {"nz", c.nz},
           {"length", c.geometry.length},
           {"height", c.geometry.height},
           {"depth", c.geometry.depth},
           {"reynolds", c.reynolds},
           {"penalty", c.penalty},
           {"ordering", to_string(c.ordering)},
           {"newton", to_string(c.variant)},
           {"alpha", c.alpha},
           {"tol", c.tol},
           {"max_iters", c.max_iters},
           {"workers", c.workers},
           {"refactor_every", c.refactor_every},
           {"seed", c.seed},
           {"repeats", c.repeats},
           {"continuation", c.continuation}};
}

void from_json(const json& j, CaseConfig& c) {
  c.formulation = formulation_from_string(j.at("formulation").get<std::string>());
  j.at("nx").get_to(c.nx);
  j.at("ny").get_to(c.ny);
  j.at("nz").get_to(c.nz);
  j.at("length").get_to(c.geometry.length);
  j.at("height").get_to(c.geometry.height);
  j.at("depth").get_to(c.geometry.depth);
  j.at("reynolds").get_to(c.reynolds);
  j.at("penalty").get_to(c.penalty);
  c.ordering = ordering_from_string(j.at("ordering").get<std::string>());
  c.variant = newton_variant_from_string(j.at("newton").get<std::string>());
  j.at("alpha").get_to(c.alpha);
  j.at("tol").get_to(c.tol);
  j.at("max_iters").get_to(c.max_iters);
  j.at("workers").get_to(c.workers);
  j.at("refactor_every").get_to(c.refactor_every);
  j.at("seed").get_to(c.seed);
  j.at("repeats").get_to(c.repeats);
  j.at("continuation").get_to(c.continuation);
}

void to_json(json& j, const CaseReport& r) {
  j = json{{"config", r.config},
           {"n_dofs", r.n_dofs},
           {"reynolds_path", r.reynolds_path},
           {"iterations", r.iterations},
           {"converged", r.converged},
           {"analyze_count", r.analyze_count},
           {"factorize_count", r.factorize_count},
           {"corrections", r.corrections},
           {"max_backward_error", r.max_backward_error},
           {"times",
            {{"assemble", r.times.assemble},
             {"analyze", r.times.analyze},
             {"factorize", r.times.factorize},
             {"solve", r.times.solve},
             {"total", r.times.total}}},
           {"memory",
            {{"nnz_factors", r.memory.nnz_factors},
             {"peak_front", r.memory.peak_front},
             {"estimated_bytes", r.memory.estimated_bytes}}},
           {"delayed_pivots", r.delayed_pivots},
           {"perturbed_pivots", r.perturbed_pivots},
           {"validation",
            {{"profile_error", opt(r.validation.profile_error)},
             {"profile_relative_error", opt(r.validation.profile_relative_error)},
             {"flux_defect", opt(r.validation.flux_defect)},
             {"conservation_defect", opt(r.validation.conservation_defect)},
             {"max_axial_velocity", opt(r.validation.max_axial_velocity)},
             {"axial_peak_ratio", opt(r.validation.axial_peak_ratio)},
             {"pressure_monotone", opt(r.validation.pressure_monotone)}}}};
}

void from_json(const json& j, CaseReport& r) {
  j.at("config").get_to(r.config);
  j.at("n_dofs").get_to(r.n_dofs);
  j.at("reynolds_path").get_to(r.reynolds_path);
  j.at("iterations").get_to(r.iterations);
  j.at("converged").get_to(r.converged);
  j.at("analyze_count").get_to(r.analyze_count);
  j.at("factorize_count").get_to(r.factorize_count);
  j.at("corrections").get_to(r.corrections);
  j.at("max_backward_error").get_to(r.max_backward_error);
  const json& t = j.at("times");
  t.at("assemble").get_to(r.times.assemble);
  t.at("analyze").get_to(r.times.analyze);
  t.at("factorize").get_to(r.times.factorize);
  t.at("solve").get_to(r.times.solve);
  t.at("total").get_to(r.times.total);
  const json& m = j.at("memory");
  m.at("nnz_factors").get_to(r.memory.nnz_factors);
  m.at("peak_front").get_to(r.memory.peak_front);
  m.at("estimated_bytes").get_to(r.memory.estimated_bytes);
  j.at("delayed_pivots").get_to(r.delayed_pivots);
  j.at("perturbed_pivots").get_to(r.perturbed_pivots);
  const json& v = j.at("validation");
  r.validation.profile_error = get_opt<double>(v, "profile_error");
  r.validation.profile_relative_error = get_opt<double>(v, "profile_relative_error");
  r.validation.flux_defect = get_opt<double>(v, "flux_defect");
  r.validation.conservation_defect = get_opt<double>(v, "conservation_defect");
  r.validation.max_axial_velocity = get_opt<double>(v, "max_axial_velocity");
  r.validation.axial_peak_ratio = get_opt<double>(v, "axial_peak_ratio");
  r.validation.pressure_monotone = get_opt<bool>(v, "pressure_monotone");
}

void to_json(json& j, const OrderingRow& r) {
  j = json{{"method", to_string(r.method)},         {"solved", r.solved},
           {"iterations", r.iterations},            {"cpu_time_per_iter", r.time_per_iter},
           {"analyze_time", r.analyze_time},        {"nnz_factors", r.nnz_factors},
           {"peak_front", r.peak_front},            {"estimated_bytes", r.estimated_bytes}};
}

void to_json(json& j, const VariantRow& r) {
  j = json{{"workers", r.workers},
           {"full_time", r.full_time},
           {"modified_time", r.modified_time},
           {"full_assemble_time", r.full_assemble_time},
           {"modified_assemble_time", r.modified_assemble_time},
           {"full_iters", r.full_iters},
           {"modified_iters", r.modified_iters},
           {"full_converged", r.full_converged},
           {"modified_converged", r.modified_converged},
           {"nnz_factors", r.nnz_factors},
           {"estimated_bytes", r.estimated_bytes},
           {"flagged", r.flagged}};
}

namespace {

// Config columns shared by every CSV table.
constexpr const char* kConfigColumns =
    "formulation,nx,ny,nz,length,height,depth,reynolds,penalty,ordering,newton,alpha,tol,max_iters,workers,"
    "refactor_every,seed,repeats,continuation";

void config_cells(std::ostream& os, const CaseConfig& c) {
  os << to_string(c.formulation) << ',' << c.nx << ',' << c.ny << ',' << c.nz << ',' << c.geometry.length << ','
     << c.geometry.height << ',' << c.geometry.depth << ',' << c.reynolds << ',' << c.penalty << ','
     << to_string(c.ordering) << ',' << to_string(c.variant) << ',' << c.alpha << ',' << c.tol << ','
     << c.max_iters << ',' << c.workers << ',' << c.refactor_every << ',' << c.seed << ',' << c.repeats << ','
     << (c.continuation ? 1 : 0);
}

template <class T>
void opt_cell(std::ostream& os, const std::optional<T>& v) {
  if (v) os << *v;
}

void check_stream(std::ostream& os) {
  if (!os) throw std::runtime_error("failed to write report");
}

}  // namespace

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw std::invalid_argument("unknown report format '" + std::string(s) + "'");
}

std::string report_to_json(const CaseReport& report) {
  return json(report).dump(2);
}

CaseReport report_from_json(std::string_view text) {
  return json::parse(text).get<CaseReport>();
}

void emit_report(const CaseReport& r, ReportFormat format, std::ostream& os) {
  if (format == ReportFormat::Json) {
    os << report_to_json(r) << '\n';
    check_stream(os);
    return;
  }
  os << std::setprecision(12);
  os << kConfigColumns
     << ",n_dofs,reynolds_path,iterations,converged,analyze_count,factorize_count,final_correction,"
        "max_backward_error,assemble_time,analyze_time,factorize_time,solve_time,total_time,nnz_factors,peak_front,"
        "estimated_bytes,delayed_pivots,perturbed_pivots,profile_error,profile_relative_error,flux_defect,"
        "conservation_defect,max_axial_velocity,axial_peak_ratio,pressure_monotone\n";
  config_cells(os, r.config);
  os << ',' << r.n_dofs << ',';
  for (std::size_t i = 0; i < r.reynolds_path.size(); ++i) os << (i ? ";" : "") << r.reynolds_path[i];
  os << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.analyze_count << ',' << r.factorize_count
     << ',' << (r.corrections.empty() ? 0.0 : r.corrections.back()) << ',' << r.max_backward_error << ','
     << r.times.assemble << ',' << r.times.analyze << ',' << r.times.factorize << ',' << r.times.solve << ','
     << r.times.total << ',' << r.memory.nnz_factors << ',' << r.memory.peak_front << ',' << r.memory.estimated_bytes
     << ',' << r.delayed_pivots << ',' << r.perturbed_pivots << ',';
  opt_cell(os, r.validation.profile_error);
  os << ',';
  opt_cell(os, r.validation.profile_relative_error);
  os << ',';
  opt_cell(os, r.validation.flux_defect);
  os << ',';
  opt_cell(os, r.validation.conservation_defect);
  os << ',';
  opt_cell(os, r.validation.max_axial_velocity);
  os << ',';
  opt_cell(os, r.validation.axial_peak_ratio);
  os << ',';
  if (r.validation.pressure_monotone) os << (*r.validation.pressure_monotone ? 1 : 0);
  os << '\n';
  check_stream(os);
}

void emit_report(std::span<const OrderingRow> rows, const CaseConfig& base, ReportFormat format, std::ostream& os) {
  if (format == ReportFormat::Json) {
    os << json{{"config", base}, {"rows", json(std::vector<OrderingRow>(rows.begin(), rows.end()))}}.dump(2) << '\n';
    check_stream(os);
    return;
  }
  os << std::setprecision(12);
  os << "method,cpu_time_per_iter,nnz_factors,estimated_bytes,peak_front,iterations,solved,analyze_time,"
     << kConfigColumns << '\n';
  for (const auto& r : rows) {
    os << to_string(r.method) << ',' << r.time_per_iter << ',' << r.nnz_factors << ',' << r.estimated_bytes << ','
       << r.peak_front << ',' << r.iterations << ',' << (r.solved ? 1 : 0) << ',' << r.analyze_time << ',';
    CaseConfig c = base;
    c.ordering = r.method;
    config_cells(os, c);
    os << '\n';
  }
  check_stream(os);
}

void emit_report(std::span<const VariantRow> rows, const CaseConfig& base, ReportFormat format, std::ostream& os) {
  if (format == ReportFormat::Json) {
    os << json{{"config", base}, {"rows", json(std::vector<VariantRow>(rows.begin(), rows.end()))}}.dump(2) << '\n';
    check_stream(os);
    return;
  }
  os << std::setprecision(12);
  os << "p,full_time,modified_time,full_iters,modified_iters,full_converged,modified_converged,full_assemble_time,"
        "modified_assemble_time,nnz_factors,estimated_bytes,flagged,"
     << kConfigColumns << '\n';
  for (const auto& r : rows) {
    os << r.workers << ',' << r.full_time << ',' << r.modified_time << ',' << r.full_iters << ',' << r.modified_iters
       << ',' << (r.full_converged ? 1 : 0) << ',' << (r.modified_converged ? 1 : 0) << ',' << r.full_assemble_time
       << ',' << r.modified_assemble_time << ',' << r.nnz_factors << ',' << r.estimated_bytes << ','
       << (r.flagged ? 1 : 0) << ',';
    CaseConfig c = base;
    c.workers = r.workers;
    config_cells(os, c);
    os << '\n';
  }
  check_stream(os);
}

}  // namespace nsmf
