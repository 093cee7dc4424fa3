#include "nsmf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "nsmf/assembly.hpp"

namespace nsmf {

namespace {

using Clock = std::chrono::steady_clock;

Mesh build_mesh(const CaseConfig& c) {
  return c.formulation == Formulation::Mixed2D ? build_channel_mesh_2d(c.nx, c.ny, c.geometry)
                                               : build_channel_mesh_3d(c.nx, c.ny, c.nz, c.geometry);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void add_history(PhaseTimes& t, const ConvergenceHistory& h) {
  t.assemble += h.assemble_time();
  t.analyze += h.analyze_time();
  t.factorize += h.factorize_time();
  t.solve += h.solve_time();
  t.total += h.total_time();
}

void fill_from_history(CaseReport& r, const ConvergenceHistory& h) {
  r.iterations = h.iterations();
  r.converged = h.converged;
  r.analyze_count = h.analyze_count();
  r.factorize_count = h.factorize_count();
  r.max_backward_error = h.max_backward_error();
  r.corrections.clear();
  for (const auto& rec : h.records) r.corrections.push_back(rec.correction_norm);
}

}  // namespace

void CaseConfig::validate() const {
  if (nx < 1 || ny < 1) throw std::invalid_argument("mesh counts must be positive");
  if (formulation == Formulation::Penalty3D && nz < 1) throw std::invalid_argument("3D cases need nz >= 1");
  if (formulation == Formulation::Mixed2D && nz != 0) throw std::invalid_argument("2D cases take no nz");
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  flow_params().validate();
  newton_config().validate();
}

FlowParams CaseConfig::flow_params() const {
  FlowParams p;
  p.reynolds = reynolds;
  p.penalty = penalty;
  p.formulation = formulation;
  return p;
}

NewtonConfig CaseConfig::newton_config() const {
  NewtonConfig n;
  n.variant = variant;
  n.alpha = alpha;
  n.tol = tol;
  n.max_iters = max_iters;
  n.workers = workers;
  n.refactor_every = refactor_every;
  n.ordering = ordering;
  return n;
}

CaseConfig default_case_3d() {
  CaseConfig c;
  c.formulation = Formulation::Penalty3D;
  c.nx = 20;
  c.ny = 8;
  c.nz = 8;
  c.reynolds = 50.0;
  return c;
}

CaseReport run_case(const CaseConfig& config, std::vector<double>* final_state) {
  config.validate();
  const Mesh mesh = build_mesh(config);
  const DofMap dofs = build_dof_map(mesh, config.formulation);
  const NewtonConfig newton = config.newton_config();
  auto params_at = [&](double re) {
    FlowParams p = config.flow_params();
    p.reynolds = re;
    return p;
  };

  CaseReport report;
  report.config = config;
  report.n_dofs = dofs.n_dofs;
  std::vector<PhaseTimes> samples;
  NonlinearResult result;

  for (int rep = 0; rep < config.repeats; ++rep) {
    PhaseTimes t;
    report.reynolds_path.clear();
    bool ok = false;
    std::string failure;
    try {
      result = solve_nonlinear(mesh, dofs, params_at(config.reynolds), newton);
      add_history(t, result.history);
      ok = result.history.converged;
      report.reynolds_path.push_back(config.reynolds);
    } catch (const DivergenceError& e) {
      add_history(t, e.history());
      fill_from_history(report, e.history());
      failure = e.what();
    }

    if (!ok && config.continuation) {
      report.reynolds_path.clear();
      std::vector<double> start;
      try {
        NewtonConfig ramp = newton;
        ramp.variant = NewtonVariant::Full;
        for (double re : {10.0, 50.0}) {
          if (re >= config.reynolds) break;
          NonlinearResult stage = solve_nonlinear(mesh, dofs, params_at(re), ramp, start);
          add_history(t, stage.history);
          report.reynolds_path.push_back(re);
          if (!stage.history.converged) break;
          start = std::move(stage.state);
        }
        result = solve_nonlinear(mesh, dofs, params_at(config.reynolds), newton, start);
        add_history(t, result.history);
        report.reynolds_path.push_back(config.reynolds);
        failure.clear();
      } catch (const DivergenceError& e) {
        add_history(t, e.history());
        fill_from_history(report, e.history());
        failure = e.what();
      }
    }
    if (!failure.empty()) {
      report.times = t;
      throw CaseFailure(failure, report);
    }
    samples.push_back(t);
  }

  auto med = [&](double PhaseTimes::*field) {
    std::vector<double> v;
    for (const auto& s : samples) v.push_back(s.*field);
    return median(std::move(v));
  };
  report.times = {med(&PhaseTimes::assemble), med(&PhaseTimes::analyze), med(&PhaseTimes::factorize),
                  med(&PhaseTimes::solve), med(&PhaseTimes::total)};
  fill_from_history(report, result.history);
  report.memory = result.memory;
  report.delayed_pivots = result.delayed_pivots;
  report.perturbed_pivots = static_cast<std::int64_t>(result.perturbed_pivots);

  if (report.converged) {
    if (config.formulation == Formulation::Mixed2D) {
      if (config.geometry.length >= 10.0 * config.geometry.height) {
        const PoiseuilleCheck check = validate_poiseuille(mesh, dofs, result.state);
        report.validation.profile_error = check.max_error;
        report.validation.profile_relative_error = check.max_error / 1.5;
        report.validation.flux_defect = check.flux_defect;
        report.validation.conservation_defect = check.conservation_defect;
      }
    } else {
      const DuctCheck check = validate_duct(mesh, dofs, result.state, config.flow_params());
      report.validation.max_axial_velocity = check.max_axial_velocity;
      report.validation.axial_peak_ratio = check.peak_ratio;
      report.validation.pressure_monotone = check.pressure_monotone;
    }
  }
  if (final_state != nullptr) *final_state = std::move(result.state);
  return report;
}

PoiseuilleCheck validate_poiseuille(const Mesh& mesh, const DofMap& dofs, std::span<const double> state,
                                    double station) {
  if (mesh.dim != 2 || dofs.formulation != Formulation::Mixed2D) throw std::invalid_argument("Poiseuille check needs a 2D state");
  if (state.size() != static_cast<std::size_t>(dofs.n_dofs)) throw std::invalid_argument("state length mismatch");
  const ChannelGeometry& g = mesh.geometry;
  if (g.length < 10.0 * g.height) throw std::invalid_argument("channel must be at least ten heights long");
  if (!(station > 0.0 && station <= 1.0)) throw std::invalid_argument("station must lie in (0, 1]");

  const int mx = 2 * mesh.nx + 1;
  const double hx = g.length / mesh.nx;
  const double x0 = station * g.length;
  const int ex = std::min(static_cast<int>(x0 / hx), mesh.nx - 1);
  const double xi = 2.0 * (x0 - ex * hx) / hx - 1.0;
  const double shape[3] = {0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)};

  PoiseuilleCheck check;
  const int my = 2 * mesh.ny + 1;
  for (int iy = 0; iy < my; ++iy) {
    double u = 0.0;
    for (int a = 0; a < 3; ++a) {
      const auto node = static_cast<std::size_t>(iy * mx + 2 * ex + a);
      u += shape[a] * state[static_cast<std::size_t>(dofs.velocity(node, 0))];
    }
    const double y = mesh.node_coords[static_cast<std::size_t>(iy * mx)][1];
    const double yb = y / g.height;
    check.y.push_back(y);
    check.u.push_back(u);
    check.u_exact.push_back(6.0 * yb * (1.0 - yb));
    check.max_error = std::max(check.max_error, std::abs(u - check.u_exact.back()));
  }
  // Simpson's rule per element is exact for the quadratic interpolant.
  auto column_flux = [&](auto&& u_at) {
    double q = 0.0;
    for (int ey = 0; ey < mesh.ny; ++ey) {
      const auto b = static_cast<std::size_t>(2 * ey);
      q += (check.y[b + 2] - check.y[b]) / 6.0 * (u_at(b) + 4.0 * u_at(b + 1) + u_at(b + 2));
    }
    return q / g.height;
  };
  check.flux = column_flux([&](std::size_t iy) { return check.u[iy]; });
  check.inlet_flux = column_flux([&](std::size_t iy) {
    return state[static_cast<std::size_t>(dofs.velocity(iy * static_cast<std::size_t>(mx), 0))];
  });
  check.conservation_defect = std::abs(check.flux - check.inlet_flux);
  check.flux_defect = std::abs(check.flux - 1.0);
  return check;
}

DuctCheck validate_duct(const Mesh& mesh, const DofMap& dofs, std::span<const double> state, const FlowParams& params) {
  if (mesh.dim != 3 || dofs.formulation != Formulation::Penalty3D) throw std::invalid_argument("duct check needs a 3D state");
  if (state.size() != static_cast<std::size_t>(dofs.n_dofs)) throw std::invalid_argument("state length mismatch");
  DuctCheck check;
  const int mx = mesh.nx + 1, my = mesh.ny + 1, mz = mesh.nz + 1;
  const int mid = mesh.nx / 2;
  check.max_axial_velocity = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < mz; ++k) {
    for (int j = 0; j < my; ++j) {
      const auto node = static_cast<std::size_t>((k * my + j) * mx + mid);
      check.max_axial_velocity = std::max(check.max_axial_velocity, state[static_cast<std::size_t>(dofs.velocity(node, 0))]);
    }
  }

  // Mean of the bilinear interpolant over the section: corner average per face.
  auto u_at = [&](int j, int k) {
    return state[static_cast<std::size_t>(dofs.velocity(static_cast<std::size_t>((k * my + j) * mx + mid), 0))];
  };
  double sum = 0.0;
  for (int k = 0; k < mesh.nz; ++k) {
    for (int j = 0; j < mesh.ny; ++j) sum += 0.25 * (u_at(j, k) + u_at(j + 1, k) + u_at(j, k + 1) + u_at(j + 1, k + 1));
  }
  check.mean_axial_velocity = sum / (mesh.ny * mesh.nz);
  check.peak_ratio = check.max_axial_velocity / check.mean_axial_velocity;

  const std::vector<double> p = recover_pressure_3d(mesh, dofs, state, params);
  const int j0 = (mesh.ny - 1) / 2, j1 = mesh.ny / 2;
  const int k0 = (mesh.nz - 1) / 2, k1 = mesh.nz / 2;
  for (int i = 0; i < mesh.nx; ++i) {
    double sum = 0.0;
    int count = 0;
    for (int k = k0; k <= k1; ++k) {
      for (int j = j0; j <= j1; ++j) {
        sum += p[static_cast<std::size_t>((k * mesh.ny + j) * mesh.nx + i)];
        ++count;
      }
    }
    check.core_pressure.push_back(sum / count);
  }
  check.pressure_monotone = true;
  for (std::size_t i = 1; i < check.core_pressure.size(); ++i) {
    if (!(check.core_pressure[i] < check.core_pressure[i - 1])) check.pressure_monotone = false;
  }
  return check;
}

std::vector<OrderingRow> compare_orderings(const CaseConfig& base, std::span<const OrderingMethod> methods,
                                           bool symbolic_only) {
  if (methods.size() < 2) throw std::invalid_argument("compare at least two orderings");
  std::vector<OrderingRow> rows;
  if (symbolic_only) {
    base.validate();
    const Mesh mesh = build_mesh(base);
    const DofMap dofs = build_dof_map(mesh, base.formulation);
    Assembler assembler(mesh, dofs, base.workers, base.flow_params());
    const LinearSystem system = assembler.assemble(initial_state(mesh, dofs));
    SparsityPattern pattern = symmetrize_pattern(system.matrix);
    pattern.coords = dofs.dof_coordinates(mesh);
    for (OrderingMethod m : methods) {
      OrderingRow row;
      row.method = m;
      const auto t0 = Clock::now();
      const SymbolicFactorization sym = analyze(pattern, m);
      row.analyze_time = std::chrono::duration<double>(Clock::now() - t0).count();
      const MemoryStats mem = estimate_memory(sym);
      row.nnz_factors = mem.nnz_factors;
      row.peak_front = mem.peak_front;
      row.estimated_bytes = mem.estimated_bytes;
      rows.push_back(row);
    }
    return rows;
  }
  for (OrderingMethod m : methods) {
    CaseConfig c = base;
    c.ordering = m;
    const CaseReport r = run_case(c);
    OrderingRow row;
    row.method = m;
    row.solved = r.converged;
    row.iterations = r.iterations;
    row.time_per_iter = r.iterations > 0 ? r.times.total / r.iterations : 0.0;
    row.analyze_time = r.times.analyze;
    row.nnz_factors = r.memory.nnz_factors;
    row.peak_front = r.memory.peak_front;
    row.estimated_bytes = r.memory.estimated_bytes;
    rows.push_back(row);
  }
  return rows;
}

std::vector<VariantRow> compare_newton_variants(const CaseConfig& base, std::span<const int> worker_counts) {
  std::vector<VariantRow> rows;
  for (int p : worker_counts) {
    if (p < 1) throw std::invalid_argument("worker counts must be at least 1");
  }
  for (int p : worker_counts) {
    VariantRow row;
    row.workers = p;
    CaseConfig c = base;
    c.workers = p;
    auto run = [&](NewtonVariant v) {
      c.variant = v;
      try {
        return run_case(c);
      } catch (const CaseFailure& e) {
        return e.report();
      }
    };
    const CaseReport full = run(NewtonVariant::Full);
    const CaseReport modified = run(NewtonVariant::Modified);
    row.full_time = full.times.total;
    row.modified_time = modified.times.total;
    row.full_assemble_time = full.times.assemble;
    row.modified_assemble_time = modified.times.assemble;
    row.full_iters = full.iterations;
    row.modified_iters = modified.iterations;
    row.full_converged = full.converged;
    row.modified_converged = modified.converged;
    row.nnz_factors = full.memory.nnz_factors;
    row.estimated_bytes = full.memory.estimated_bytes;
    row.flagged = row.modified_iters < row.full_iters;
    rows.push_back(row);
  }
  return rows;
}

CaseReport without_timings(CaseReport report) {
  report.times = PhaseTimes{};
  return report;
}

}  // namespace nsmf
