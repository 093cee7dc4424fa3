// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nsmf/assembly.hpp"
#include "nsmf/bench.hpp"
#include "nsmf/direct_solver.hpp"
#include "nsmf/newton.hpp"
#include "nsmf/ordering.hpp"
#include "test_support.hpp"

using namespace nsmf;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;
double worst_backward_error = 0.0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("CRITERION %d %s: %s | %s\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Timed {
  CaseReport report;
  std::vector<double> state;
  double wall = 0.0;
};

Timed timed_run(const CaseConfig& c) {
  Timed t;
  const auto t0 = Clock::now();
  t.report = run_case(c, &t.state);
  t.wall = seconds_since(t0);
  worst_backward_error = std::max(worst_backward_error, t.report.max_backward_error);
  return t;
}

CaseConfig case_2d(int nx, int ny, NewtonVariant v) {
  CaseConfig c;
  c.nx = nx;
  c.ny = ny;
  c.reynolds = 100.0;
  c.variant = v;
  c.tol = 1e-6;
  c.repeats = 1;
  c.continuation = false;
  return c;
}

// u_max / u_mean for fully developed laminar flow in a square duct, from the
// Fourier series solution on (-1,1)^2.
double square_duct_peak_ratio() {
  const double pi = std::numbers::pi;
  double centre = 0.0, tanh_sum = 0.0;
  for (int n = 1; n < 400; n += 2) {
    const double sign = ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    const double k = n * pi / 2.0;
    centre += sign / std::pow(n, 3) * (1.0 - 1.0 / std::cosh(k));
    tanh_sum += std::tanh(k) / std::pow(n, 5);
  }
  const double u_max = 16.0 / std::pow(pi, 3) * centre;
  const double u_mean = (1.0 / 3.0) * (1.0 - 192.0 / std::pow(pi, 5) * tanh_sum);
  return u_max / u_mean;
}

// Criteria 1, 3 and 10 share the 2D runs.
struct TwoDRuns {
  Timed full, modified;
};

TwoDRuns criterion_1() {
  TwoDRuns runs;
  const CaseConfig c = case_2d(40, 20, NewtonVariant::Full);
  runs.full = timed_run(c);
  const Mesh mesh = build_channel_mesh_2d(c.nx, c.ny, c.geometry);
  const DofMap dofs = build_dof_map(mesh, Formulation::Mixed2D);
  const PoiseuilleCheck p = validate_poiseuille(mesh, dofs, runs.full.state, 0.9);
  const double rel = p.max_error / 1.5;
  const bool ok = runs.full.report.converged && rel <= 0.02 && p.flux_defect <= 1e-3 && runs.full.wall < 60.0;
  verdict(1, ok, "2D Poiseuille profile at x = 0.9 L (40x20, Re 100)",
          fmt("converged=%d max_rel_error=%.4f (<=0.02) flux_defect=%.3e (<=1e-3) inlet_flux=%.6f "
              "conservation_defect=%.3e wall=%.2fs (<60)",
              runs.full.report.converged, rel, p.flux_defect, p.inlet_flux, p.conservation_defect, runs.full.wall));

  CaseConfig m = c;
  m.variant = NewtonVariant::Modified;
  runs.modified = timed_run(m);
  return runs;
}

void criterion_2() {
  CaseConfig c = default_case_3d();
  c.penalty = 1e7;
  c.repeats = 1;
  c.continuation = false;
  const Timed t = timed_run(c);
  const Mesh mesh = build_channel_mesh_3d(c.nx, c.ny, c.nz, c.geometry);
  const DofMap dofs = build_dof_map(mesh, Formulation::Penalty3D);
  const DuctCheck d = validate_duct(mesh, dofs, t.state, c.flow_params());
  const double target = square_duct_peak_ratio();
  const double dev = std::abs(d.peak_ratio - target) / target;
  const bool ok = t.report.converged && dev <= 0.10 && d.pressure_monotone && t.wall < 300.0;
  verdict(2, ok, "3D duct (20x8x8, Re 50, penalty 1e7)",
          fmt("converged=%d u_max=%.4f u_mean=%.4f peak_ratio=%.4f developed_ratio=%.4f deviation=%.3f (<=0.10) "
              "pressure_monotone=%d wall=%.2fs (<300)",
              t.report.converged, d.max_axial_velocity, d.mean_axial_velocity, d.peak_ratio, target, dev,
              d.pressure_monotone, t.wall));
}

void criterion_3(const TwoDRuns& r) {
  const auto& e = r.full.report.corrections;
  double order = 0.0;
  bool have = e.size() >= 3;
  if (have) {
    const double e1 = e[e.size() - 3], e2 = e[e.size() - 2], e3 = e[e.size() - 1];
    order = std::log(e3 / e2) / std::log(e2 / e1);
  }
  const auto& m = r.modified.report;
  const bool ok = have && order >= 1.5 && m.converged && m.factorize_count == 1 &&
                  m.iterations > r.full.report.iterations;
  std::string tail;
  for (double v : e) tail += fmt("%.2e ", v);
  verdict(3, ok, "Newton convergence order and Modified Newton behaviour",
          fmt("full_corrections=[%s] order=%.2f (>=1.5) modified_converged=%d modified_factorize=%d (==1) "
              "modified_iters=%d > full_iters=%d",
              tail.c_str(), order, m.converged, m.factorize_count, m.iterations, r.full.report.iterations));
}

void criterion_4() {
  const Timed full = timed_run(case_2d(100, 100, NewtonVariant::Full));
  const Timed mod = timed_run(case_2d(100, 100, NewtonVariant::Modified));
  const double tf = full.report.times.total, tm = mod.report.times.total;
  const bool ok = full.report.converged && mod.report.converged && tm <= tf;
  verdict(4, ok, "Modified vs Full Newton total time (100x100, Re 100)",
          fmt("full: converged=%d iters=%d time=%.2fs | modified: converged=%d iters=%d time=%.2fs | ratio=%.3f (<=1)",
              full.report.converged, full.report.iterations, tf, mod.report.converged, mod.report.iterations, tm,
              tm / tf));
}

void criterion_5() {
  const OrderingMethod methods[] = {OrderingMethod::Natural, OrderingMethod::RCM, OrderingMethod::MinDegree,
                                    OrderingMethod::NestedDissection};
  CaseConfig c2 = case_2d(100, 100, NewtonVariant::Full);
  const auto rows2 = compare_orderings(c2, methods, true);
  CaseConfig c3 = default_case_3d();
  c3.repeats = 1;
  const auto rows3 = compare_orderings(c3, methods, true);
  auto nnz = [](const std::vector<OrderingRow>& rows, OrderingMethod m) {
    return std::find_if(rows.begin(), rows.end(), [m](const OrderingRow& r) { return r.method == m; })->nnz_factors;
  };
  const OrderingRow& nd2 = rows2[3];
  bool nd_min = true;
  for (const auto& r : rows2) nd_min = nd_min && nd2.estimated_bytes <= r.estimated_bytes;
  const bool ok = nnz(rows2, OrderingMethod::NestedDissection) <= nnz(rows2, OrderingMethod::Natural) &&
                  nnz(rows3, OrderingMethod::NestedDissection) <= nnz(rows3, OrderingMethod::Natural) && nd_min;
  std::string detail = "2D 100x100 nnz:";
  for (const auto& r : rows2) detail += fmt(" %s=%lld", std::string(to_string(r.method)).c_str(), (long long)r.nnz_factors);
  detail += " | 3D 20x8x8 nnz:";
  for (const auto& r : rows3) detail += fmt(" %s=%lld", std::string(to_string(r.method)).c_str(), (long long)r.nnz_factors);
  detail += fmt(" | nd_minimum_memory_2d=%d", nd_min);
  verdict(5, ok, "Nested dissection fill and memory", detail);
}

LinearSystem fem_system(bool three_d, int nx, int ny, int nz, std::mt19937_64& rng) {
  const Mesh mesh = three_d ? build_channel_mesh_3d(nx, ny, nz, {}) : build_channel_mesh_2d(nx, ny, {});
  const DofMap dofs = build_dof_map(mesh, three_d ? Formulation::Penalty3D : Formulation::Mixed2D);
  FlowParams p;
  if (three_d) {
    p.formulation = Formulation::Penalty3D;
    p.reynolds = 50.0;
    p.penalty = 1e7;
  }
  auto x = initial_state(mesh, dofs);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& v : x) v += u(rng);
  return apply_dirichlet(assemble_global(mesh, dofs, partition_elements(mesh, 1), x, p), mesh, dofs);
}

// Reference solution: dense LU plus refinement with long double residuals.
std::vector<double> refined_reference(const SparseCSR& a, const std::vector<double>& b) {
  const auto dense = a.to_dense();
  std::vector<double> x = nsmf::testing::dense_solve(dense, b);
  for (int it = 0; it < 5; ++it) {
    std::vector<double> r(b.size());
    for (std::int32_t i = 0; i < a.n; ++i) {
      const auto row = static_cast<std::size_t>(i);
      long double acc = b[row];
      for (auto k = a.row_ptr[row]; k < a.row_ptr[row + 1]; ++k) {
        acc -= static_cast<long double>(a.vals[static_cast<std::size_t>(k)]) * x[static_cast<std::size_t>(a.col_idx[static_cast<std::size_t>(k)])];
      }
      r[row] = static_cast<double>(acc);
    }
    const auto d = nsmf::testing::dense_solve(dense, r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += d[i];
  }
  return x;
}

void criterion_6() {
  std::mt19937_64 rng(606);
  const OrderingMethod methods[] = {OrderingMethod::Natural, OrderingMethod::RCM, OrderingMethod::MinDegree,
                                    OrderingMethod::NestedDissection};
  double worst_random = 0.0, worst_fem = 0.0, worst_bwd = 0.0;
  std::uniform_int_distribution<std::int32_t> size(2, 200);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int t = 0; t < 25; ++t) {
    const std::int32_t n = size(rng);
    const SparseCSR a = nsmf::testing::random_matrix(rng, n, 4.0);
    std::vector<double> b(static_cast<std::size_t>(n));
    for (auto& v : b) v = val(rng);
    const auto ref = nsmf::testing::dense_solve(a.to_dense(), b);
    for (auto m : methods) {
      SolveReport rep;
      worst_random = std::max(worst_random, nsmf::testing::max_rel_diff(solve_direct(a, b, m, &rep), ref));
      worst_bwd = std::max(worst_bwd, rep.backward_error);
    }
  }
  for (auto [nx, ny] : {std::pair{8, 8}, std::pair{8, 4}, std::pair{4, 4}, std::pair{2, 2}}) {
    const LinearSystem s = fem_system(false, nx, ny, 0, rng);
    const auto ref = nsmf::testing::dense_solve(s.matrix.to_dense(), s.rhs);
    for (auto m : methods) {
      SolveReport rep;
      worst_fem = std::max(worst_fem, nsmf::testing::max_rel_diff(solve_direct(s.matrix, s.rhs, m, &rep), ref));
      worst_bwd = std::max(worst_bwd, rep.backward_error);
    }
  }
  // 3D penalty systems (lambda = 1e7) are reported alongside; their accuracy is
  // limited by conditioning, shown by the oracle's own distance to a refined reference.
  double pen_vs_oracle = 0.0, pen_vs_ref = 0.0, oracle_vs_ref = 0.0;
  for (auto [nx, ny, nz] : {std::array{8, 4, 4}, std::array{4, 4, 4}}) {
    const LinearSystem s = fem_system(true, nx, ny, nz, rng);
    const auto oracle = nsmf::testing::dense_solve(s.matrix.to_dense(), s.rhs);
    const auto ref = refined_reference(s.matrix, s.rhs);
    oracle_vs_ref = std::max(oracle_vs_ref, nsmf::testing::max_rel_diff(oracle, ref));
    for (auto m : methods) {
      SolveReport rep;
      const auto x = solve_direct(s.matrix, s.rhs, m, &rep);
      pen_vs_oracle = std::max(pen_vs_oracle, nsmf::testing::max_rel_diff(x, oracle));
      pen_vs_ref = std::max(pen_vs_ref, nsmf::testing::max_rel_diff(x, ref));
      worst_bwd = std::max(worst_bwd, rep.backward_error);
    }
  }
  const bool ok = worst_random <= 1e-8 && worst_fem <= 1e-8 && worst_bwd <= 1e-10 && worst_backward_error <= 1e-10;
  verdict(6, ok, "Direct solver vs dense LU oracle (25 random, 2D FEM meshes up to 8x8)",
          fmt("random_max_rel_diff=%.2e fem2d_max_rel_diff=%.2e (<=1e-8) solve_backward_error=%.2e "
              "benchmark_backward_error=%.2e (<=1e-10) | not graded, 3D penalty 1e7: vs_oracle=%.2e "
              "vs_refined_reference=%.2e oracle_vs_refined_reference=%.2e",
              worst_random, worst_fem, worst_bwd, worst_backward_error, pen_vs_oracle, pen_vs_ref, oracle_vs_ref));
}

void criterion_7() {
  std::mt19937_64 rng(707);
  const OrderingMethod methods[] = {OrderingMethod::Natural, OrderingMethod::RCM, OrderingMethod::MinDegree,
                                    OrderingMethod::NestedDissection};
  std::uniform_int_distribution<std::int32_t> size(1, 50);
  std::uniform_real_distribution<double> degree(0.5, 6.0);
  int mismatches = 0, checks = 0;
  for (int t = 0; t < 200; ++t) {
    const SparsityPattern g = nsmf::testing::random_pattern(rng, size(rng), degree(rng));
    for (auto m : methods) {
      const Permutation p = compute_ordering(g, m);
      ++checks;
      if (!p.is_valid() || symbolic_fill(g, p).nnz_factors != nsmf::testing::boolean_fill(g, p.perm)) ++mismatches;
    }
  }
  verdict(7, mismatches == 0, "Symbolic fill vs boolean elimination",
          fmt("patterns=200 checks=%d mismatches=%d", checks, mismatches));
}

void criterion_8() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst2 = 0.0, worst3 = 0.0;
  {
    const Mesh mesh = build_channel_mesh_2d(40, 20, {});
    const DofMap dofs = build_dof_map(mesh, Formulation::Mixed2D);
    FlowParams p;
    std::uniform_int_distribution<std::size_t> pick(0, mesh.num_elements() - 1);
    for (int s = 0; s < 50; ++s) {
      std::vector<Point> coords(9);
      std::vector<double> state(static_cast<std::size_t>(dofs.n_dofs));
      for (auto& v : state) v = u(rng);
      std::vector<double> local(kDofs2d);
      gather_element(mesh, dofs, pick(rng), state, coords, local);
      const std::span<const Point, 9> c(coords.data(), 9);
      const ElementSystem es = element_system_2d(c, std::span<const double, kDofs2d>(local.data(), kDofs2d), p);
      worst2 = std::max(worst2, nsmf::testing::fd_jacobian_error(
                                    [&](const std::vector<double>& x) {
                                      return element_residual_2d(c, std::span<const double, kDofs2d>(x.data(), kDofs2d), p);
                                    },
                                    local, es.jacobian));
    }
  }
  {
    const Mesh mesh = build_channel_mesh_3d(20, 8, 8, {});
    const DofMap dofs = build_dof_map(mesh, Formulation::Penalty3D);
    FlowParams p;
    p.formulation = Formulation::Penalty3D;
    p.reynolds = 50.0;
    p.penalty = 1e7;
    std::uniform_int_distribution<std::size_t> pick(0, mesh.num_elements() - 1);
    for (int s = 0; s < 50; ++s) {
      std::vector<Point> coords(8);
      std::vector<double> state(static_cast<std::size_t>(dofs.n_dofs));
      for (auto& v : state) v = u(rng);
      std::vector<double> local(kDofs3d);
      gather_element(mesh, dofs, pick(rng), state, coords, local);
      const std::span<const Point, 8> c(coords.data(), 8);
      const ElementSystem es = element_system_3d(c, std::span<const double, kDofs3d>(local.data(), kDofs3d), p);
      worst3 = std::max(worst3, nsmf::testing::fd_jacobian_error(
                                    [&](const std::vector<double>& x) {
                                      return element_residual_3d(c, std::span<const double, kDofs3d>(x.data(), kDofs3d), p);
                                    },
                                    local, es.jacobian));
    }
  }
  verdict(8, worst2 <= 1e-5 && worst3 <= 1e-5, "Element Jacobian vs central differences",
          fmt("samples=50+50 worst_2d=%.2e worst_3d=%.2e (<=1e-5)", worst2, worst3));
}

void criterion_9() {
  const Mesh mesh = build_channel_mesh_2d(16, 16, {});
  const DofMap dofs = build_dof_map(mesh, Formulation::Mixed2D);
  FlowParams params;
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x = initial_state(mesh, dofs);
  for (auto& v : x) v += 0.1 * u(rng);

  const int workers[] = {1, 2, 4, 8};
  LinearSystem ref;
  std::vector<double> ref_state;
  bool same_pattern = true;
  double value_diff = 0.0, state_diff = 0.0;
  double t1 = 0.0, t4 = 0.0;
  NewtonConfig cfg;
  for (int p : workers) {
    Assembler assembler(mesh, dofs, p, params);
    LinearSystem s = assembler.assemble(x);
    std::vector<double> times;
    for (int r = 0; r < 5; ++r) {
      const auto t0 = Clock::now();
      s = assembler.assemble(x);
      times.push_back(seconds_since(t0));
    }
    std::sort(times.begin(), times.end());
    if (p == 1) t1 = times[2];
    if (p == 4) t4 = times[2];
    cfg.workers = p;
    const NonlinearResult nr = solve_nonlinear(mesh, dofs, params, cfg);
    worst_backward_error = std::max(worst_backward_error, nr.history.max_backward_error());
    if (p == 1) {
      ref = std::move(s);
      ref_state = nr.state;
      continue;
    }
    same_pattern = same_pattern && s.matrix.same_pattern(ref.matrix);
    if (same_pattern) {
      for (std::size_t k = 0; k < s.matrix.vals.size(); ++k) value_diff = std::max(value_diff, std::abs(s.matrix.vals[k] - ref.matrix.vals[k]));
    }
    for (std::size_t i = 0; i < s.rhs.size(); ++i) value_diff = std::max(value_diff, std::abs(s.rhs[i] - ref.rhs[i]));
    for (std::size_t i = 0; i < nr.state.size(); ++i) state_diff = std::max(state_diff, std::abs(nr.state[i] - ref_state[i]));
  }
  const unsigned cores = std::thread::hardware_concurrency();
  const bool timing_applies = cores >= 4;
  const double ratio = t4 / t1;
  const bool ok = same_pattern && value_diff <= 1e-12 && state_diff <= 1e-10 && (!timing_applies || ratio <= 0.8);
  verdict(9, ok, "Partition invariance for p in {1,2,4,8} (16x16)",
          fmt("same_pattern=%d max_value_diff=%.2e (<=1e-12) max_state_diff=%.2e (<=1e-10) assembly_t4/t1=%.3f %s",
              same_pattern, value_diff, state_diff, ratio,
              timing_applies ? "(<=0.8)" : fmt("(timing clause needs >=4 cores; host has %u, not applicable)", cores).c_str()));
}

void criterion_10(const TwoDRuns& r) {
  const auto& f = r.full.report;
  const auto& m = r.modified.report;
  const bool ok = f.analyze_count == 1 && m.analyze_count == 1 && m.factorize_count == 1 && f.factorize_count == f.iterations;
  verdict(10, ok, "Analysis once per solve, single factorization for Modified Newton",
          fmt("full: analyze=%d factorize=%d iters=%d | modified: analyze=%d factorize=%d iters=%d", f.analyze_count,
              f.factorize_count, f.iterations, m.analyze_count, m.factorize_count, m.iterations));
}

void guarded(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    verdict(id, false, "raised an exception", e.what());
  }
}

}  // namespace

int main() {
  TwoDRuns runs;
  bool have_runs = false;
  guarded(1, [&] {
    runs = criterion_1();
    have_runs = true;
  });
  guarded(2, criterion_2);
  guarded(3, [&] {
    if (!have_runs) throw std::runtime_error("criterion 1 runs unavailable");
    criterion_3(runs);
  });
  guarded(4, criterion_4);
  guarded(5, criterion_5);
  guarded(7, criterion_7);
  guarded(8, criterion_8);
  guarded(9, criterion_9);
  guarded(6, criterion_6);
  guarded(10, [&] {
    if (!have_runs) throw std::runtime_error("criterion 1 runs unavailable");
    criterion_10(runs);
  });
  std::printf("SUMMARY: %d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
