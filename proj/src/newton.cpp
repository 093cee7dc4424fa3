#include "nsmf/newton.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <thread>

namespace nsmf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string_view to_string(NewtonVariant v) {
  return v == NewtonVariant::Full ? "full" : "modified";
}

NewtonVariant newton_variant_from_string(std::string_view s) {
  if (s == "full") return NewtonVariant::Full;
  if (s == "modified") return NewtonVariant::Modified;
  throw std::invalid_argument("unknown Newton variant '" + std::string(s) + "'");
}

void NewtonConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (refactor_every < 0) throw std::invalid_argument("refactor_every must be non-negative");
  if (max_halvings < 0) throw std::invalid_argument("max_halvings must be non-negative");
}

int ConvergenceHistory::analyze_count() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.analyzed; }));
}

int ConvergenceHistory::factorize_count() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.factorized; }));
}

#define NSMF_SUM_FIELD(name)                                  \
  double ConvergenceHistory::name() const {                   \
    double t = 0.0;                                           \
    for (const auto& r : records) t += r.name;                \
    return t;                                                 \
  }
NSMF_SUM_FIELD(assemble_time)
NSMF_SUM_FIELD(analyze_time)
NSMF_SUM_FIELD(factorize_time)
NSMF_SUM_FIELD(solve_time)
#undef NSMF_SUM_FIELD

double ConvergenceHistory::total_time() const {
  return assemble_time() + analyze_time() + factorize_time() + solve_time();
}

double ConvergenceHistory::max_backward_error() const {
  double e = 0.0;
  for (const auto& r : records) e = std::max(e, r.backward_error);
  return e;
}

std::vector<double> initial_state(const Mesh& mesh, const DofMap& dofs) {
  std::vector<double> x(static_cast<std::size_t>(dofs.n_dofs), 0.0);
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    if (mesh.boundary_tags[v] != BoundaryTag::Wall) x[static_cast<std::size_t>(dofs.velocity(v, 0))] = 1.0;
  }
  return x;
}

void newton_step(std::span<double> state, std::span<const double> delta, double alpha) {
  if (state.size() != delta.size()) throw std::invalid_argument("correction length mismatch");
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!std::isfinite(delta[i])) throw std::domain_error("non-finite Newton correction at dof " + std::to_string(i));
  }
  for (std::size_t i = 0; i < state.size(); ++i) state[i] += alpha * delta[i];
}

std::vector<double> residual_only_assembly(const Mesh& mesh, const DofMap& dofs, const Partition& partition,
                                           std::span<const double> state, const FlowParams& params) {
  std::vector<TripletBatch> batches(static_cast<std::size_t>(partition.p));
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(batches.size());
  for (int w = 0; w < partition.p; ++w) {
    threads.emplace_back([&, w] {
      try {
        batches[static_cast<std::size_t>(w)] = assemble_partition_residual(mesh, dofs, partition, w, state, params);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<double> rhs = merge_triplets(batches, dofs.n_dofs).rhs;
  for (std::int32_t i : dirichlet_dofs(mesh, dofs)) rhs[static_cast<std::size_t>(i)] = 0.0;
  return rhs;
}

NonlinearResult solve_nonlinear(const Mesh& mesh, const DofMap& dofs, const FlowParams& params,
                                const NewtonConfig& config, std::span<const double> start) {
  config.validate();
  params.validate();
  NonlinearResult result;
  if (start.empty()) {
    result.state = initial_state(mesh, dofs);
  } else {
    if (start.size() != static_cast<std::size_t>(dofs.n_dofs)) throw std::invalid_argument("start state length mismatch");
    result.state.assign(start.begin(), start.end());
    // Dirichlet data is imposed on the starting state so increments stay zero there.
    const auto values = dirichlet_values(mesh, dofs);
    for (std::int32_t i : dirichlet_dofs(mesh, dofs)) result.state[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(i)];
  }
  auto& state = result.state;
  auto& history = result.history;

  Assembler assembler(mesh, dofs, config.workers, params);
  std::optional<SymbolicFactorization> symbolic;
  std::optional<NumericFactor> factor;
  std::vector<double> rhs;
  double previous = -1.0;
  const std::vector<std::int32_t> constrained = dirichlet_dofs(mesh, dofs);

  for (int k = 1; k <= config.max_iters; ++k) {
    IterationRecord rec;
    rec.iter = k;
    const bool refresh = !factor || config.variant == NewtonVariant::Full ||
                         (config.refactor_every > 0 && (k - 1) % config.refactor_every == 0);

    auto t0 = Clock::now();
    std::optional<LinearSystem> system;
    if (refresh) {
      system = assembler.assemble(state);
      rhs = std::move(system->rhs);
    } else {
      rhs = assembler.assemble_residual(state);
    }
    rec.assemble_time = seconds_since(t0);
    rec.residual_norm = norm_inf(rhs);

    if (!symbolic) {
      t0 = Clock::now();
      SparsityPattern pattern = symmetrize_pattern(system->matrix);
      pattern.coords = dofs.dof_coordinates(mesh);
      symbolic = analyze(pattern, config.ordering, config.analyze);
      rec.analyze_time = seconds_since(t0);
      rec.analyzed = true;
    }
    if (refresh) {
      t0 = Clock::now();
      factor = factorize(*symbolic, system->matrix);
      rec.factorize_time = seconds_since(t0);
      rec.factorized = true;
    }

    t0 = Clock::now();
    SolveReport report;
    std::vector<double> delta = solve(*factor, rhs, &report);
    // Constrained rows are identity rows.
    for (std::int32_t i : constrained) delta[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)];
    rec.solve_time = seconds_since(t0);
    rec.backward_error = report.backward_error;
    rec.refinement_steps = report.refinement_steps;

    const double dnorm = norm_inf(delta);
    rec.correction_norm = dnorm;
    if (!std::isfinite(dnorm) || dnorm > config.divergence_limit) {
      history.records.push_back(rec);
      throw DivergenceError("Newton iteration diverged at iteration " + std::to_string(k) +
                                " (||dX||_inf = " + std::to_string(dnorm) + ")",
                            history);
    }
    double alpha = config.alpha;
    for (int h = 0; h < config.max_halvings && previous > 0.0 && dnorm > 10.0 * previous; ++h) alpha *= 0.5;
    rec.alpha = alpha;
    newton_step(state, delta, alpha);
    history.records.push_back(rec);
    previous = dnorm;
    if (dnorm <= config.tol) {
      history.converged = true;
      break;
    }
  }

  result.memory = memory_report(*symbolic, *factor);
  result.delayed_pivots = factor->delayed_pivots();
  result.perturbed_pivots = factor->perturbations().size();
  return result;
}

}  // namespace nsmf
