#include "nsmf/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <thread>

namespace nsmf {

std::vector<std::size_t> Partition::loads() const {
  std::vector<std::size_t> out;
  for (int w = 0; w < p; ++w) out.push_back(load(w));
  return out;
}

Partition partition_elements(const Mesh& mesh, int p) {
  const std::size_t ne = mesh.num_elements();
  if (p < 1 || static_cast<std::size_t>(p) > ne) {
    throw std::invalid_argument("worker count " + std::to_string(p) + " outside [1, " + std::to_string(ne) + "]");
  }
  Partition part;
  part.p = p;
  part.begin.resize(static_cast<std::size_t>(p) + 1);
  part.owner.resize(ne);
  const std::size_t base = ne / static_cast<std::size_t>(p);
  const std::size_t extra = ne % static_cast<std::size_t>(p);
  std::size_t at = 0;
  for (int w = 0; w < p; ++w) {
    part.begin[static_cast<std::size_t>(w)] = at;
    const std::size_t len = base + (static_cast<std::size_t>(w) < extra ? 1 : 0);
    std::fill_n(part.owner.begin() + static_cast<std::ptrdiff_t>(at), len, w);
    at += len;
  }
  part.begin[static_cast<std::size_t>(p)] = at;
  return part;
}

ElementError::ElementError(std::size_t element, const std::string& what)
    : std::runtime_error("element " + std::to_string(element) + ": " + what), element_(element) {}

namespace {

// Evaluate one element into caller-provided buffers. `jac` may be null.
void evaluate_element(const Mesh& mesh, const DofMap& dofs, std::size_t e, std::span<const double> state,
                      const FlowParams& params, double* res, double* jac) {
  try {
    if (dofs.formulation == Formulation::Mixed2D) {
      std::array<Point, 9> coords{};
      std::array<double, kDofs2d> local{};
      gather_element(mesh, dofs, e, state, coords, local);
      if (jac != nullptr) {
        const ElementSystem sys = element_system_2d(coords, local, params);
        std::copy(sys.residual.begin(), sys.residual.end(), res);
        std::copy(sys.jacobian.begin(), sys.jacobian.end(), jac);
      } else {
        const auto r = element_residual_2d(coords, local, params);
        std::copy(r.begin(), r.end(), res);
      }
    } else {
      std::array<Point, 8> coords{};
      std::array<double, kDofs3d> local{};
      gather_element(mesh, dofs, e, state, coords, local);
      if (jac != nullptr) {
        const ElementSystem sys = element_system_3d(coords, local, params);
        std::copy(sys.residual.begin(), sys.residual.end(), res);
        std::copy(sys.jacobian.begin(), sys.jacobian.end(), jac);
      } else {
        const auto r = element_residual_3d(coords, local, params);
        std::copy(r.begin(), r.end(), res);
      }
    }
  } catch (const std::domain_error& err) {
    throw ElementError(e, err.what());
  }
}

void check_inputs(const DofMap& dofs, const Partition& partition, int worker, std::span<const double> state) {
  if (worker < 0 || worker >= partition.p) throw std::invalid_argument("worker id out of range");
  if (state.size() != static_cast<std::size_t>(dofs.n_dofs)) throw std::invalid_argument("state length mismatch");
}

// Run fn(worker) for every worker, one thread per worker beyond the first.
// The first exception (lowest worker id) is rethrown.
template <class Fn>
void run_workers(int p, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(p));
  auto guarded = [&](int w) {
    try {
      fn(w);
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (p == 1) {
    guarded(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(p));
    for (int w = 0; w < p; ++w) threads.emplace_back(guarded, w);
    for (auto& t : threads) t.join();
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace

TripletBatch assemble_partition(const Mesh& mesh, const DofMap& dofs, const Partition& partition, int worker,
                                std::span<const double> state, const FlowParams& params) {
  check_inputs(dofs, partition, worker, state);
  const auto d = static_cast<std::size_t>(dofs.dofs_per_element());
  const std::size_t lo = partition.begin[static_cast<std::size_t>(worker)];
  const std::size_t hi = partition.begin[static_cast<std::size_t>(worker) + 1];

  TripletBatch batch;
  batch.reserve((hi - lo) * d * d, (hi - lo) * d);
  std::vector<double> res(d), jac(d * d);
  for (std::size_t e = lo; e < hi; ++e) {
    evaluate_element(mesh, dofs, e, state, params, res.data(), jac.data());
    const auto gd = dofs.element_dofs(mesh, e);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        batch.rows.push_back(gd[r]);
        batch.cols.push_back(gd[c]);
        batch.vals.push_back(jac[r * d + c]);
      }
    }
    for (std::size_t r = 0; r < d; ++r) {
      batch.rhs_index.push_back(gd[r]);
      batch.rhs_value.push_back(-res[r]);
    }
  }
  return batch;
}

TripletBatch assemble_partition_residual(const Mesh& mesh, const DofMap& dofs, const Partition& partition, int worker,
                                         std::span<const double> state, const FlowParams& params) {
  check_inputs(dofs, partition, worker, state);
  const auto d = static_cast<std::size_t>(dofs.dofs_per_element());
  const std::size_t lo = partition.begin[static_cast<std::size_t>(worker)];
  const std::size_t hi = partition.begin[static_cast<std::size_t>(worker) + 1];
  TripletBatch batch;
  batch.reserve(0, (hi - lo) * d);
  std::vector<double> res(d);
  for (std::size_t e = lo; e < hi; ++e) {
    evaluate_element(mesh, dofs, e, state, params, res.data(), nullptr);
    const auto gd = dofs.element_dofs(mesh, e);
    for (std::size_t r = 0; r < d; ++r) {
      batch.rhs_index.push_back(gd[r]);
      batch.rhs_value.push_back(-res[r]);
    }
  }
  return batch;
}

LinearSystem assemble_global(const Mesh& mesh, const DofMap& dofs, const Partition& partition,
                             std::span<const double> state, const FlowParams& params) {
  std::vector<TripletBatch> batches(static_cast<std::size_t>(partition.p));
  run_workers(partition.p, [&](int w) {
    batches[static_cast<std::size_t>(w)] = assemble_partition(mesh, dofs, partition, w, state, params);
  });
  return merge_triplets(batches, dofs.n_dofs);
}

std::int32_t pressure_datum_dof(const Mesh& mesh, const DofMap& dofs) {
  if (dofs.formulation != Formulation::Mixed2D) return -1;
  const double mid = 0.5 * mesh.geometry.height;
  std::int32_t best = -1;
  double best_dist = 0.0;
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    if (dofs.pressure(n) < 0) continue;
    const auto tag = mesh.boundary_tags[n];
    if (tag != BoundaryTag::Exit) continue;
    const double dist = std::abs(mesh.node_coords[n][1] - mid);
    if (best < 0 || dist < best_dist) {
      best = dofs.pressure(n);
      best_dist = dist;
    }
  }
  if (best >= 0) return best;
  // ny == 1: the only exit vertices are wall corners.
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    if (dofs.pressure(n) >= 0 && mesh.node_coords[n][0] == mesh.geometry.length) return dofs.pressure(n);
  }
  return -1;
}

std::vector<std::int32_t> dirichlet_dofs(const Mesh& mesh, const DofMap& dofs) {
  std::vector<std::int32_t> out;
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    const auto tag = mesh.boundary_tags[n];
    if (tag == BoundaryTag::Inlet || tag == BoundaryTag::Wall) {
      for (int c = 0; c < dofs.velocity_components; ++c) out.push_back(dofs.velocity(n, c));
    }
  }
  if (const std::int32_t pin = pressure_datum_dof(mesh, dofs); pin >= 0) out.push_back(pin);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> dirichlet_values(const Mesh& mesh, const DofMap& dofs) {
  std::vector<double> v(static_cast<std::size_t>(dofs.n_dofs), 0.0);
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n) {
    if (mesh.boundary_tags[n] == BoundaryTag::Inlet) v[static_cast<std::size_t>(dofs.velocity(n, 0))] = 1.0;
  }
  return v;
}

namespace {

void impose_rows(LinearSystem& sys, std::span<const std::int32_t> constrained) {
  SparseCSR& a = sys.matrix;
  sys.dirichlet_mask.assign(static_cast<std::size_t>(a.n), 0);
  for (std::int32_t i : constrained) {
    const auto ii = static_cast<std::size_t>(i);
    sys.dirichlet_mask[ii] = 1;
    bool has_diag = false;
    for (auto k = a.row_ptr[ii]; k < a.row_ptr[ii + 1]; ++k) {
      const bool diag = a.col_idx[static_cast<std::size_t>(k)] == i;
      has_diag = has_diag || diag;
      a.vals[static_cast<std::size_t>(k)] = diag ? 1.0 : 0.0;
    }
    if (!has_diag) throw std::logic_error("constrained row " + std::to_string(i) + " has no diagonal entry");
    sys.rhs[ii] = 0.0;
  }
}

}  // namespace

LinearSystem apply_dirichlet(LinearSystem system, const Mesh& mesh, const DofMap& dofs) {
  impose_rows(system, dirichlet_dofs(mesh, dofs));
  return system;
}

Assembler::Assembler(const Mesh& mesh, const DofMap& dofs, int workers, FlowParams params)
    : mesh_(mesh), dofs_(dofs), partition_(partition_elements(mesh, workers)), params_(params) {
  params_.validate();
  const auto d = static_cast<std::size_t>(dofs.dofs_per_element());
  element_dofs_.reserve(mesh.num_elements() * d);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto gd = dofs.element_dofs(mesh, e);
    element_dofs_.insert(element_dofs_.end(), gd.begin(), gd.end());
  }
  constrained_ = dirichlet_dofs(mesh, dofs);
  mask_.assign(static_cast<std::size_t>(dofs.n_dofs), 0);
  for (std::int32_t i : constrained_) mask_[static_cast<std::size_t>(i)] = 1;
  element_residuals_.resize(mesh.num_elements() * d);
  build_pattern();
}

void Assembler::build_pattern() {
  const auto d = static_cast<std::size_t>(dofs_.dofs_per_element());
  const auto n = static_cast<std::size_t>(dofs_.n_dofs);
  const std::size_t ne = mesh_.num_elements();

  // Row -> element incidence, then a sorted column set per row.
  std::vector<std::vector<std::int32_t>> cols(n);
  for (std::size_t e = 0; e < ne; ++e) {
    const std::int32_t* gd = &element_dofs_[e * d];
    for (std::size_t r = 0; r < d; ++r) {
      auto& row = cols[static_cast<std::size_t>(gd[r])];
      row.insert(row.end(), gd, gd + d);
    }
  }
  pattern_.n = dofs_.n_dofs;
  pattern_.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = cols[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    pattern_.row_ptr[i + 1] = pattern_.row_ptr[i] + static_cast<std::int64_t>(row.size());
  }
  pattern_.col_idx.reserve(static_cast<std::size_t>(pattern_.row_ptr[n]));
  for (auto& row : cols) {
    pattern_.col_idx.insert(pattern_.col_idx.end(), row.begin(), row.end());
    std::vector<std::int32_t>().swap(row);
  }
  pattern_.vals.assign(pattern_.col_idx.size(), 0.0);

  slots_.resize(ne * d * d);
  for (std::size_t e = 0; e < ne; ++e) {
    const std::int32_t* gd = &element_dofs_[e * d];
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) slots_[(e * d + r) * d + c] = pattern_.find(gd[r], gd[c]);
    }
  }
}

LinearSystem Assembler::assemble(std::span<const double> state) {
  if (state.size() != static_cast<std::size_t>(dofs_.n_dofs)) throw std::invalid_argument("state length mismatch");
  const auto d = static_cast<std::size_t>(dofs_.dofs_per_element());
  const std::size_t ne = mesh_.num_elements();
  element_values_.resize(ne * d * d);

  run_workers(partition_.p, [&](int w) {
    for (std::size_t e = partition_.begin[static_cast<std::size_t>(w)]; e < partition_.begin[static_cast<std::size_t>(w) + 1]; ++e) {
      evaluate_element(mesh_, dofs_, e, state, params_, &element_residuals_[e * d], &element_values_[e * d * d]);
    }
  });

  // Deterministic reduction in (worker, emission) order.
  LinearSystem sys;
  sys.matrix = pattern_;
  sys.rhs.assign(static_cast<std::size_t>(dofs_.n_dofs), 0.0);
  double* vals = sys.matrix.vals.data();
  for (std::size_t k = 0; k < element_values_.size(); ++k) vals[slots_[k]] += element_values_[k];
  for (std::size_t k = 0; k < element_residuals_.size(); ++k) {
    sys.rhs[static_cast<std::size_t>(element_dofs_[k])] += -element_residuals_[k];
  }
  impose_rows(sys, constrained_);
  return sys;
}

std::vector<double> Assembler::assemble_residual(std::span<const double> state) {
  if (state.size() != static_cast<std::size_t>(dofs_.n_dofs)) throw std::invalid_argument("state length mismatch");
  const auto d = static_cast<std::size_t>(dofs_.dofs_per_element());
  run_workers(partition_.p, [&](int w) {
    for (std::size_t e = partition_.begin[static_cast<std::size_t>(w)]; e < partition_.begin[static_cast<std::size_t>(w) + 1]; ++e) {
      evaluate_element(mesh_, dofs_, e, state, params_, &element_residuals_[e * d], nullptr);
    }
  });
  std::vector<double> rhs(static_cast<std::size_t>(dofs_.n_dofs), 0.0);
  for (std::size_t k = 0; k < element_residuals_.size(); ++k) {
    rhs[static_cast<std::size_t>(element_dofs_[k])] += -element_residuals_[k];
  }
  for (std::int32_t i : constrained_) rhs[static_cast<std::size_t>(i)] = 0.0;
  return rhs;
}

}  // namespace nsmf
