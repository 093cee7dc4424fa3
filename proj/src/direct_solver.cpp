#include "nsmf/direct_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nsmf {

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

SymbolicFactorization analyze(const SparsityPattern& pattern, OrderingMethod method, const AnalyzeOptions& opts) {
  const auto n = static_cast<std::size_t>(pattern.n);
  const Permutation first = compute_ordering(pattern, method, opts.nested_dissection);

  // Postorder the elimination tree so supernodes are contiguous.
  const SparsityPattern p0 = permute_pattern(pattern, first.perm);
  const std::vector<std::int32_t> etree0 = elimination_tree(p0);
  const std::vector<std::int32_t> post = tree_postorder(etree0);
  std::vector<std::int32_t> newpos(n);
  for (std::size_t k = 0; k < n; ++k) newpos[static_cast<std::size_t>(post[k])] = static_cast<std::int32_t>(k);
  std::vector<std::int32_t> p1(n);
  for (std::size_t i = 0; i < n; ++i) p1[i] = newpos[static_cast<std::size_t>(first.perm[i])];
  std::vector<std::int32_t> etree(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (etree0[v] >= 0) etree[static_cast<std::size_t>(newpos[v])] = newpos[static_cast<std::size_t>(etree0[v])];
  }
  const SparsityPattern p1_pattern = permute_pattern(pattern, p1);
  const auto structs = factor_column_structures(p1_pattern, etree);

  SymbolicFactorization sym;
  sym.n = pattern.n;
  std::int64_t offdiag = 0;
  for (const auto& s : structs) offdiag += static_cast<std::int64_t>(s.size());
  sym.nnz_factors = pattern.n + 2 * offdiag;

  // Fundamental supernodes.
  std::vector<std::int32_t> nchild(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (etree[j] >= 0) ++nchild[static_cast<std::size_t>(etree[j])];
  }
  std::vector<std::int32_t> snode_first, snode_last;
  std::vector<std::int32_t> snode_of(n);
  for (std::size_t j = 0; j < n; ++j) {
    const bool extend = j > 0 && etree[j - 1] == static_cast<std::int32_t>(j) && nchild[j] == 1 &&
                        structs[j - 1].size() == structs[j].size() + 1;
    if (!extend) {
      snode_first.push_back(static_cast<std::int32_t>(j));
      snode_last.push_back(static_cast<std::int32_t>(j));
    } else {
      snode_last.back() = static_cast<std::int32_t>(j);
    }
    snode_of[j] = static_cast<std::int32_t>(snode_first.size() - 1);
  }
  const std::size_t ns = snode_first.size();
  std::vector<std::int32_t> sparent(ns, -1);
  std::vector<std::int32_t> npiv(ns), nborder(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto last = static_cast<std::size_t>(snode_last[s]);
    if (etree[last] >= 0) sparent[s] = snode_of[static_cast<std::size_t>(etree[last])];
    npiv[s] = snode_last[s] - snode_first[s] + 1;
    nborder[s] = static_cast<std::int32_t>(structs[last].size());
  }

  // Relaxed amalgamation, children before parents.
  std::vector<std::int32_t> merged_into(ns, -1);
  std::vector<std::vector<std::int32_t>> absorbed(ns);
  if (opts.amalgamate) {
    for (std::size_t s = 0; s < ns; ++s) {
      const std::int32_t par = sparent[s];
      if (par < 0) continue;
      const auto pp = static_cast<std::size_t>(par);
      const std::int32_t parent_front = npiv[pp] + nborder[pp];
      const std::int32_t new_rows = parent_front - nborder[s];
      const std::int32_t merged_order = npiv[s] + parent_front;
      if (new_rows <= opts.max_new_rows || merged_order <= opts.max_front) {
        merged_into[s] = par;
        npiv[pp] += npiv[s];
        absorbed[pp].push_back(static_cast<std::int32_t>(s));
      }
    }
  }

  // Surviving supernodes become fronts; parent is the surviving ancestor.
  auto top = [&](std::int32_t s) {
    while (s >= 0 && merged_into[static_cast<std::size_t>(s)] >= 0) s = merged_into[static_cast<std::size_t>(s)];
    return s;
  };
  std::vector<std::int32_t> front_parent_snode(ns, -1);
  std::vector<std::int32_t> survivors;
  for (std::size_t s = 0; s < ns; ++s) {
    if (merged_into[s] >= 0) continue;
    survivors.push_back(static_cast<std::int32_t>(s));
    front_parent_snode[s] = sparent[s] >= 0 ? top(sparent[s]) : -1;
  }
  // Postorder over surviving supernodes (indexed by snode id).
  std::vector<std::int32_t> tree_parent(ns, -1);
  std::vector<std::uint8_t> alive(ns, 0);
  for (std::int32_t s : survivors) {
    alive[static_cast<std::size_t>(s)] = 1;
    tree_parent[static_cast<std::size_t>(s)] = front_parent_snode[static_cast<std::size_t>(s)];
  }
  std::vector<std::int32_t> front_order;
  for (std::int32_t s : tree_postorder(tree_parent)) {
    if (alive[static_cast<std::size_t>(s)]) front_order.push_back(s);
  }

  // Pivot columns (p1 numbering) of a surviving front: absorbed subtrees first.
  std::vector<std::int32_t> cols_buf;
  auto collect = [&](auto&& self, std::int32_t s) -> void {
    for (std::int32_t c : absorbed[static_cast<std::size_t>(s)]) self(self, c);
    for (std::int32_t j = snode_first[static_cast<std::size_t>(s)]; j <= snode_last[static_cast<std::size_t>(s)]; ++j) {
      cols_buf.push_back(j);
    }
  };

  std::vector<std::int32_t> inv_p1(n);
  for (std::size_t i = 0; i < n; ++i) inv_p1[static_cast<std::size_t>(p1[i])] = static_cast<std::int32_t>(i);
  std::vector<std::int32_t> final_of_p1(n, -1);
  std::vector<std::int32_t> front_id(ns, -1);
  sym.fronts.resize(front_order.size());
  std::int32_t next = 0;
  for (std::size_t f = 0; f < front_order.size(); ++f) {
    const std::int32_t s = front_order[f];
    front_id[static_cast<std::size_t>(s)] = static_cast<std::int32_t>(f);
    cols_buf.clear();
    collect(collect, s);
    auto& front = sym.fronts[f];
    for (std::int32_t j : cols_buf) {
      final_of_p1[static_cast<std::size_t>(j)] = next++;
      front.pivots.push_back(inv_p1[static_cast<std::size_t>(j)]);
    }
  }
  sym.perm.method = method;
  sym.perm.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) sym.perm.perm[i] = final_of_p1[static_cast<std::size_t>(p1[i])];
  sym.etree.assign(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    if (etree[j] >= 0) {
      sym.etree[static_cast<std::size_t>(final_of_p1[j])] = final_of_p1[static_cast<std::size_t>(etree[j])];
    }
  }

  sym.front_of.assign(n, -1);
  for (std::size_t f = 0; f < front_order.size(); ++f) {
    const auto s = static_cast<std::size_t>(front_order[f]);
    auto& front = sym.fronts[f];
    const std::int32_t ps = front_parent_snode[s];
    front.parent = ps >= 0 ? front_id[static_cast<std::size_t>(ps)] : -1;
    if (front.parent >= 0) sym.fronts[static_cast<std::size_t>(front.parent)].children.push_back(static_cast<std::int32_t>(f));
    for (std::int32_t j : structs[static_cast<std::size_t>(snode_last[s])]) {
      front.border.push_back(inv_p1[static_cast<std::size_t>(j)]);
    }
    std::sort(front.border.begin(), front.border.end(), [&](std::int32_t a, std::int32_t b) {
      return sym.perm.perm[static_cast<std::size_t>(a)] < sym.perm.perm[static_cast<std::size_t>(b)];
    });
    for (std::int32_t v : front.pivots) sym.front_of[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(f);
    const std::int64_t np = static_cast<std::int64_t>(front.pivots.size());
    const std::int64_t m = front.order();
    sym.front_entries += np * (2 * m - np);
    sym.peak_front = std::max(sym.peak_front, front.order());
  }
  sym.pattern = pattern;
  return sym;
}

// ---------------------------------------------------------------------------
// Numeric factorization
// ---------------------------------------------------------------------------

namespace {

struct ContributionBlock {
  std::vector<std::int32_t> rows, cols;  // first `delayed` entries are delayed candidates
  std::int32_t delayed = 0;
  std::vector<double> vals;              // column-major, rows.size() x cols.size()
};

// Column-major dense front with its global row/column labels.
struct DenseFront {
  std::int32_t m = 0;
  std::vector<double> a;
  std::vector<std::int32_t> rows, cols;

  double& at(std::int32_t r, std::int32_t c) {
    return a[static_cast<std::size_t>(c) * static_cast<std::size_t>(m) + static_cast<std::size_t>(r)];
  }
  double* col(std::int32_t c) { return a.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(m); }

  void swap_rows(std::int32_t r1, std::int32_t r2) {
    if (r1 == r2) return;
    for (std::int32_t c = 0; c < m; ++c) std::swap(at(r1, c), at(r2, c));
    std::swap(rows[static_cast<std::size_t>(r1)], rows[static_cast<std::size_t>(r2)]);
  }
  void swap_cols(std::int32_t c1, std::int32_t c2) {
    if (c1 == c2) return;
    std::swap_ranges(col(c1), col(c1) + m, col(c2));
    std::swap(cols[static_cast<std::size_t>(c1)], cols[static_cast<std::size_t>(c2)]);
  }
};

// Eliminate up to `ncand` pivots from the leading fully-summed block.
// Returns the number eliminated; at a root every candidate is eliminated,
// perturbing pivots that are too small.
std::int32_t partial_factor(DenseFront& F, std::int32_t ncand, bool root, const FactorizeOptions& opts,
                            std::vector<PivotPerturbation>& log) {
  const std::int32_t m = F.m;
  double fnorm = 0.0;
  for (double v : F.a) fnorm = std::max(fnorm, std::abs(v));
  const double floor = opts.perturbation * (fnorm > 0.0 ? fnorm : 1.0);

  std::int32_t k = 0;
  while (k < ncand) {
    std::int32_t prow = -1, pcol = -1;
    for (std::int32_t c = k; c < ncand && pcol < 0; ++c) {
      const double* colp = F.col(c);
      double cand_max = 0.0, col_max = 0.0;
      std::int32_t cand_row = -1;
      for (std::int32_t r = k; r < m; ++r) {
        const double v = std::abs(colp[r]);
        if (r < ncand && v > cand_max) {
          cand_max = v;
          cand_row = r;
        }
        col_max = std::max(col_max, v);
      }
      if (cand_row >= 0 && cand_max >= floor && cand_max >= opts.threshold * col_max) {
        prow = cand_row;
        pcol = c;
      }
    }
    if (pcol < 0) {
      if (!root) break;
      // No acceptable pivot and nowhere to delay: take the largest candidate
      // in column k and apply a static perturbation if needed.
      pcol = k;
      const double* colp = F.col(k);
      prow = k;
      for (std::int32_t r = k; r < ncand; ++r) {
        if (std::abs(colp[r]) > std::abs(colp[prow])) prow = r;
      }
      const double p = F.at(prow, k);
      if (std::abs(p) < floor) {
        const double replaced = p < 0.0 ? -floor : floor;
        log.push_back({F.cols[static_cast<std::size_t>(k)], p, replaced});
        F.at(prow, k) = replaced;
      }
    }
    F.swap_rows(k, prow);
    F.swap_cols(k, pcol);

    double* lk = F.col(k);
    const double inv = 1.0 / lk[k];
    for (std::int32_t r = k + 1; r < m; ++r) lk[r] *= inv;
    for (std::int32_t j = k + 1; j < m; ++j) {
      double* cj = F.col(j);
      const double u = cj[k];
      if (u == 0.0) continue;
      for (std::int32_t r = k + 1; r < m; ++r) cj[r] -= u * lk[r];
    }
    ++k;
  }
  return k;
}

}  // namespace

NumericFactor factorize(const SymbolicFactorization& symbolic, const SparseCSR& matrix, const FactorizeOptions& opts) {
  if (matrix.n != symbolic.n) throw std::invalid_argument("matrix order does not match the analysis");
  const auto n = static_cast<std::size_t>(matrix.n);

  // Column access to A and empty row/column detection.
  std::vector<std::int64_t> colptr(n + 1, 0);
  for (std::int32_t c : matrix.col_idx) ++colptr[static_cast<std::size_t>(c) + 1];
  for (std::size_t j = 0; j < n; ++j) {
    if (colptr[j + 1] == 0) {
      throw StructurallySingular(static_cast<std::int32_t>(j), "structurally singular: column " + std::to_string(j) + " is empty");
    }
    if (matrix.row_ptr[j + 1] == matrix.row_ptr[j]) {
      throw StructurallySingular(static_cast<std::int32_t>(j), "structurally singular: row " + std::to_string(j) + " is empty");
    }
  }
  std::partial_sum(colptr.begin(), colptr.end(), colptr.begin());
  std::vector<std::int32_t> csc_row(matrix.nnz());
  std::vector<std::int64_t> csc_pos(matrix.nnz());
  {
    std::vector<std::int64_t> next(colptr.begin(), colptr.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto k = matrix.row_ptr[i]; k < matrix.row_ptr[i + 1]; ++k) {
        const auto c = static_cast<std::size_t>(matrix.col_idx[static_cast<std::size_t>(k)]);
        const auto at = static_cast<std::size_t>(next[c]++);
        csc_row[at] = static_cast<std::int32_t>(i);
        csc_pos[at] = k;
      }
    }
  }

  const auto& pos = symbolic.perm.perm;
  NumericFactor out;
  out.n_ = matrix.n;
  out.matrix_ = std::make_shared<const SparseCSR>(matrix);
  out.fronts_.resize(symbolic.fronts.size());

  std::vector<ContributionBlock> cbs(symbolic.fronts.size());
  std::vector<std::int32_t> row_pos(n, -1), col_pos(n, -1);
  auto outside = [](std::int32_t i, std::int32_t j) {
    return std::invalid_argument("entry (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") lies outside the analysed pattern");
  };

  for (std::size_t f = 0; f < symbolic.fronts.size(); ++f) {
    const SymbolicFront& sf = symbolic.fronts[f];
    DenseFront F;
    for (std::int32_t c : sf.children) {
      const auto& cb = cbs[static_cast<std::size_t>(c)];
      F.rows.insert(F.rows.end(), cb.rows.begin(), cb.rows.begin() + cb.delayed);
      F.cols.insert(F.cols.end(), cb.cols.begin(), cb.cols.begin() + cb.delayed);
    }
    F.rows.insert(F.rows.end(), sf.pivots.begin(), sf.pivots.end());
    F.cols.insert(F.cols.end(), sf.pivots.begin(), sf.pivots.end());
    const auto ncand = static_cast<std::int32_t>(F.rows.size());
    F.rows.insert(F.rows.end(), sf.border.begin(), sf.border.end());
    F.cols.insert(F.cols.end(), sf.border.begin(), sf.border.end());
    F.m = static_cast<std::int32_t>(F.rows.size());
    F.a.assign(static_cast<std::size_t>(F.m) * static_cast<std::size_t>(F.m), 0.0);
    for (std::int32_t t = 0; t < F.m; ++t) {
      row_pos[static_cast<std::size_t>(F.rows[static_cast<std::size_t>(t)])] = t;
      col_pos[static_cast<std::size_t>(F.cols[static_cast<std::size_t>(t)])] = t;
    }

    // Original entries whose earlier endpoint is a pivot of this front.
    for (std::int32_t k : sf.pivots) {
      const auto kk = static_cast<std::size_t>(k);
      const std::int32_t pk = pos[kk];
      for (auto t = matrix.row_ptr[kk]; t < matrix.row_ptr[kk + 1]; ++t) {
        const std::int32_t j = matrix.col_idx[static_cast<std::size_t>(t)];
        if (pos[static_cast<std::size_t>(j)] < pk) continue;
        const std::int32_t cj = col_pos[static_cast<std::size_t>(j)];
        if (cj < 0) throw outside(k, j);
        F.at(row_pos[kk], cj) += matrix.vals[static_cast<std::size_t>(t)];
      }
      for (auto t = colptr[kk]; t < colptr[kk + 1]; ++t) {
        const std::int32_t i = csc_row[static_cast<std::size_t>(t)];
        if (pos[static_cast<std::size_t>(i)] <= pk) continue;
        const std::int32_t ri = row_pos[static_cast<std::size_t>(i)];
        if (ri < 0) throw outside(i, k);
        F.at(ri, col_pos[kk]) += matrix.vals[static_cast<std::size_t>(csc_pos[static_cast<std::size_t>(t)])];
      }
    }

    // Extend-add children in a fixed order.
    for (std::int32_t c : sf.children) {
      auto& cb = cbs[static_cast<std::size_t>(c)];
      const auto cm = cb.rows.size();
      for (std::size_t cc = 0; cc < cb.cols.size(); ++cc) {
        const std::int32_t fc = col_pos[static_cast<std::size_t>(cb.cols[cc])];
        double* dst = F.col(fc);
        const double* src = cb.vals.data() + cc * cm;
        for (std::size_t rr = 0; rr < cm; ++rr) dst[row_pos[static_cast<std::size_t>(cb.rows[rr])]] += src[rr];
      }
      cb = ContributionBlock{};
    }
    for (std::int32_t t = 0; t < F.m; ++t) {
      row_pos[static_cast<std::size_t>(F.rows[static_cast<std::size_t>(t)])] = -1;
      col_pos[static_cast<std::size_t>(F.cols[static_cast<std::size_t>(t)])] = -1;
    }

    const bool root = sf.parent < 0;
    const std::int32_t npiv = partial_factor(F, ncand, root, opts, out.perturbations_);
    out.delayed_ += ncand - npiv;

    FrontFactor& ff = out.fronts_[f];
    ff.npiv = npiv;
    ff.m = F.m;
    ff.rows = F.rows;
    ff.cols = F.cols;
    const auto m = static_cast<std::size_t>(F.m);
    const auto np = static_cast<std::size_t>(npiv);
    ff.lcols.assign(F.a.begin(), F.a.begin() + static_cast<std::ptrdiff_t>(m * np));
    ff.urows.resize(np * (m - np));
    for (std::size_t r = 0; r < np; ++r) {
      for (std::size_t c = np; c < m; ++c) ff.urows[r * (m - np) + (c - np)] = F.a[c * m + r];
    }
    out.stored_ += static_cast<std::int64_t>(m * np + np * (m - np));
    out.largest_front_ = std::max(out.largest_front_, F.m);

    if (!root) {
      ContributionBlock& cb = cbs[f];
      cb.delayed = ncand - npiv;
      cb.rows.assign(F.rows.begin() + npiv, F.rows.end());
      cb.cols.assign(F.cols.begin() + npiv, F.cols.end());
      cb.vals.resize((m - np) * (m - np));
      for (std::size_t c = np; c < m; ++c) {
        std::copy_n(F.a.begin() + static_cast<std::ptrdiff_t>(c * m + np), m - np, cb.vals.begin() + static_cast<std::ptrdiff_t>((c - np) * (m - np)));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solution
// ---------------------------------------------------------------------------

void NumericFactor::apply_inverse(std::span<const double> b, std::span<double> x) const {
  const auto n = static_cast<std::size_t>(n_);
  std::vector<double> w(b.begin(), b.end());
  std::vector<double> y(n, 0.0);
  std::vector<double> z;

  for (const FrontFactor& f : fronts_) {
    const auto m = static_cast<std::size_t>(f.m);
    const auto np = static_cast<std::size_t>(f.npiv);
    z.resize(np);
    for (std::size_t k = 0; k < np; ++k) z[k] = w[static_cast<std::size_t>(f.rows[k])];
    for (std::size_t t = 0; t < np; ++t) {
      const double zt = z[t];
      if (zt == 0.0) continue;
      const double* lc = f.lcols.data() + t * m;
      for (std::size_t k = t + 1; k < np; ++k) z[k] -= lc[k] * zt;
      for (std::size_t k = np; k < m; ++k) w[static_cast<std::size_t>(f.rows[k])] -= lc[k] * zt;
    }
    for (std::size_t k = 0; k < np; ++k) y[static_cast<std::size_t>(f.cols[k])] = z[k];
  }

  for (auto it = fronts_.rbegin(); it != fronts_.rend(); ++it) {
    const FrontFactor& f = *it;
    const auto m = static_cast<std::size_t>(f.m);
    const auto np = static_cast<std::size_t>(f.npiv);
    z.resize(np);
    for (std::size_t k = 0; k < np; ++k) {
      double s = y[static_cast<std::size_t>(f.cols[k])];
      const double* ur = f.urows.data() + k * (m - np);
      for (std::size_t j = np; j < m; ++j) s -= ur[j - np] * x[static_cast<std::size_t>(f.cols[j])];
      z[k] = s;
    }
    for (std::size_t k = np; k-- > 0;) {
      const double xk = z[k] / f.lcols[k * m + k];
      z[k] = xk;
      if (xk == 0.0) continue;
      for (std::size_t r = 0; r < k; ++r) z[r] -= f.lcols[k * m + r] * xk;
    }
    for (std::size_t k = 0; k < np; ++k) x[static_cast<std::size_t>(f.cols[k])] = z[k];
  }
}

NumericFactor::Dense NumericFactor::to_dense() const {
  const auto n = static_cast<std::size_t>(n_);
  Dense d;
  d.L.assign(n * n, 0.0);
  d.U.assign(n * n, 0.0);
  std::vector<std::int32_t> row_step(n), col_step(n);
  std::size_t step = 0;
  for (const FrontFactor& f : fronts_) {
    for (std::int32_t k = 0; k < f.npiv; ++k, ++step) {
      row_step[static_cast<std::size_t>(f.rows[static_cast<std::size_t>(k)])] = static_cast<std::int32_t>(step);
      col_step[static_cast<std::size_t>(f.cols[static_cast<std::size_t>(k)])] = static_cast<std::int32_t>(step);
      d.row_order.push_back(f.rows[static_cast<std::size_t>(k)]);
      d.col_order.push_back(f.cols[static_cast<std::size_t>(k)]);
    }
  }
  for (const FrontFactor& f : fronts_) {
    const auto m = static_cast<std::size_t>(f.m);
    const auto np = static_cast<std::size_t>(f.npiv);
    for (std::size_t t = 0; t < np; ++t) {
      const auto ct = static_cast<std::size_t>(col_step[static_cast<std::size_t>(f.cols[t])]);
      d.L[ct * n + ct] = 1.0;
      for (std::size_t r = t + 1; r < m; ++r) {
        const auto rr = static_cast<std::size_t>(row_step[static_cast<std::size_t>(f.rows[r])]);
        d.L[rr * n + ct] = f.lcols[t * m + r];
      }
      for (std::size_t r = 0; r <= t; ++r) {
        const auto rr = static_cast<std::size_t>(row_step[static_cast<std::size_t>(f.rows[r])]);
        d.U[rr * n + ct] = f.lcols[t * m + r];
      }
    }
    for (std::size_t r = 0; r < np; ++r) {
      const auto rr = static_cast<std::size_t>(row_step[static_cast<std::size_t>(f.rows[r])]);
      for (std::size_t c = np; c < m; ++c) {
        const auto cc = static_cast<std::size_t>(col_step[static_cast<std::size_t>(f.cols[c])]);
        d.U[rr * n + cc] = f.urows[r * (m - np) + (c - np)];
      }
    }
  }
  return d;
}

double backward_error(const SparseCSR& a, std::span<const double> x, std::span<const double> b) {
  std::vector<double> r(b.size());
  a.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const double num = norm_inf(r);
  if (num == 0.0) return 0.0;
  return num / (a.norm_inf() * norm_inf(x) + norm_inf(b));
}

std::vector<double> solve(const NumericFactor& factor, std::span<const double> rhs, SolveReport* report,
                          const SolveOptions& opts) {
  const auto n = static_cast<std::size_t>(factor.n());
  if (rhs.size() != n) throw std::invalid_argument("rhs length does not match the factor");
  for (double v : rhs) {
    if (!std::isfinite(v)) throw std::invalid_argument("rhs contains non-finite values");
  }
  const SparseCSR& a = factor.matrix();
  std::vector<double> x(n, 0.0), r(n), dx(n);
  factor.apply_inverse(rhs, x);

  const double anorm = a.norm_inf();
  const double bnorm = norm_inf(rhs);
  auto berr = [&]() {
    a.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
    const double num = norm_inf(r);
    return num == 0.0 ? 0.0 : num / (anorm * norm_inf(x) + bnorm);
  };
  int steps = 0;
  double be = berr();
  while (be > opts.target_backward_error && steps < opts.max_refine) {
    factor.apply_inverse(r, dx);
    for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    ++steps;
    be = berr();
  }
  if (report != nullptr) {
    report->refinement_steps = steps;
    report->backward_error = be;
  }
  return x;
}

MemoryStats memory_report(const SymbolicFactorization& symbolic, const NumericFactor& factor) {
  if (factor.n() != symbolic.n) throw std::invalid_argument("factor does not belong to this analysis");
  return estimate_memory(symbolic);
}

MemoryStats estimate_memory(const SymbolicFactorization& symbolic) {
  MemoryStats m;
  m.nnz_factors = symbolic.nnz_factors;
  m.peak_front = symbolic.peak_front;
  std::int64_t index_bytes = 4 * static_cast<std::int64_t>(symbolic.n);
  for (const auto& f : symbolic.fronts) index_bytes += 4 * 2 * static_cast<std::int64_t>(f.order());
  m.estimated_bytes = 8 * m.nnz_factors + index_bytes;
  return m;
}

std::vector<double> solve_direct(const SparseCSR& a, std::span<const double> rhs, OrderingMethod method,
                                 SolveReport* report) {
  const SymbolicFactorization sym = analyze(symmetrize_pattern(a), method);
  const NumericFactor factor = factorize(sym, a);
  return solve(factor, rhs, report);
}

}  // namespace nsmf
