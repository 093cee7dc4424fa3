#include "nsmf/ordering.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ordering_internal.hpp"

namespace nsmf {

SparsityPattern SparsityPattern::from_edges(std::int32_t n,
                                            std::span<const std::pair<std::int32_t, std::int32_t>> edges) {
  std::vector<std::vector<std::int32_t>> lists(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("edge endpoint out of range");
    if (a == b) continue;
    lists[static_cast<std::size_t>(a)].push_back(b);
    lists[static_cast<std::size_t>(b)].push_back(a);
  }
  SparsityPattern p;
  p.n = n;
  p.xadj.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t v = 0; v < lists.size(); ++v) {
    auto& l = lists[v];
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    p.xadj[v + 1] = p.xadj[v] + static_cast<std::int64_t>(l.size());
    p.adj.insert(p.adj.end(), l.begin(), l.end());
  }
  return p;
}

SparsityPattern symmetrize_pattern(std::int32_t rows, std::int32_t cols, std::span<const std::int64_t> row_ptr,
                                   std::span<const std::int32_t> col_idx) {
  if (rows != cols) throw std::invalid_argument("pattern must be square");
  const auto n = static_cast<std::size_t>(rows);
  std::vector<std::int64_t> count(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(col_idx[static_cast<std::size_t>(k)]);
      if (j == i) continue;
      ++count[i + 1];
      ++count[j + 1];
    }
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<std::int32_t> raw(static_cast<std::size_t>(count[n]));
  std::vector<std::int64_t> next(count.begin(), count.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(col_idx[static_cast<std::size_t>(k)]);
      if (j == i) continue;
      raw[static_cast<std::size_t>(next[i]++)] = static_cast<std::int32_t>(j);
      raw[static_cast<std::size_t>(next[j]++)] = static_cast<std::int32_t>(i);
    }
  }
  SparsityPattern p;
  p.n = rows;
  p.xadj.assign(n + 1, 0);
  p.adj.reserve(raw.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto first = raw.begin() + count[i];
    auto last = raw.begin() + count[i + 1];
    std::sort(first, last);
    last = std::unique(first, last);
    p.adj.insert(p.adj.end(), first, last);
    p.xadj[i + 1] = static_cast<std::int64_t>(p.adj.size());
  }
  return p;
}

SparsityPattern symmetrize_pattern(const SparseCSR& matrix) {
  return symmetrize_pattern(matrix.n, matrix.n, matrix.row_ptr, matrix.col_idx);
}

std::string_view to_string(OrderingMethod m) {
  switch (m) {
    case OrderingMethod::Natural: return "natural";
    case OrderingMethod::RCM: return "rcm";
    case OrderingMethod::MinDegree: return "amd";
    case OrderingMethod::NestedDissection: return "nd";
  }
  return "?";
}

OrderingMethod ordering_from_string(std::string_view s) {
  if (s == "natural") return OrderingMethod::Natural;
  if (s == "rcm") return OrderingMethod::RCM;
  if (s == "amd" || s == "mindegree") return OrderingMethod::MinDegree;
  if (s == "nd") return OrderingMethod::NestedDissection;
  throw std::invalid_argument("unknown ordering '" + std::string(s) + "'");
}

std::vector<std::int32_t> Permutation::inverse() const {
  std::vector<std::int32_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<std::int32_t>(i);
  return inv;
}

bool Permutation::is_valid() const {
  std::vector<std::uint8_t> seen(perm.size(), 0);
  for (std::int32_t p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || seen[static_cast<std::size_t>(p)]) return false;
    seen[static_cast<std::size_t>(p)] = 1;
  }
  return true;
}

Permutation Permutation::identity(std::int32_t n) {
  Permutation p;
  p.perm.resize(static_cast<std::size_t>(n));
  std::iota(p.perm.begin(), p.perm.end(), 0);
  return p;
}

namespace {

Permutation from_sequence(const std::vector<std::int32_t>& order, OrderingMethod method) {
  Permutation p;
  p.method = method;
  p.perm.assign(order.size(), -1);
  for (std::size_t k = 0; k < order.size(); ++k) p.perm[static_cast<std::size_t>(order[k])] = static_cast<std::int32_t>(k);
  if (!p.is_valid()) throw std::logic_error("ordering produced an invalid permutation");
  return p;
}

}  // namespace

Permutation compute_ordering(const SparsityPattern& pattern, OrderingMethod method, const NestedDissectionOptions& nd) {
  switch (method) {
    case OrderingMethod::Natural: {
      Permutation p = Permutation::identity(pattern.n);
      p.method = method;
      return p;
    }
    case OrderingMethod::RCM: return from_sequence(detail::rcm_order(pattern), method);
    case OrderingMethod::MinDegree: return from_sequence(detail::min_degree_order(pattern), method);
    case OrderingMethod::NestedDissection: return from_sequence(detail::nested_dissection_order(pattern, nd), method);
  }
  throw std::invalid_argument("unknown ordering method");
}

SparsityPattern permute_pattern(const SparsityPattern& pattern, std::span<const std::int32_t> perm) {
  const auto n = static_cast<std::size_t>(pattern.n);
  if (perm.size() != n) throw std::invalid_argument("permutation size mismatch");
  std::vector<std::int32_t> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<std::int32_t>(i);
  SparsityPattern out;
  out.n = pattern.n;
  out.xadj.assign(n + 1, 0);
  out.adj.reserve(pattern.adj.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto old = inv[k];
    const auto start = out.adj.size();
    for (std::int32_t nb : pattern.neighbors(old)) out.adj.push_back(perm[static_cast<std::size_t>(nb)]);
    std::sort(out.adj.begin() + static_cast<std::ptrdiff_t>(start), out.adj.end());
    out.xadj[k + 1] = static_cast<std::int64_t>(out.adj.size());
  }
  if (!pattern.coords.empty()) {
    out.coords.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.coords[static_cast<std::size_t>(perm[i])] = pattern.coords[i];
  }
  return out;
}

std::vector<std::int32_t> elimination_tree(const SparsityPattern& pattern) {
  const auto n = static_cast<std::size_t>(pattern.n);
  std::vector<std::int32_t> parent(n, -1), ancestor(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<std::int32_t>(j);
    for (std::int32_t i : pattern.neighbors(jj)) {
      if (i >= jj) continue;
      std::int32_t r = i;
      while (ancestor[static_cast<std::size_t>(r)] != -1 && ancestor[static_cast<std::size_t>(r)] != jj) {
        const std::int32_t t = ancestor[static_cast<std::size_t>(r)];
        ancestor[static_cast<std::size_t>(r)] = jj;
        r = t;
      }
      if (ancestor[static_cast<std::size_t>(r)] == -1) {
        ancestor[static_cast<std::size_t>(r)] = jj;
        parent[static_cast<std::size_t>(r)] = jj;
      }
    }
  }
  return parent;
}

std::vector<std::int32_t> tree_postorder(std::span<const std::int32_t> parent) {
  const auto n = parent.size();
  // Children lists in increasing order via reverse insertion into linked heads.
  std::vector<std::int32_t> head(n, -1), next(n, -1);
  for (std::size_t j = n; j-- > 0;) {
    const std::int32_t p = parent[j];
    if (p >= 0) {
      next[j] = head[static_cast<std::size_t>(p)];
      head[static_cast<std::size_t>(p)] = static_cast<std::int32_t>(j);
    }
  }
  std::vector<std::int32_t> post;
  post.reserve(n);
  std::vector<std::int32_t> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (parent[root] != -1) continue;
    stack.push_back(static_cast<std::int32_t>(root));
    while (!stack.empty()) {
      const std::int32_t v = stack.back();
      const std::int32_t c = head[static_cast<std::size_t>(v)];
      if (c == -1) {
        post.push_back(v);
        stack.pop_back();
      } else {
        head[static_cast<std::size_t>(v)] = next[static_cast<std::size_t>(c)];
        stack.push_back(c);
      }
    }
  }
  return post;
}

namespace {

// Visit the structure of each factor column in increasing order. `visit(j,
// rows)` sees the sorted strict-lower rows of column j; when `keep` is false a
// child's structure is released once its parent is built.
template <class Visit>
void walk_column_structures(const SparsityPattern& pattern, std::span<const std::int32_t> etree, bool keep,
                            std::vector<std::vector<std::int32_t>>& structs, Visit&& visit) {
  const auto n = static_cast<std::size_t>(pattern.n);
  std::vector<std::int32_t> head(n, -1), next(n, -1);
  for (std::size_t j = n; j-- > 0;) {
    const std::int32_t p = etree[j];
    if (p >= 0) {
      next[j] = head[static_cast<std::size_t>(p)];
      head[static_cast<std::size_t>(p)] = static_cast<std::int32_t>(j);
    }
  }
  structs.assign(n, {});
  std::vector<std::int32_t> mark(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = static_cast<std::int32_t>(j);
    auto& s = structs[j];
    mark[j] = jj;
    for (std::int32_t i : pattern.neighbors(jj)) {
      if (i > jj && mark[static_cast<std::size_t>(i)] != jj) {
        mark[static_cast<std::size_t>(i)] = jj;
        s.push_back(i);
      }
    }
    for (std::int32_t c = head[j]; c != -1; c = next[static_cast<std::size_t>(c)]) {
      auto& cs = structs[static_cast<std::size_t>(c)];
      for (std::int32_t i : cs) {
        if (mark[static_cast<std::size_t>(i)] != jj) {
          mark[static_cast<std::size_t>(i)] = jj;
          s.push_back(i);
        }
      }
      if (!keep) std::vector<std::int32_t>().swap(cs);
    }
    std::sort(s.begin(), s.end());
    visit(j, s);
  }
}

}  // namespace

std::vector<std::vector<std::int32_t>> factor_column_structures(const SparsityPattern& pattern,
                                                                std::span<const std::int32_t> etree) {
  std::vector<std::vector<std::int32_t>> structs;
  walk_column_structures(pattern, etree, true, structs, [](std::size_t, const std::vector<std::int32_t>&) {});
  return structs;
}

FillStats symbolic_fill(const SparsityPattern& pattern, const Permutation& perm) {
  if (perm.perm.size() != static_cast<std::size_t>(pattern.n) || !perm.is_valid()) {
    throw std::invalid_argument("permutation is not a bijection on the pattern");
  }
  const SparsityPattern permuted = permute_pattern(pattern, perm.perm);
  FillStats stats;
  stats.etree = elimination_tree(permuted);
  std::int64_t offdiag = 0;
  std::int32_t peak = 0;
  std::vector<std::vector<std::int32_t>> structs;
  walk_column_structures(permuted, stats.etree, false, structs, [&](std::size_t, const std::vector<std::int32_t>& s) {
    offdiag += static_cast<std::int64_t>(s.size());
    peak = std::max(peak, static_cast<std::int32_t>(s.size()) + 1);
  });
  stats.nnz_factors = pattern.n + 2 * offdiag;
  stats.peak_front = peak;
  return stats;
}

namespace detail {

std::int32_t pseudo_peripheral(const SparsityPattern& pattern, std::int32_t start, std::span<const std::uint8_t> in_set) {
  const auto n = static_cast<std::size_t>(pattern.n);
  auto inside = [&](std::int32_t v) { return in_set.empty() || in_set[static_cast<std::size_t>(v)] != 0; };
  std::vector<std::int32_t> level(n, -1);
  std::vector<std::int32_t> touched;
  std::int32_t root = start;
  std::int32_t ecc = -1;
  for (int sweep = 0; sweep < 16; ++sweep) {
    for (std::int32_t v : touched) level[static_cast<std::size_t>(v)] = -1;
    touched.clear();
    touched.push_back(root);
    level[static_cast<std::size_t>(root)] = 0;
    for (std::size_t h = 0; h < touched.size(); ++h) {
      const std::int32_t v = touched[h];
      for (std::int32_t w : pattern.neighbors(v)) {
        if (inside(w) && level[static_cast<std::size_t>(w)] < 0) {
          level[static_cast<std::size_t>(w)] = level[static_cast<std::size_t>(v)] + 1;
          touched.push_back(w);
        }
      }
    }
    const std::int32_t depth = level[static_cast<std::size_t>(touched.back())];
    if (depth <= ecc) break;
    ecc = depth;
    // Last level, minimum degree, lowest index.
    std::int32_t best = -1;
    for (std::int32_t v : touched) {
      if (level[static_cast<std::size_t>(v)] != depth) continue;
      if (best < 0 || pattern.degree(v) < pattern.degree(best) ||
          (pattern.degree(v) == pattern.degree(best) && v < best)) {
        best = v;
      }
    }
    if (best == root) break;
    root = best;
  }
  for (std::int32_t v : touched) level[static_cast<std::size_t>(v)] = -1;
  return root;
}

std::vector<std::int32_t> rcm_order(const SparsityPattern& pattern) {
  const auto n = static_cast<std::size_t>(pattern.n);
  std::vector<std::uint8_t> visited(n, 0);
  std::vector<std::int32_t> order;
  order.reserve(n);
  std::vector<std::int32_t> nbrs;
  for (std::size_t s = 0; s < n; ++s) {
    if (visited[s]) continue;
    const std::int32_t root = pseudo_peripheral(pattern, static_cast<std::int32_t>(s), {});
    const std::size_t first = order.size();
    order.push_back(root);
    visited[static_cast<std::size_t>(root)] = 1;
    for (std::size_t h = first; h < order.size(); ++h) {
      nbrs.clear();
      for (std::int32_t w : pattern.neighbors(order[h])) {
        if (!visited[static_cast<std::size_t>(w)]) {
          visited[static_cast<std::size_t>(w)] = 1;
          nbrs.push_back(w);
        }
      }
      std::sort(nbrs.begin(), nbrs.end(), [&](std::int32_t a, std::int32_t b) {
        return pattern.degree(a) != pattern.degree(b) ? pattern.degree(a) < pattern.degree(b) : a < b;
      });
      order.insert(order.end(), nbrs.begin(), nbrs.end());
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

SparsityPattern induced_subgraph(const SparsityPattern& pattern, std::span<const std::int32_t> verts,
                                 std::vector<std::int32_t>& scratch_local) {
  if (scratch_local.size() != static_cast<std::size_t>(pattern.n)) scratch_local.assign(static_cast<std::size_t>(pattern.n), -1);
  for (std::size_t k = 0; k < verts.size(); ++k) scratch_local[static_cast<std::size_t>(verts[k])] = static_cast<std::int32_t>(k);
  SparsityPattern sub;
  sub.n = static_cast<std::int32_t>(verts.size());
  sub.xadj.assign(verts.size() + 1, 0);
  for (std::size_t k = 0; k < verts.size(); ++k) {
    const auto start = sub.adj.size();
    for (std::int32_t w : pattern.neighbors(verts[k])) {
      const std::int32_t lw = scratch_local[static_cast<std::size_t>(w)];
      if (lw >= 0) sub.adj.push_back(lw);
    }
    std::sort(sub.adj.begin() + static_cast<std::ptrdiff_t>(start), sub.adj.end());
    sub.xadj[k + 1] = static_cast<std::int64_t>(sub.adj.size());
  }
  if (!pattern.coords.empty()) {
    sub.coords.reserve(verts.size());
    for (std::int32_t v : verts) sub.coords.push_back(pattern.coords[static_cast<std::size_t>(v)]);
  }
  for (std::int32_t v : verts) scratch_local[static_cast<std::size_t>(v)] = -1;
  return sub;
}

}  // namespace detail

}  // namespace nsmf
