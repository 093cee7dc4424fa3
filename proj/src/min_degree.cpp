// Minimum degree ordering on the quotient graph.
//
// Eliminated vertices become elements; each remaining variable keeps a list of
// adjacent variables and adjacent elements. Indistinguishable variables are
// merged into supervariables, degrees are exact external degrees, and ties are
// broken by the lowest vertex index.

#include <algorithm>
#include <set>
#include <utility>

#include "ordering_internal.hpp"

namespace nsmf::detail {

namespace {

enum State : std::uint8_t { kVariable, kMerged, kElement, kAbsorbed };

class QuotientGraph {
 public:
  explicit QuotientGraph(const SparsityPattern& g)
      : n_(static_cast<std::size_t>(g.n)),
        vars_(n_),
        elems_of_(n_),
        elem_vars_(n_),
        state_(n_, kVariable),
        weight_(n_, 1),
        degree_(n_, 0),
        member_next_(n_, -1),
        member_tail_(n_),
        mark_(n_, 0),
        elem_mark_(n_, 0) {
    for (std::size_t v = 0; v < n_; ++v) {
      const auto nb = g.neighbors(static_cast<std::int32_t>(v));
      vars_[v].assign(nb.begin(), nb.end());
      degree_[v] = static_cast<std::int64_t>(nb.size());
      member_tail_[v] = static_cast<std::int32_t>(v);
      queue_.emplace(degree_[v], static_cast<std::int32_t>(v));
    }
  }

  std::vector<std::int32_t> run() {
    std::vector<std::int32_t> order;
    order.reserve(n_);
    while (!queue_.empty()) {
      const std::int32_t p = queue_.begin()->second;
      queue_.erase(queue_.begin());
      for (std::int32_t m = p; m != -1; m = member_next_[static_cast<std::size_t>(m)]) order.push_back(m);
      eliminate(p);
    }
    return order;
  }

 private:
  std::uint32_t next_stamp() {
    if (++stamp_ == 0) {
      std::fill(mark_.begin(), mark_.end(), 0);
      std::fill(elem_mark_.begin(), elem_mark_.end(), 0);
      stamp_ = 1;
    }
    return stamp_;
  }

  void eliminate(std::int32_t p) {
    const auto pp = static_cast<std::size_t>(p);
    const std::uint32_t s = next_stamp();
    mark_[pp] = s;

    // New element variable list: variable neighbours plus members of adjacent elements.
    std::vector<std::int32_t> lp;
    for (std::int32_t v : vars_[pp]) {
      const auto vv = static_cast<std::size_t>(v);
      if (state_[vv] == kVariable && mark_[vv] != s) {
        mark_[vv] = s;
        lp.push_back(v);
      }
    }
    for (std::int32_t e : elems_of_[pp]) {
      const auto ee = static_cast<std::size_t>(e);
      if (state_[ee] != kElement) continue;
      for (std::int32_t v : elem_vars_[ee]) {
        const auto vv = static_cast<std::size_t>(v);
        if (state_[vv] == kVariable && mark_[vv] != s) {
          mark_[vv] = s;
          lp.push_back(v);
        }
      }
      state_[ee] = kAbsorbed;
      std::vector<std::int32_t>().swap(elem_vars_[ee]);
    }
    std::sort(lp.begin(), lp.end());
    state_[pp] = kElement;
    std::vector<std::int32_t>().swap(vars_[pp]);
    std::vector<std::int32_t>().swap(elems_of_[pp]);

    // Prune: variables in lp are now reached through element p.
    for (std::int32_t i : lp) {
      const auto ii = static_cast<std::size_t>(i);
      auto& el = elems_of_[ii];
      std::erase_if(el, [&](std::int32_t e) { return state_[static_cast<std::size_t>(e)] != kElement; });
      el.push_back(p);
      auto& vl = vars_[ii];
      std::erase_if(vl, [&](std::int32_t v) {
        const auto vv = static_cast<std::size_t>(v);
        return state_[vv] != kVariable || mark_[vv] == s;
      });
    }

    absorb_covered_elements(p, lp, s);
    lp = merge_indistinguishable(lp);
    elem_vars_[pp] = lp;

    for (std::int32_t i : lp) update_degree(i);
  }

  // Elements whose variables all lie in lp are subsumed by p.
  void absorb_covered_elements(std::int32_t p, const std::vector<std::int32_t>& lp, std::uint32_t s) {
    for (std::int32_t i : lp) {
      for (std::int32_t e : elems_of_[static_cast<std::size_t>(i)]) {
        const auto ee = static_cast<std::size_t>(e);
        if (e == p || state_[ee] != kElement || elem_mark_[ee] == s) continue;
        elem_mark_[ee] = s;
        auto& ev = elem_vars_[ee];
        std::erase_if(ev, [&](std::int32_t v) { return state_[static_cast<std::size_t>(v)] != kVariable; });
        const bool covered = std::all_of(ev.begin(), ev.end(), [&](std::int32_t v) { return mark_[static_cast<std::size_t>(v)] == s; });
        if (covered) {
          state_[ee] = kAbsorbed;
          std::vector<std::int32_t>().swap(ev);
        }
      }
    }
    for (std::int32_t i : lp) {
      std::erase_if(elems_of_[static_cast<std::size_t>(i)], [&](std::int32_t e) { return state_[static_cast<std::size_t>(e)] != kElement; });
    }
  }

  std::vector<std::int32_t> merge_indistinguishable(const std::vector<std::int32_t>& lp) {
    std::vector<std::pair<std::uint64_t, std::int32_t>> keyed;
    keyed.reserve(lp.size());
    for (std::int32_t i : lp) {
      const auto ii = static_cast<std::size_t>(i);
      auto& vl = vars_[ii];
      auto& el = elems_of_[ii];
      std::sort(vl.begin(), vl.end());
      std::sort(el.begin(), el.end());
      std::uint64_t h = vl.size() * 1000003ULL + el.size();
      for (std::int32_t v : vl) h += static_cast<std::uint64_t>(v) * 2654435761ULL;
      for (std::int32_t e : el) h += static_cast<std::uint64_t>(e) * 40503ULL + 7;
      keyed.emplace_back(h, i);
    }
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t a = 0; a < keyed.size(); ++a) {
      const std::int32_t i = keyed[a].second;
      const auto ii = static_cast<std::size_t>(i);
      if (state_[ii] != kVariable) continue;
      for (std::size_t b = a + 1; b < keyed.size() && keyed[b].first == keyed[a].first; ++b) {
        const std::int32_t j = keyed[b].second;
        const auto jj = static_cast<std::size_t>(j);
        if (state_[jj] != kVariable) continue;
        if (vars_[ii] != vars_[jj] || elems_of_[ii] != elems_of_[jj]) continue;
        // Merge j into i (keyed is sorted by index within a hash bucket, so i < j).
        queue_.erase({degree_[jj], j});
        weight_[ii] += weight_[jj];
        weight_[jj] = 0;
        state_[jj] = kMerged;
        member_next_[static_cast<std::size_t>(member_tail_[ii])] = j;
        member_tail_[ii] = member_tail_[jj];
        std::vector<std::int32_t>().swap(vars_[jj]);
        std::vector<std::int32_t>().swap(elems_of_[jj]);
      }
    }
    std::vector<std::int32_t> kept;
    kept.reserve(lp.size());
    for (std::int32_t i : lp) {
      if (state_[static_cast<std::size_t>(i)] == kVariable) kept.push_back(i);
    }
    return kept;
  }

  void update_degree(std::int32_t i) {
    const auto ii = static_cast<std::size_t>(i);
    const std::uint32_t s = next_stamp();
    mark_[ii] = s;
    std::int64_t d = 0;
    auto& vl = vars_[ii];
    std::erase_if(vl, [&](std::int32_t v) { return state_[static_cast<std::size_t>(v)] != kVariable; });
    for (std::int32_t v : vl) {
      const auto vv = static_cast<std::size_t>(v);
      if (mark_[vv] != s) {
        mark_[vv] = s;
        d += weight_[vv];
      }
    }
    for (std::int32_t e : elems_of_[ii]) {
      auto& ev = elem_vars_[static_cast<std::size_t>(e)];
      std::erase_if(ev, [&](std::int32_t v) { return state_[static_cast<std::size_t>(v)] != kVariable; });
      for (std::int32_t v : ev) {
        const auto vv = static_cast<std::size_t>(v);
        if (mark_[vv] != s) {
          mark_[vv] = s;
          d += weight_[vv];
        }
      }
    }
    if (d != degree_[ii]) {
      queue_.erase({degree_[ii], i});
      degree_[ii] = d;
      queue_.emplace(d, i);
    }
  }

  std::size_t n_;
  std::vector<std::vector<std::int32_t>> vars_;
  std::vector<std::vector<std::int32_t>> elems_of_;
  std::vector<std::vector<std::int32_t>> elem_vars_;
  std::vector<std::uint8_t> state_;
  std::vector<std::int64_t> weight_;
  std::vector<std::int64_t> degree_;
  std::vector<std::int32_t> member_next_;
  std::vector<std::int32_t> member_tail_;
  std::vector<std::uint32_t> mark_;
  std::vector<std::uint32_t> elem_mark_;
  std::uint32_t stamp_ = 0;
  std::set<std::pair<std::int64_t, std::int32_t>> queue_;
};

}  // namespace

std::vector<std::int32_t> min_degree_order(const SparsityPattern& pattern) {
  return QuotientGraph(pattern).run();
}

}  // namespace nsmf::detail
