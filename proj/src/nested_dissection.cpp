// Nested dissection by recursive bisection.
//
// With vertex coordinates the split is a plane normal to the axis with the
// most coordinate layers in the current part, chosen among coordinate values
// near the median to minimise the vertex separator. Without coordinates the middle level of a
// breadth-first level structure is used. Parts at or below the leaf size are
// ordered by minimum degree.

#include <algorithm>
#include <array>
#include <limits>

#include "ordering_internal.hpp"

namespace nsmf::detail {

namespace {

struct Split {
  std::vector<std::int32_t> a, b, sep;
  [[nodiscard]] bool valid() const { return !a.empty() && !b.empty(); }
};

class Dissector {
 public:
  Dissector(const SparsityPattern& g, const NestedDissectionOptions& opts)
      : g_(g), opts_(opts), in_set_(static_cast<std::size_t>(g.n), 0), level_(static_cast<std::size_t>(g.n), -1) {}

  std::vector<std::int32_t> run() {
    std::vector<std::int32_t> all(static_cast<std::size_t>(g_.n));
    for (std::int32_t v = 0; v < g_.n; ++v) all[static_cast<std::size_t>(v)] = v;
    order_.reserve(all.size());
    dissect(std::move(all));
    return order_;
  }

 private:
  void dissect(std::vector<std::int32_t> verts) {
    if (verts.empty()) return;
    if (static_cast<std::int32_t>(verts.size()) <= opts_.leaf_size) {
      order_leaf(verts);
      return;
    }
    auto comps = components(verts);
    if (comps.size() > 1) {
      for (auto& c : comps) dissect(std::move(c));
      return;
    }
    Split s = g_.coords.empty() ? Split{} : geometric_split(verts);
    if (!s.valid()) s = level_split(verts);
    if (!s.valid()) {
      order_leaf(verts);
      return;
    }
    std::vector<std::int32_t> sep = std::move(s.sep);
    dissect(std::move(s.a));
    dissect(std::move(s.b));
    std::sort(sep.begin(), sep.end());
    order_.insert(order_.end(), sep.begin(), sep.end());
  }

  void order_leaf(const std::vector<std::int32_t>& verts) {
    const SparsityPattern sub = induced_subgraph(g_, verts, scratch_);
    for (std::int32_t local : min_degree_order(sub)) order_.push_back(verts[static_cast<std::size_t>(local)]);
  }

  void set_members(const std::vector<std::int32_t>& verts, std::uint8_t value) {
    for (std::int32_t v : verts) in_set_[static_cast<std::size_t>(v)] = value;
  }

  // Connected components of the induced subgraph, each sorted, ordered by
  // smallest vertex.
  std::vector<std::vector<std::int32_t>> components(std::vector<std::int32_t>& verts) {
    std::sort(verts.begin(), verts.end());
    set_members(verts, 1);
    std::vector<std::vector<std::int32_t>> comps;
    for (std::int32_t s : verts) {
      if (in_set_[static_cast<std::size_t>(s)] != 1) continue;
      std::vector<std::int32_t> comp{s};
      in_set_[static_cast<std::size_t>(s)] = 2;
      for (std::size_t h = 0; h < comp.size(); ++h) {
        for (std::int32_t w : g_.neighbors(comp[h])) {
          if (in_set_[static_cast<std::size_t>(w)] == 1) {
            in_set_[static_cast<std::size_t>(w)] = 2;
            comp.push_back(w);
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    set_members(verts, 0);
    if (comps.size() == 1) comps.front() = verts;
    return comps;
  }

  Split geometric_split(const std::vector<std::int32_t>& verts) {
    std::array<double, 3> lo{}, hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (std::int32_t v : verts) {
      const Point& p = g_.coords[static_cast<std::size_t>(v)];
      for (std::size_t d = 0; d < 3; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    }
    // Axis with the most distinct coordinate layers; extent breaks ties.
    std::array<std::size_t, 3> layers{};
    std::vector<double> values(verts.size());
    for (std::size_t d = 0; d < 3; ++d) {
      for (std::size_t k = 0; k < verts.size(); ++k) values[k] = g_.coords[static_cast<std::size_t>(verts[k])][d];
      std::sort(values.begin(), values.end());
      layers[d] = static_cast<std::size_t>(std::unique(values.begin(), values.end()) - values.begin());
    }
    std::size_t axis = 0;
    for (std::size_t d = 1; d < 3; ++d) {
      if (layers[d] > layers[axis] || (layers[d] == layers[axis] && hi[d] - lo[d] > hi[axis] - lo[axis])) axis = d;
    }
    if (!(hi[axis] > lo[axis])) return {};

    auto coord = [&](std::int32_t v) { return g_.coords[static_cast<std::size_t>(v)][axis]; };

    // Extreme neighbour coordinates inside the part.
    set_members(verts, 1);
    std::vector<double> nb_min(verts.size()), nb_max(verts.size());
    for (std::size_t k = 0; k < verts.size(); ++k) {
      double mn = coord(verts[k]), mx = mn;
      for (std::int32_t w : g_.neighbors(verts[k])) {
        if (in_set_[static_cast<std::size_t>(w)] == 0) continue;
        mn = std::min(mn, coord(w));
        mx = std::max(mx, coord(w));
      }
      nb_min[k] = mn;
      nb_max[k] = mx;
    }
    set_members(verts, 0);

    std::vector<double> sorted;
    sorted.reserve(verts.size());
    for (std::int32_t v : verts) sorted.push_back(coord(v));
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    // Distinct values whose "strictly below" count lies in the middle band.
    std::vector<double> candidates;
    const std::size_t band_lo = n * 3 / 10, band_hi = n * 7 / 10;
    for (std::size_t k = 1; k < n; ++k) {
      if (sorted[k] != sorted[k - 1] && k >= band_lo && k <= band_hi) candidates.push_back(sorted[k]);
    }
    if (candidates.empty()) {
      // Fall back to the first distinct value above the median.
      for (std::size_t k = n / 2; k < n; ++k) {
        if (k > 0 && sorted[k] != sorted[k - 1]) {
          candidates.push_back(sorted[k]);
          break;
        }
      }
    }
    if (candidates.empty()) return {};
    constexpr std::size_t kMaxCandidates = 15;
    if (candidates.size() > kMaxCandidates) {
      std::vector<double> thinned;
      for (std::size_t t = 0; t < kMaxCandidates; ++t) {
        thinned.push_back(candidates[t * (candidates.size() - 1) / (kMaxCandidates - 1)]);
      }
      thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
      candidates.swap(thinned);
    }
    const double median = sorted[n / 2];

    double best_c = 0.0;
    bool best_right = true;
    std::size_t best_sep = std::numeric_limits<std::size_t>::max();
    double best_off = std::numeric_limits<double>::infinity();
    for (double c : candidates) {
      std::size_t sep_right = 0, sep_left = 0, left = 0;
      for (std::size_t k = 0; k < verts.size(); ++k) {
        if (coord(verts[k]) < c) {
          ++left;
          if (nb_max[k] >= c) ++sep_left;
        } else if (nb_min[k] < c) {
          ++sep_right;
        }
      }
      const std::size_t right = verts.size() - left;
      const bool use_right = sep_right <= sep_left;
      const std::size_t sep = use_right ? sep_right : sep_left;
      const std::size_t a = use_right ? left : left - sep_left;
      const std::size_t b = use_right ? right - sep_right : right;
      if (a == 0 || b == 0) continue;
      const double off = std::abs(c - median);
      if (sep < best_sep || (sep == best_sep && off < best_off)) {
        best_sep = sep;
        best_off = off;
        best_c = c;
        best_right = use_right;
      }
    }
    if (best_sep == std::numeric_limits<std::size_t>::max()) return {};

    Split s;
    for (std::size_t k = 0; k < verts.size(); ++k) {
      const std::int32_t v = verts[k];
      if (coord(v) < best_c) {
        (!best_right && nb_max[k] >= best_c ? s.sep : s.a).push_back(v);
      } else {
        (best_right && nb_min[k] < best_c ? s.sep : s.b).push_back(v);
      }
    }
    return s;
  }

  Split level_split(const std::vector<std::int32_t>& verts) {
    set_members(verts, 1);
    const std::int32_t root = pseudo_peripheral(g_, *std::min_element(verts.begin(), verts.end()), in_set_);
    std::vector<std::int32_t> bfs{root};
    level_[static_cast<std::size_t>(root)] = 0;
    for (std::size_t h = 0; h < bfs.size(); ++h) {
      const std::int32_t v = bfs[h];
      for (std::int32_t w : g_.neighbors(v)) {
        const auto ww = static_cast<std::size_t>(w);
        if (in_set_[ww] != 0 && level_[ww] < 0) {
          level_[ww] = level_[static_cast<std::size_t>(v)] + 1;
          bfs.push_back(w);
        }
      }
    }
    set_members(verts, 0);
    const std::int32_t depth = level_[static_cast<std::size_t>(bfs.back())];

    Split s;
    if (depth >= 2) {
      std::int32_t mid = level_[static_cast<std::size_t>(bfs[bfs.size() / 2])];
      mid = std::clamp(mid, std::int32_t{1}, depth - 1);
      for (std::int32_t v : bfs) {
        const std::int32_t l = level_[static_cast<std::size_t>(v)];
        (l < mid ? s.a : l > mid ? s.b : s.sep).push_back(v);
      }
    }
    for (std::int32_t v : bfs) level_[static_cast<std::size_t>(v)] = -1;
    return s;
  }

  const SparsityPattern& g_;
  NestedDissectionOptions opts_;
  std::vector<std::uint8_t> in_set_;
  std::vector<std::int32_t> level_;
  std::vector<std::int32_t> scratch_;
  std::vector<std::int32_t> order_;
};

}  // namespace

std::vector<std::int32_t> nested_dissection_order(const SparsityPattern& pattern, const NestedDissectionOptions& opts) {
  return Dissector(pattern, opts).run();
}

}  // namespace nsmf::detail
