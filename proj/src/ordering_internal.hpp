#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nsmf/ordering.hpp"

namespace nsmf::detail {

// Each routine returns an elimination sequence: order[k] is the vertex
// eliminated k-th.
std::vector<std::int32_t> rcm_order(const SparsityPattern& pattern);
std::vector<std::int32_t> min_degree_order(const SparsityPattern& pattern);
std::vector<std::int32_t> nested_dissection_order(const SparsityPattern& pattern, const NestedDissectionOptions& opts);

// George-Liu pseudo-peripheral vertex of the component containing `start`,
// restricted to vertices with in_set[v] != 0 (all vertices when in_set is empty).
std::int32_t pseudo_peripheral(const SparsityPattern& pattern, std::int32_t start, std::span<const std::uint8_t> in_set);

// Subgraph induced by `verts`; local vertex k is verts[k].
SparsityPattern induced_subgraph(const SparsityPattern& pattern, std::span<const std::int32_t> verts,
                                 std::vector<std::int32_t>& scratch_local);

}  // namespace nsmf::detail
