#pragma once

// Multi-indices ell = (ell_1, ..., ell_K) of non-negative integers and
// enumeration of the truncation frontier sum(ell) <= N.

#include <cstdint>
#include <numeric>
#include <vector>

#include "harqir/common.hpp"

namespace harqir {

struct MultiIndex {
  std::vector<int> entries;

  int order() const {
    return std::accumulate(entries.begin(), entries.end(), 0);
  }
};

namespace detail {

template <class Visitor>
void visit_shell_suffix(std::vector<int>& ell, int pos, int remaining,
                        Visitor&& visit) {
  if (pos == 0) {
    ell[0] = remaining;
    visit(ell);
    return;
  }
  // Colexicographic order: the rightmost entry varies slowest, so it is
  // chosen in the outermost loop of the recursion.
  for (int v = 0; v <= remaining; ++v) {
    ell[static_cast<std::size_t>(pos)] = v;
    visit_shell_suffix(ell, pos - 1, remaining - v, visit);
  }
}

}  // namespace detail

// Visits every ell with K entries and sum(ell) = n, in colexicographic
// order (entries compared from the last position down).
template <class Visitor>
void for_each_shell(int k, int n, Visitor&& visit) {
  require(k >= 1, "multi-index needs at least one entry");
  require(n >= 0, "shell order must be non-negative");
  std::vector<int> ell(static_cast<std::size_t>(k), 0);
  detail::visit_shell_suffix(ell, k - 1, n, visit);
}

// Number of K-entry multi-indices with sum exactly n: C(n+K-1, K-1).
inline std::uint64_t shell_size(int k, int n) {
  require(k >= 1 && n >= 0, "invalid shell");
  std::uint64_t c = 1;
  for (int j = 1; j <= k - 1; ++j) {
    c = c * static_cast<std::uint64_t>(n + j) / static_cast<std::uint64_t>(j);
    if (c > (std::uint64_t{1} << 62)) return c;  // saturate, caller caps anyway
  }
  return c;
}

// Number of K-entry multi-indices with sum at most N: C(N+K, K).
inline std::uint64_t frontier_size(int k, int n) {
  require(k >= 1 && n >= 0, "invalid frontier");
  std::uint64_t c = 1;
  for (int j = 1; j <= k; ++j) {
    c = c * static_cast<std::uint64_t>(n + j) / static_cast<std::uint64_t>(j);
    if (c > (std::uint64_t{1} << 62)) return c;
  }
  return c;
}

}  // namespace harqir
