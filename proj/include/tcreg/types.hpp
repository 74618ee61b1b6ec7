#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tcreg {

using Index = Eigen::Index;

/// Sorted, zero-based coordinate indices.
using IndexSet = std::vector<int>;

/// Grid position, one entry per axis.
using MultiIndex = std::vector<Index>;

/// All subsets of `pool` with size in [min_size, max_size], ordered by size
/// and then lexicographically. `pool` must be sorted.
inline std::vector<IndexSet> subsets_of(const IndexSet& pool, int min_size, int max_size) {
  std::vector<IndexSet> out;
  const int n = static_cast<int>(pool.size());
  for (int k = std::max(min_size, 0); k <= std::min(max_size, n); ++k) {
    if (k == 0) {
      out.emplace_back();
      continue;
    }
    std::vector<int> pos(k);
    for (int i = 0; i < k; ++i) pos[i] = i;
    while (true) {
      IndexSet s(k);
      for (int i = 0; i < k; ++i) s[i] = pool[pos[i]];
      out.push_back(std::move(s));
      int i = k - 1;
      while (i >= 0 && pos[i] == n - k + i) --i;
      if (i < 0) break;
      ++pos[i];
      for (int j = i + 1; j < k; ++j) pos[j] = pos[j - 1] + 1;
    }
  }
  return out;
}

inline IndexSet iota_set(int first, int last_exclusive) {
  IndexSet s;
  for (int i = first; i < last_exclusive; ++i) s.push_back(i);
  return s;
}

}  // namespace tcreg
