#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <vector>

#include "ccsd/errors.hpp"
#include "ccsd/kernel.hpp"

namespace ccsd {

/// Dynamic time warping with absolute-difference local cost and an optional
/// Sakoe-Chiba band |i - j| <= window. Total cost is the sum along the
/// optimal monotone alignment path; no path-length normalization.
inline double dtw_distance(const Vector& a, const Vector& b,
                           std::optional<int> window = std::nullopt) {
  const Eigen::Index n = a.size();
  const Eigen::Index m = b.size();
  if (n == 0 || m == 0) throw DataError("dtw_distance: empty series");
  Eigen::Index w = std::max(n, m);
  if (window) {
    if (*window < 0) throw ConfigError("dtw_distance: window must be >= 0");
    w = *window;
    if (std::abs(n - m) > w)
      throw ConfigError(
          "dtw_distance: Sakoe-Chiba window excludes the end-to-end corner "
          "for these lengths");
  }
  const double inf = std::numeric_limits<double>::infinity();
  // two-row DP over the banded lattice
  std::vector<double> prev(static_cast<std::size_t>(m), inf);
  std::vector<double> cur(static_cast<std::size_t>(m), inf);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - w);
    const Eigen::Index hi = std::min<Eigen::Index>(m - 1, i + w);
    std::fill(cur.begin(), cur.end(), inf);
    for (Eigen::Index j = lo; j <= hi; ++j) {
      const double cost = std::abs(a(i) - b(j));
      if (i == 0 && j == 0) {
        cur[0] = cost;
        continue;
      }
      double best = inf;
      if (j > 0) best = std::min(best, cur[static_cast<std::size_t>(j - 1)]);
      if (i > 0) {
        best = std::min(best, prev[static_cast<std::size_t>(j)]);
        if (j > 0) best = std::min(best, prev[static_cast<std::size_t>(j - 1)]);
      }
      cur[static_cast<std::size_t>(j)] = cost + best;
    }
    std::swap(prev, cur);
  }
  const double result = prev[static_cast<std::size_t>(m - 1)];
  ccsd::detail::check(std::isfinite(result), "dtw: no feasible path inside the band");
  return result;
}

}  // namespace ccsd
