#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ccsd/errors.hpp"
#include "ccsd/kernel.hpp"
#include "ccsd/rng.hpp"

namespace ccsd {

/// Pair-subsampling cap shared by the data-driven bandwidth rules. Above
/// this the O(n^2) pair set is replaced by a seeded uniform subsample.
inline constexpr std::size_t kDefaultMaxPairs = 2'000'000;

namespace detail {

/// Linear-interpolation quantile (the common "type 7" rule) on sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted.front();
  const double h = static_cast<double>(m - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, m - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Collects f(i, j) over all unordered pairs, or a seeded uniform subsample
/// of max_pairs of them when n(n-1)/2 exceeds the cap.
template <typename PairFn>
std::vector<double> pair_sample(std::size_t n, std::size_t max_pairs,
                                std::uint64_t seed, const PairFn& f) {
  const std::size_t total = n * (n - 1) / 2;
  std::vector<double> out;
  if (total <= max_pairs) {
    out.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) out.push_back(f(i, j));
  } else {
    out.reserve(max_pairs);
    Rng rng(seed);
    for (std::size_t k = 0; k < max_pairs; ++k) {
      const auto [i, j] = rng.next_pair(n);
      out.push_back(f(i, j));
    }
  }
  return out;
}

}  // namespace detail

/// Robust scale estimate: IQR of all pairwise absolute differences divided
/// by 1.349 (the IQR of a standard normal), a Gaussian-consistent sigma.
inline Bandwidth iqr_bandwidth(std::span<const double> values,
                               std::size_t max_pairs = kDefaultMaxPairs,
                               std::uint64_t seed = 0) {
  if (values.size() < 2)
    throw DataError("iqr_bandwidth: need at least two values");
  auto diffs = detail::pair_sample(
      values.size(), max_pairs, seed,
      [&](std::size_t i, std::size_t j) { return std::abs(values[i] - values[j]); });
  std::sort(diffs.begin(), diffs.end());
  const double iqr =
      detail::quantile_sorted(diffs, 0.75) - detail::quantile_sorted(diffs, 0.25);
  const double sigma0 = iqr / 1.349;
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0))
    throw DegenerateScaleError(
        "iqr_bandwidth: pairwise-difference IQR is zero (no usable scale)");
  return Bandwidth(sigma0);
}

inline Bandwidth iqr_bandwidth(const std::vector<double>& values,
                               std::size_t max_pairs = kDefaultMaxPairs,
                               std::uint64_t seed = 0) {
  return iqr_bandwidth(std::span<const double>(values), max_pairs, seed);
}

/// Median of pairwise Euclidean distances over a deterministic subsample.
inline Bandwidth median_heuristic(std::span<const Vector> xs,
                                  std::size_t max_pairs = kDefaultMaxPairs,
                                  std::uint64_t seed = 0) {
  if (xs.size() < 2)
    throw DataError("median_heuristic: need at least two vectors");
  auto dists = detail::pair_sample(xs.size(), max_pairs, seed,
                                   [&](std::size_t i, std::size_t j) {
                                     return (xs[i] - xs[j]).norm();
                                   });
  std::sort(dists.begin(), dists.end());
  const double med = detail::quantile_sorted(dists, 0.5);
  if (!(med > 0.0) || !std::isfinite(med))
    throw DegenerateScaleError("median_heuristic: median pairwise distance is zero");
  return Bandwidth(med);
}

inline Bandwidth median_heuristic(const std::vector<Vector>& xs,
                                  std::size_t max_pairs = kDefaultMaxPairs,
                                  std::uint64_t seed = 0) {
  return median_heuristic(std::span<const Vector>(xs), max_pairs, seed);
}

/// Scalar-sample overload.
inline Bandwidth median_heuristic(std::span<const double> xs,
                                  std::size_t max_pairs = kDefaultMaxPairs,
                                  std::uint64_t seed = 0) {
  if (xs.size() < 2)
    throw DataError("median_heuristic: need at least two values");
  auto dists = detail::pair_sample(
      xs.size(), max_pairs, seed,
      [&](std::size_t i, std::size_t j) { return std::abs(xs[i] - xs[j]); });
  std::sort(dists.begin(), dists.end());
  const double med = detail::quantile_sorted(dists, 0.5);
  if (!(med > 0.0) || !std::isfinite(med))
    throw DegenerateScaleError("median_heuristic: median pairwise distance is zero");
  return Bandwidth(med);
}

}  // namespace ccsd
