#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "ccsd/errors.hpp"
#include "ccsd/kernel.hpp"
#include "ccsd/rng.hpp"

namespace ccsd {

struct KMedoidsResult {
  std::vector<int> assignment;  ///< index into medoids' cluster ids 0..k-1
  std::vector<int> medoids;     ///< data indices chosen as centers
  double objective = 0.0;       ///< total point-to-medoid dissimilarity
  int iterations = 0;
};

/// PAM-style k-medoids on a precomputed dissimilarity matrix: seeded random
/// initial medoids, then greedy best-swap improvement until convergence or
/// max_iter. Deterministic for a fixed seed; the objective never increases.
inline KMedoidsResult kmedoids(const Matrix& d, int k, std::uint64_t seed,
                               int max_iter = 300) {
  const Eigen::Index n = d.rows();
  if (d.cols() != n) throw DataError("kmedoids: dissimilarity matrix must be square");
  if (k < 1 || k > n) throw DataError("kmedoids: need 1 <= k <= n");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> medoids(order.begin(), order.begin() + k);
  std::sort(medoids.begin(), medoids.end());
  std::vector<char> is_medoid(static_cast<std::size_t>(n), 0);
  for (int m : medoids) is_medoid[static_cast<std::size_t>(m)] = 1;

  // nearest / second-nearest medoid distance per point, refreshed after swaps
  std::vector<double> d1(static_cast<std::size_t>(n)), d2(static_cast<std::size_t>(n));
  std::vector<int> m1(static_cast<std::size_t>(n));
  const auto refresh = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      double second = best;
      int best_m = -1;
      for (int m : medoids) {
        const double dist = d(i, m);
        if (dist < best) {
          second = best;
          best = dist;
          best_m = m;
        } else if (dist < second) {
          second = dist;
        }
      }
      d1[static_cast<std::size_t>(i)] = best;
      d2[static_cast<std::size_t>(i)] = second;
      m1[static_cast<std::size_t>(i)] = best_m;
    }
  };
  refresh();

  KMedoidsResult res;
  double objective = std::accumulate(d1.begin(), d1.end(), 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    double best_delta = -1e-12;  // strict improvement only
    int best_slot = -1, best_h = -1;
    for (std::size_t slot = 0; slot < medoids.size(); ++slot) {
      const int out = medoids[slot];
      for (Eigen::Index h = 0; h < n; ++h) {
        if (is_medoid[static_cast<std::size_t>(h)]) continue;
        double delta = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const std::size_t ii = static_cast<std::size_t>(i);
          const double keep = (m1[ii] == out) ? d2[ii] : d1[ii];
          delta += std::min(keep, d(i, h)) - d1[ii];
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_slot = static_cast<int>(slot);
          best_h = static_cast<int>(h);
        }
      }
    }
    if (best_slot < 0) break;
    is_medoid[static_cast<std::size_t>(medoids[static_cast<std::size_t>(best_slot)])] = 0;
    medoids[static_cast<std::size_t>(best_slot)] = best_h;
    is_medoid[static_cast<std::size_t>(best_h)] = 1;
    refresh();
    const double next = std::accumulate(d1.begin(), d1.end(), 0.0);
    ccsd::detail::check(next <= objective + 1e-9, "kmedoids objective increased");
    objective = next;
    res.iterations = iter + 1;
  }

  std::sort(medoids.begin(), medoids.end());
  res.medoids = medoids;
  res.assignment.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    // nearest medoid, ties to the lowest index
    int cluster = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < medoids.size(); ++c) {
      const double dist = d(i, medoids[c]);
      if (dist < best) {
        best = dist;
        cluster = static_cast<int>(c);
      }
    }
    res.assignment[static_cast<std::size_t>(i)] = cluster;
    res.objective += best;
  }
  return res;
}

}  // namespace ccsd
