#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace ccsd {

/// Deterministic 64-bit generator (splitmix64). Sampling helpers are written
/// out explicitly so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = ~0ULL - ~0ULL % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal (Box-Muller, both draws consumed every call).
  double next_normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Unordered pair (i, j), i < j, uniform over the n(n-1)/2 pairs.
  std::pair<std::size_t, std::size_t> next_pair(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(next_below(n));
    std::size_t j;
    do {
      j = static_cast<std::size_t>(next_below(n));
    } while (j == i);
    return {std::min(i, j), std::max(i, j)};
  }

 private:
  std::uint64_t state_;
};

}  // namespace ccsd
