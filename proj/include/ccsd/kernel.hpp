#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ccsd/errors.hpp"

namespace ccsd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Positive finite kernel bandwidth (same units as the distance argument).
class Bandwidth {
 public:
  explicit Bandwidth(double value) : value_(value) {
    if (!std::isfinite(value) || value <= 0.0)
      throw ConfigError("bandwidth must be positive and finite, got " +
                        std::to_string(value));
  }
  double value() const { return value_; }
  /// exp(-d2 / (2 sigma^2)) for a precomputed squared distance.
  double gauss(double d2) const { return std::exp(-d2 / (2.0 * value_ * value_)); }

 private:
  double value_;
};

/// Gaussian RBF kernel on vectors; symmetric, rbf(u, u) == 1 exactly.
inline double rbf(const Vector& u, const Vector& v, Bandwidth sigma) {
  if (u.size() != v.size())
    throw DataError("rbf: dimension mismatch (" + std::to_string(u.size()) +
                    " vs " + std::to_string(v.size()) + ")");
  return sigma.gauss((u - v).squaredNorm());
}

/// Scalar-sample overload.
inline double rbf(double u, double v, Bandwidth sigma) {
  const double d = u - v;
  return sigma.gauss(d * d);
}

/// Gram matrix of RBF evaluations between two sample sets. Entries lie in
/// (0, 1]; gram(X, X, s) is exactly symmetric with unit diagonal because
/// the per-pair distance computation is order-symmetric.
inline Matrix gram(std::span<const Vector> xs, std::span<const Vector> ys,
                   Bandwidth sigma) {
  if (xs.empty() || ys.empty()) throw DataError("gram: empty sample set");
  const auto dim = xs.front().size();
  for (const auto& v : xs)
    if (v.size() != dim) throw DataError("gram: ragged sample dimensions");
  for (const auto& v : ys)
    if (v.size() != dim) throw DataError("gram: ragged sample dimensions");
  Matrix g(xs.size(), ys.size());
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      g(i, j) = sigma.gauss((xs[static_cast<std::size_t>(i)] -
                             ys[static_cast<std::size_t>(j)])
                                .squaredNorm());
  return g;
}

inline Matrix gram(const std::vector<Vector>& xs, const std::vector<Vector>& ys,
                   Bandwidth sigma) {
  return gram(std::span<const Vector>(xs), std::span<const Vector>(ys), sigma);
}

/// Gram matrix for scalar samples (each entry of xs/ys is one sample).
inline Matrix gram(const Vector& xs, const Vector& ys, Bandwidth sigma) {
  if (xs.size() == 0 || ys.size() == 0) throw DataError("gram: empty sample set");
  const double inv = -1.0 / (2.0 * sigma.value() * sigma.value());
  Matrix g(xs.size(), ys.size());
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      const double d = xs[i] - ys[j];
      g(i, j) = std::exp(inv * d * d);
    }
  return g;
}

}  // namespace ccsd
