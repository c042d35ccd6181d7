#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "ccsd/errors.hpp"
#include "ccsd/kernel.hpp"

namespace ccsd {

namespace detail {

/// Eigenvalues of a symmetric PSD matrix, ascending, clipped at zero.
/// Rejects matrices with an eigenvalue below -1e-8 * trace.
inline Vector psd_eigenvalues(const Matrix& g, Eigen::SelfAdjointEigenSolver<Matrix>* solver = nullptr) {
  if (g.rows() != g.cols()) throw DataError("spectrum: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> local;
  Eigen::SelfAdjointEigenSolver<Matrix>& es = solver ? *solver : local;
  es.compute(g, solver ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("spectrum: eigendecomposition failed");
  Vector lam = es.eigenvalues();
  const double tol = 1e-8 * std::abs(g.trace());
  if (lam(0) < -tol)
    throw NumericError("spectrum: matrix is not positive semidefinite");
  return lam.cwiseMax(0.0);
}

}  // namespace detail

/// Spectral-entropy effective rank exp(H(lambda_bar)) of a PSD Gram matrix,
/// with eigenvalues normalized to sum 1 and zero eigenvalues contributing 0.
/// Always in [1, n]; a scale-free soft rank.
inline double effective_rank(const Matrix& g) {
  Vector lam = detail::psd_eigenvalues(g);
  const double total = lam.sum();
  if (!(total > 0.0))
    throw NumericError("effective_rank: zero spectrum");
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double p = lam(i) / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

/// Keeps the smallest leading set of eigenpairs whose eigenvalue sum reaches
/// keep_fraction of the trace and reconstructs. Result is symmetric PSD with
/// trace at most that of the input; keep_fraction == 1 returns the input.
inline Matrix rank_truncate(const Matrix& g, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    throw ConfigError("rank_truncate: keep_fraction must be in (0, 1]");
  if (keep_fraction == 1.0) return g;
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  Vector lam = detail::psd_eigenvalues(g, &es);
  const double total = lam.sum();
  const double target = keep_fraction * total;
  // eigenvalues are ascending; walk from the largest down
  double cum = 0.0;
  Eigen::Index first_kept = lam.size();
  for (Eigen::Index i = lam.size() - 1; i >= 0; --i) {
    cum += lam(i);
    first_kept = i;
    if (cum + 1e-12 * total >= target) break;
  }
  Vector kept = lam;
  kept.head(first_kept).setZero();
  Matrix rebuilt = es.eigenvectors() * kept.asDiagonal() *
                   es.eigenvectors().transpose();
  return 0.5 * (rebuilt + rebuilt.transpose());
}

}  // namespace ccsd
