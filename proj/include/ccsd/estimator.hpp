#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ccsd/errors.hpp"
#include "ccsd/kernel.hpp"
#include "ccsd/spectrum.hpp"

namespace ccsd {

/// Numerical knobs of the divergence estimator.
struct CcsdConfig {
  /// Ridge added inside every logarithm of the symmetric score; chosen
  /// several orders of magnitude below typical Gram values.
  double epsilon = 1e-10;
  /// Drop exact self-kernel terms from the within-distribution sums when
  /// both sides were built from one shared sample.
  bool loo = false;
  /// Cumulative-spectrum fraction kept in the self-Gram blocks before the
  /// trace accumulation; 1 disables the eigenvalue cut.
  double keep_fraction = 1.0;
};

/// The three Gram-trace expectations behind one divergence evaluation.
/// For PSD kernels and row-stochastic weights, i_pq^2 <= i_pp * i_qq.
struct CcsdTerms {
  double i_pp = 0.0;
  double i_qq = 0.0;
  double i_pq = 0.0;
};

/// Row-stochastic Nadaraya-Watson weight matrix: entry (l, i) is the
/// normalized kernel affinity of reference point l to sample point i.
inline Matrix nw_weights(std::span<const Vector> ref,
                         std::span<const Vector> sample, Bandwidth tau) {
  if (ref.empty() || sample.empty())
    throw DataError("nw_weights: empty reference or sample set");
  Matrix w = gram(ref, sample, tau);
  for (Eigen::Index l = 0; l < w.rows(); ++l) {
    const double s = w.row(l).sum();
    if (!(s > 0.0) || !std::isfinite(s))
      throw NumericError(
          "nw_weights: kernel row sum underflowed to zero (tau far too small)");
    w.row(l) /= s;
  }
  return w;
}

/// Scalar-condition overload (e.g. conditioning on time indices).
inline Matrix nw_weights(const Vector& ref, const Vector& sample, Bandwidth tau) {
  if (ref.size() == 0 || sample.size() == 0)
    throw DataError("nw_weights: empty reference or sample set");
  Matrix w = gram(ref, sample, tau);
  for (Eigen::Index l = 0; l < w.rows(); ++l) {
    const double s = w.row(l).sum();
    if (!(s > 0.0) || !std::isfinite(s))
      throw NumericError(
          "nw_weights: kernel row sum underflowed to zero (tau far too small)");
    w.row(l) /= s;
  }
  return w;
}

namespace detail {

/// Quadratic-form accumulation sum_l sum_{i != i'} w_li * w_li'/(1 - w_li)
/// * g(i, i'): self-terms dropped, the partner row renormalized to sum 1.
inline double loo_quadratic(const Matrix& w, const Matrix& g) {
  double acc = 0.0;
  for (Eigen::Index l = 0; l < w.rows(); ++l) {
    const Vector row = w.row(l).transpose();
    const Vector gv = g * row;
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      const double rest = 1.0 - row(i);
      if (rest <= 1e-15) continue;  // all partner mass sits on i itself
      acc += row(i) * (gv(i) - row(i) * g(i, i)) / rest;
    }
  }
  return acc;
}

}  // namespace detail

/// Gram-trace expectations i_pp = tr(Lpp A'A)/n_r, i_qq = tr(Lqq B'B)/n_r,
/// i_pq = (1/n_r) sum_l a_l' Lpq b_l, with optional leave-one-out removal of
/// self-terms and an eigenvalue cut on the self-Gram blocks.
inline CcsdTerms ccsd_terms(const Matrix& a, const Matrix& b, const Matrix& lpp,
                            const Matrix& lqq, const Matrix& lpq,
                            const CcsdConfig& cfg = {}) {
  const Eigen::Index n_r = a.rows();
  const Eigen::Index n_p = a.cols();
  const Eigen::Index n_q = b.cols();
  if (b.rows() != n_r || lpp.rows() != n_p || lpp.cols() != n_p ||
      lqq.rows() != n_q || lqq.cols() != n_q || lpq.rows() != n_p ||
      lpq.cols() != n_q)
    throw DataError("ccsd_terms: non-conformable weight/Gram shapes");
  const Matrix& pp = cfg.keep_fraction < 1.0 ? rank_truncate(lpp, cfg.keep_fraction) : lpp;
  const Matrix& qq = cfg.keep_fraction < 1.0 ? rank_truncate(lqq, cfg.keep_fraction) : lqq;
  CcsdTerms t;
  const double inv_nr = 1.0 / static_cast<double>(n_r);
  if (cfg.loo) {
    t.i_pp = detail::loo_quadratic(a, pp) * inv_nr;
    t.i_qq = detail::loo_quadratic(b, qq) * inv_nr;
  } else {
    t.i_pp = (a * pp).cwiseProduct(a).sum() * inv_nr;
    t.i_qq = (b * qq).cwiseProduct(b).sum() * inv_nr;
  }
  t.i_pq = (a * lpq).cwiseProduct(b).sum() * inv_nr;
  return t;
}

/// Symmetric ridged log score. Equals -log(i_pq / sqrt(i_pp * i_qq)) at
/// epsilon == 0 and stays >= -1e-12 whenever i_pq^2 <= i_pp * i_qq. A zero
/// cross-term with no ridge propagates as +infinity so rankings stay total.
inline double ccsd_score(const CcsdTerms& t, double epsilon) {
  if (epsilon < 0.0) throw ConfigError("ccsd_score: epsilon must be >= 0");
  const double pp = t.i_pp + epsilon;
  const double qq = t.i_qq + epsilon;
  const double pq = t.i_pq + epsilon;
  if (pq <= 0.0) return std::numeric_limits<double>::infinity();
  if (pp <= 0.0 || qq <= 0.0)
    throw NumericError("ccsd_score: invalid terms (zero self-term with nonzero cross-term)");
  return 0.5 * (std::log(pp) + std::log(qq)) - std::log(pq);
}

/// Divergence between two equal-length series conditioned on the shared
/// time grid 1..T: both sides use the same Nadaraya-Watson weights, value
/// Grams come from the series themselves. Symmetric; zero for a == b.
/// `ref` optionally replaces the default reference grid.
inline double ccsd_pair_series(const Vector& a, const Vector& b, Bandwidth tau,
                               Bandwidth sigma, const CcsdConfig& cfg = {},
                               const std::optional<Vector>& ref = {}) {
  if (a.size() != b.size())
    throw DataError("ccsd_pair_series: series length mismatch");
  const Eigen::Index t_len = a.size();
  if (t_len == 0) throw DataError("ccsd_pair_series: empty series");
  Vector grid(t_len);
  for (Eigen::Index t = 0; t < t_len; ++t) grid(t) = static_cast<double>(t + 1);
  const Matrix w = nw_weights(ref ? *ref : grid, grid, tau);
  const Matrix lpp = gram(a, a, sigma);
  const Matrix lqq = gram(b, b, sigma);
  const Matrix lpq = gram(a, b, sigma);
  return ccsd_score(ccsd_terms(w, w, lpp, lqq, lpq, cfg), cfg.epsilon);
}

/// Identity gate: no pairwise reweighting.
struct TrivialGate {
  double operator()(std::uint32_t, std::uint32_t) const { return 1.0; }
};

/// Divergence between two weighted mixtures over scalar outputs. Every
/// pairwise kernel value L(y_i, y_j) is multiplied by gate(tag_i, tag_j),
/// so a symmetric gate keeps the score symmetric and zero for p == q.
/// Tags are opaque caller-side handles (e.g. packed regime flags).
template <typename Gate = TrivialGate>
double ccsd_mixture(const Vector& p_weights, const Vector& p_outputs,
                    std::span<const std::uint32_t> p_tags,
                    const Vector& q_weights, const Vector& q_outputs,
                    std::span<const std::uint32_t> q_tags, Bandwidth sigma_y,
                    double epsilon, Gate&& gate = {}) {
  const Eigen::Index np = p_weights.size();
  const Eigen::Index nq = q_weights.size();
  if (np == 0 || nq == 0)
    throw NumericError("ccsd_mixture: empty mixture (insufficient references)");
  if (p_outputs.size() != np || q_outputs.size() != nq ||
      (!p_tags.empty() && std::cmp_not_equal(p_tags.size(), np)) ||
      (!q_tags.empty() && std::cmp_not_equal(q_tags.size(), nq)))
    throw DataError("ccsd_mixture: weight/output/tag length mismatch");
  if (std::abs(p_weights.sum() - 1.0) > 1e-9 || std::abs(q_weights.sum() - 1.0) > 1e-9)
    throw DataError("ccsd_mixture: mixture weights must sum to 1");

  const auto tag = [](std::span<const std::uint32_t> tags, Eigen::Index i) {
    return tags.empty() ? 0u : tags[static_cast<std::size_t>(i)];
  };
  const auto gated_sum = [&](const Vector& wa, const Vector& ya,
                             std::span<const std::uint32_t> ta, const Vector& wb,
                             const Vector& yb, std::span<const std::uint32_t> tb) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < wa.size(); ++i) {
      double row = 0.0;
      for (Eigen::Index j = 0; j < wb.size(); ++j)
        row += wb(j) * rbf(ya(i), yb(j), sigma_y) * gate(tag(ta, i), tag(tb, j));
      acc += wa(i) * row;
    }
    return acc;
  };

  CcsdTerms t;
  t.i_pp = gated_sum(p_weights, p_outputs, p_tags, p_weights, p_outputs, p_tags);
  t.i_qq = gated_sum(q_weights, q_outputs, q_tags, q_weights, q_outputs, q_tags);
  t.i_pq = gated_sum(p_weights, p_outputs, p_tags, q_weights, q_outputs, q_tags);
  return ccsd_score(t, epsilon);
}

/// Gate-free overload.
inline double ccsd_mixture(const Vector& p_weights, const Vector& p_outputs,
                           const Vector& q_weights, const Vector& q_outputs,
                           Bandwidth sigma_y, double epsilon) {
  return ccsd_mixture(p_weights, p_outputs, {}, q_weights, q_outputs, {},
                      sigma_y, epsilon);
}

}  // namespace ccsd
