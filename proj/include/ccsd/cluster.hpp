#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ccsd/bandwidth.hpp"
#include "ccsd/dtw.hpp"
#include "ccsd/estimator.hpp"
#include "ccsd/kmedoids.hpp"
#include "ccsd/metrics.hpp"
#include "ccsd/parallel.hpp"

namespace ccsd::cluster {

/// One univariate series with an optional class label.
struct LabeledSeries {
  std::string id;
  Vector values;
  std::optional<int> label;
  bool degenerate = false;  ///< constant before standardization
};

enum class Method { ccsd, dtw };

inline const char* method_name(Method m) { return m == Method::ccsd ? "ccsd" : "dtw"; }

/// Condition-bandwidth sweep; entries <= 1 are relative fractions of the
/// series length, larger entries are absolute index distances.
inline constexpr std::array<double, 8> kTauGrid = {0.05, 0.10, 0.15, 0.20,
                                                   2.0,  5.0,  10.0, 20.0};
/// Multipliers applied to the robust value-scale sigma0.
inline constexpr std::array<double, 7> kSigmaMultiplierGrid = {0.5,  0.75, 1.0, 1.25,
                                                               1.5,  2.0,  3.0};
/// Sakoe-Chiba windows; the unset entry means unconstrained.
inline const std::array<std::optional<int>, 5> kDtwWindowGrid = {
    std::nullopt, 5, 10, 20, 30};

/// One grid-search configuration, with the train-resolved value scale so
/// test evaluation never touches test statistics.
struct GridPoint {
  double tau_raw = 0.0;
  double sigma_multiplier = 0.0;
  std::optional<int> dtw_window;
  double sigma0 = 0.0;     ///< robust scale fixed on the training split
  double sigma_abs = 0.0;  ///< sigma0 * sigma_multiplier
  double train_nmi = 0.0;
};

struct ClusterEvalResult {
  double nmi_mean = 0.0;
  double nmi_std = 0.0;
  GridPoint chosen;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_nmi;
};

struct ProtocolConfig {
  CcsdConfig ccsd;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int kmedoids_max_iter = 300;
  int erank_value_sample = 512;  ///< pooled values for the L-side rank check
  std::size_t max_pairs = kDefaultMaxPairs;
  std::uint64_t subsample_seed = 0;
  unsigned threads = 0;
};

/// Per-series z-score (population variance). A constant series maps to
/// zeros with the degenerate flag set; it still participates downstream.
inline LabeledSeries zscore_series(const LabeledSeries& s) {
  const Eigen::Index t_len = s.values.size();
  if (t_len < 2) throw DataError("zscore_series: series must have length >= 2");
  LabeledSeries out = s;
  const double mean = s.values.mean();
  const double var = (s.values.array() - mean).square().sum() /
                     static_cast<double>(t_len);
  const double sd = std::sqrt(var);
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
    out.values.setZero();
    out.degenerate = true;
    return out;
  }
  out.values = (s.values.array() - mean) / sd;
  return out;
}

/// Seeded stratified subsample of at most `cap` series, preserving class
/// proportions within one series. Identity when the input already fits.
inline std::vector<LabeledSeries> stratified_cap(const std::vector<LabeledSeries>& data,
                                                 std::size_t cap,
                                                 std::uint64_t seed) {
  if (data.size() <= cap) return data;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].label) throw DataError("stratified_cap: labels required");
    by_class[*data[i].label].push_back(i);
  }
  const double ratio = static_cast<double>(cap) / static_cast<double>(data.size());
  std::map<int, std::size_t> quota;
  std::size_t assigned = 0;
  std::vector<std::pair<double, int>> remainders;  // (-frac, label)
  for (const auto& [label, idx] : by_class) {
    const double exact = ratio * static_cast<double>(idx.size());
    quota[label] = static_cast<std::size_t>(exact);
    assigned += quota[label];
    remainders.emplace_back(-(exact - std::floor(exact)), label);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; assigned < cap && r < remainders.size(); ++r) {
    ++quota[remainders[r].second];
    ++assigned;
  }
  Rng rng(seed);
  std::vector<std::size_t> selected;
  for (auto& [label, idx] : by_class) {
    rng.shuffle(idx);
    const std::size_t q = std::min(quota[label], idx.size());
    selected.insert(selected.end(), idx.begin(), idx.begin() + q);
  }
  std::sort(selected.begin(), selected.end());
  std::vector<LabeledSeries> out;
  out.reserve(selected.size());
  for (std::size_t i : selected) out.push_back(data[i]);
  return out;
}

namespace detail {

inline Eigen::Index common_length(const std::vector<LabeledSeries>& data) {
  if (data.empty()) throw DataError("cluster: empty series set");
  const Eigen::Index t_len = data.front().values.size();
  for (const auto& s : data)
    if (s.values.size() != t_len)
      throw DataError("cluster: series lengths differ (equal-length data required)");
  return t_len;
}

inline std::vector<double> pooled_values(const std::vector<LabeledSeries>& data) {
  std::vector<double> vals;
  for (const auto& s : data)
    vals.insert(vals.end(), s.values.begin(), s.values.end());
  return vals;
}

/// Evenly spaced deterministic subsample of at most n values.
inline Vector pooled_value_sample(const std::vector<LabeledSeries>& data,
                                  std::size_t n) {
  const auto vals = pooled_values(data);
  const std::size_t take = std::min(n, vals.size());
  Vector out(static_cast<Eigen::Index>(take));
  for (std::size_t i = 0; i < take; ++i)
    out(static_cast<Eigen::Index>(i)) =
        vals[i * vals.size() / take];
  return out;
}

inline double resolve_tau_abs(double tau_raw, Eigen::Index t_len) {
  return tau_raw <= 1.0 ? tau_raw * static_cast<double>(t_len) : tau_raw;
}

inline Vector time_grid(Eigen::Index t_len) {
  Vector g(t_len);
  for (Eigen::Index t = 0; t < t_len; ++t) g(t) = static_cast<double>(t + 1);
  return g;
}

}  // namespace detail

/// Robust value scale of a split: IQR/1.349 over pooled pairwise scalar
/// differences (seeded subsample above the pair cap).
inline double resolve_sigma0(const std::vector<LabeledSeries>& data,
                             std::size_t max_pairs = kDefaultMaxPairs,
                             std::uint64_t seed = 0) {
  return iqr_bandwidth(detail::pooled_values(data), max_pairs, seed).value();
}

/// Pairwise conditional-divergence dissimilarity matrix. tau_raw <= 1 is a
/// fraction of the series length; sigma = sigma0 * sigma_multiplier where
/// sigma0 defaults to the robust scale of `data` but callers evaluating a
/// held-out split must pass the training-split value.
inline Matrix pairwise_ccsd(const std::vector<LabeledSeries>& data, double tau_raw,
                            double sigma_multiplier, const CcsdConfig& cfg = {},
                            std::optional<double> sigma0 = {},
                            unsigned threads = 0,
                            std::size_t max_pairs = kDefaultMaxPairs,
                            std::uint64_t subsample_seed = 0) {
  const Eigen::Index t_len = detail::common_length(data);
  const std::size_t n = data.size();
  const double s0 = sigma0 ? *sigma0 : resolve_sigma0(data, max_pairs, subsample_seed);
  const Bandwidth sigma(s0 * sigma_multiplier);
  const Bandwidth tau(detail::resolve_tau_abs(tau_raw, t_len));

  const Vector grid = detail::time_grid(t_len);
  const Matrix w = nw_weights(grid, grid, tau);
  const Matrix m = w.transpose() * w;  // pooled condition-weight products
  const double inv_nr = 1.0 / static_cast<double>(t_len);

  // per-series self-Gram statistics, cached once
  std::vector<double> self_term(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        Matrix lpp = gram(data[i].values, data[i].values, sigma);
        if (cfg.keep_fraction < 1.0) lpp = rank_truncate(lpp, cfg.keep_fraction);
        self_term[i] = lpp.cwiseProduct(m).sum() * inv_nr;
      },
      threads);

  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const std::size_t pairs = n * (n - 1) / 2;
  parallel_for(
      pairs,
      [&](std::size_t p) {
        // unrank p -> (i, j), i < j
        std::size_t i = 0;
        std::size_t offset = p;
        while (offset >= n - 1 - i) {
          offset -= n - 1 - i;
          ++i;
        }
        const std::size_t j = i + 1 + offset;
        const Matrix lpq = gram(data[i].values, data[j].values, sigma);
        CcsdTerms t;
        t.i_pp = self_term[i];
        t.i_qq = self_term[j];
        t.i_pq = lpq.cwiseProduct(m).sum() * inv_nr;
        const double score = ccsd_score(t, cfg.epsilon);
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = score;
        d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = score;
      },
      threads);
  return d;
}

/// Pairwise DTW dissimilarity matrix under one Sakoe-Chiba window.
inline Matrix pairwise_dtw(const std::vector<LabeledSeries>& data,
                           std::optional<int> window, unsigned threads = 0) {
  const std::size_t n = data.size();
  if (n == 0) throw DataError("cluster: empty series set");
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const std::size_t pairs = n * (n - 1) / 2;
  parallel_for(
      pairs,
      [&](std::size_t p) {
        std::size_t i = 0;
        std::size_t offset = p;
        while (offset >= n - 1 - i) {
          offset -= n - 1 - i;
          ++i;
        }
        const std::size_t j = i + 1 + offset;
        const double dist = dtw_distance(data[i].values, data[j].values, window);
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dist;
        d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dist;
      },
      threads);
  return d;
}

namespace detail {

inline std::vector<int> labels_of(const std::vector<LabeledSeries>& data) {
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& s : data) {
    if (!s.label) throw DataError("cluster: labels required");
    labels.push_back(*s.label);
  }
  return labels;
}

inline int class_count(const std::vector<int>& labels) {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

/// Mean NMI of seeded k-medoids runs against the reference labels.
inline double mean_nmi(const Matrix& d, const std::vector<int>& labels, int k,
                       const ProtocolConfig& cfg, std::vector<double>* per_seed = nullptr) {
  double sum = 0.0;
  for (std::uint64_t seed : cfg.seeds) {
    const auto res = kmedoids(d, k, seed, cfg.kmedoids_max_iter);
    const double v = metrics::nmi(res.assignment, labels);
    if (per_seed) per_seed->push_back(v);
    sum += v;
  }
  return sum / static_cast<double>(cfg.seeds.size());
}

}  // namespace detail

/// Grid search on the training split only: the grid point maximizing mean
/// train NMI, restricted (for the divergence method) to bandwidths passing
/// the effective-rank filter 2 < erank < 0.95 n on both the condition Gram
/// and a pooled value Gram. Ties break toward the earlier grid point.
inline GridPoint select_hyperparams(const std::vector<LabeledSeries>& train,
                                    Method method, const ProtocolConfig& cfg = {}) {
  const auto labels = detail::labels_of(train);
  const int k = detail::class_count(labels);

  GridPoint best;
  double best_nmi = -1.0;
  if (method == Method::dtw) {
    for (const auto& window : kDtwWindowGrid) {
      const Matrix d = pairwise_dtw(train, window, cfg.threads);
      const double v = detail::mean_nmi(d, labels, k, cfg);
      if (v > best_nmi) {
        best_nmi = v;
        best = GridPoint{};
        best.dtw_window = window;
        best.train_nmi = v;
      }
    }
    return best;
  }

  const Eigen::Index t_len = detail::common_length(train);
  const double sigma0 = resolve_sigma0(train, cfg.max_pairs, cfg.subsample_seed);
  const Vector grid = detail::time_grid(t_len);
  const Vector value_pool = detail::pooled_value_sample(
      train, static_cast<std::size_t>(cfg.erank_value_sample));

  for (double tau_raw : kTauGrid) {
    const double tau_abs = detail::resolve_tau_abs(tau_raw, t_len);
    const Matrix k_time = gram(grid, grid, Bandwidth(tau_abs));
    const double erank_k = effective_rank(k_time);
    if (!(erank_k > 2.0 &&
          erank_k < 0.95 * static_cast<double>(t_len)))
      continue;
    for (double mult : kSigmaMultiplierGrid) {
      const Matrix l_pool = gram(value_pool, value_pool, Bandwidth(sigma0 * mult));
      const double erank_l = effective_rank(l_pool);
      if (!(erank_l > 2.0 &&
            erank_l < 0.95 * static_cast<double>(value_pool.size())))
        continue;
      const Matrix d = pairwise_ccsd(train, tau_raw, mult, cfg.ccsd, sigma0,
                                     cfg.threads, cfg.max_pairs, cfg.subsample_seed);
      const double v = detail::mean_nmi(d, labels, k, cfg);
      if (v > best_nmi) {
        best_nmi = v;
        best = GridPoint{};
        best.tau_raw = tau_raw;
        best.sigma_multiplier = mult;
        best.sigma0 = sigma0;
        best.sigma_abs = sigma0 * mult;
        best.train_nmi = v;
      }
    }
  }
  if (best_nmi < 0.0)
    throw NumericError(
        "select_hyperparams: every grid point failed the effective-rank filter");
  return best;
}

/// Seeded k-medoids evaluation on the held-out split at the chosen grid
/// point. The value scale inside `chosen` was fixed on train and is reused
/// verbatim; nothing is re-estimated here.
inline ClusterEvalResult evaluate_test(const std::vector<LabeledSeries>& test,
                                       const GridPoint& chosen, Method method,
                                       const ProtocolConfig& cfg = {}) {
  const auto labels = detail::labels_of(test);
  const int k = detail::class_count(labels);
  const Matrix d =
      method == Method::dtw
          ? pairwise_dtw(test, chosen.dtw_window, cfg.threads)
          : pairwise_ccsd(test, chosen.tau_raw, chosen.sigma_multiplier, cfg.ccsd,
                          chosen.sigma0, cfg.threads, cfg.max_pairs,
                          cfg.subsample_seed);
  ClusterEvalResult res;
  res.chosen = chosen;
  res.seeds = cfg.seeds;
  detail::mean_nmi(d, labels, k, cfg, &res.per_seed_nmi);
  double mean = 0.0;
  for (double v : res.per_seed_nmi) mean += v;
  mean /= static_cast<double>(res.per_seed_nmi.size());
  double var = 0.0;
  for (double v : res.per_seed_nmi) var += (v - mean) * (v - mean);
  var /= static_cast<double>(res.per_seed_nmi.size());
  res.nmi_mean = mean;
  res.nmi_std = std::sqrt(var);
  return res;
}

}  // namespace ccsd::cluster
