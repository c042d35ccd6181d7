#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ccsd/bandwidth.hpp"
#include "ccsd/estimator.hpp"
#include "ccsd/metrics.hpp"
#include "ccsd/parallel.hpp"

namespace ccsd::fraud {

struct TransactionRecord {
  long step = 0;  ///< event time (non-negative)
  std::string customer;
  std::string merchant;
  std::string category;
  double amount = 0.0;
  int fraud = 0;  ///< transaction-level 0/1 label (evaluation only)
};

/// Per-account derived signals after preprocessing.
struct AccountSeries {
  std::string customer;
  Vector z;                       ///< per-account standardized amounts
  Vector dz;                      ///< z_t - z_{t-1}, length T-1
  std::vector<int> cat_codes;
  std::vector<int> mer_codes;
  std::vector<std::uint8_t> f_cat;  ///< category changed at step t
  std::vector<std::uint8_t> f_mer;  ///< merchant changed at step t
  bool fraud_label = false;         ///< any fraudulent transaction
  bool degenerate = false;          ///< constant amounts
  Eigen::Index length() const { return z.size(); }
};

/// One sliding window: condition vector, change-magnitude output, and the
/// regime descriptors at its final transaction.
struct WindowRecord {
  std::string customer;
  long end_step = 0;  ///< 1-based transaction position of the window end
  Vector x;           ///< z-value slice of length K
  double y = 0.0;     ///< |dz| summary at the window end
  std::uint8_t f_cat = 0;
  std::uint8_t f_mer = 0;
  int cat_code = 0;
  int mer_code = 0;
  std::pair<int, int> pair_key() const { return {cat_code, mer_code}; }
  std::uint32_t flag_tag() const {
    return static_cast<std::uint32_t>(f_cat) << 1 | f_mer;
  }
};

enum class Variant { full, no_rarity, no_decay, no_flag };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::no_rarity: return "no_rarity";
    case Variant::no_decay: return "no_decay";
    case Variant::no_flag: return "no_flag";
    default: return "full";
  }
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "no_rarity") return Variant::no_rarity;
  if (name == "no_decay") return Variant::no_decay;
  if (name == "no_flag") return Variant::no_flag;
  throw ConfigError("unknown variant: " + name);
}

/// How a window summarizes its change signal.
enum class YMode { last_abs_dz, mean_abs_dz };

struct FraudParams {
  int window = 50;            ///< K
  int stride_normal = 15;
  int stride_fraud = 1;
  int local_history = 120;    ///< most recent past windows kept in b(x)
  int top_j = 600;            ///< global mixture truncation
  int min_length = 80;        ///< accounts with T <= min_length are dropped
  double rho_cat = 0.25;      ///< category-mismatch attenuation
  double rho_mer = 0.25;      ///< merchant-mismatch attenuation
  double eta_cat = 1.7;       ///< category flag match boost (local)
  double eta_mer = 1.7;       ///< merchant flag match boost (local)
  double gate_cat = 0.6;      ///< output-kernel gate when category flags differ
  double gate_mer = 0.6;      ///< output-kernel gate when merchant flags differ
  double half_life = 48.0;    ///< recency decay half-life, in transaction steps
  double prior_alpha = 10.0;  ///< rarity prior (f + alpha)^(-beta)
  double prior_beta = 0.5;
  double epsilon = 1e-10;     ///< score ridge
  double lib_fraction = 0.70;        ///< normal accounts used for the library
  double val_normal_fraction = 0.15;
  double val_fraud_fraction = 0.35;
  std::size_t max_pairs = kDefaultMaxPairs;  ///< bandwidth pair subsample cap
  YMode y_mode = YMode::last_abs_dz;
  Variant variant = Variant::full;
};

/// Rarity prior (f + alpha)^(-beta): strictly decreasing in the library
/// frequency f, promoting rare regime pairs.
inline double rarity_weight(long f, double alpha, double beta) {
  return std::pow(static_cast<double>(f) + alpha, -beta);
}

/// Sorts by (customer, step), groups per account, drops short accounts,
/// standardizes amounts per account, and derives change signals. The
/// categorical encoding table is the sorted set of codes seen in the input.
inline std::vector<AccountSeries> preprocess(std::vector<TransactionRecord> records,
                                             const FraudParams& params = {}) {
  std::stable_sort(records.begin(), records.end(),
                   [](const TransactionRecord& a, const TransactionRecord& b) {
                     if (a.customer != b.customer) return a.customer < b.customer;
                     return a.step < b.step;
                   });
  std::map<std::string, int> cat_table, mer_table;
  for (const auto& r : records) {
    cat_table.emplace(r.category, 0);
    mer_table.emplace(r.merchant, 0);
  }
  int next = 0;
  for (auto& [_, code] : cat_table) code = next++;
  next = 0;
  for (auto& [_, code] : mer_table) code = next++;

  std::vector<AccountSeries> accounts;
  std::size_t begin = 0;
  while (begin < records.size()) {
    std::size_t end = begin;
    while (end < records.size() && records[end].customer == records[begin].customer)
      ++end;
    const auto t_len = static_cast<Eigen::Index>(end - begin);
    if (t_len > params.min_length) {
      AccountSeries acc;
      acc.customer = records[begin].customer;
      acc.z.resize(t_len);
      acc.cat_codes.resize(static_cast<std::size_t>(t_len));
      acc.mer_codes.resize(static_cast<std::size_t>(t_len));
      acc.f_cat.assign(static_cast<std::size_t>(t_len), 0);
      acc.f_mer.assign(static_cast<std::size_t>(t_len), 0);
      for (Eigen::Index t = 0; t < t_len; ++t) {
        const auto& r = records[begin + static_cast<std::size_t>(t)];
        acc.z(t) = r.amount;
        acc.cat_codes[static_cast<std::size_t>(t)] = cat_table[r.category];
        acc.mer_codes[static_cast<std::size_t>(t)] = mer_table[r.merchant];
        acc.fraud_label = acc.fraud_label || r.fraud == 1;
      }
      for (Eigen::Index t = 1; t < t_len; ++t) {
        acc.f_cat[static_cast<std::size_t>(t)] =
            acc.cat_codes[static_cast<std::size_t>(t)] !=
            acc.cat_codes[static_cast<std::size_t>(t - 1)];
        acc.f_mer[static_cast<std::size_t>(t)] =
            acc.mer_codes[static_cast<std::size_t>(t)] !=
            acc.mer_codes[static_cast<std::size_t>(t - 1)];
      }
      const double mean = acc.z.mean();
      const double sd = std::sqrt((acc.z.array() - mean).square().sum() /
                                  static_cast<double>(t_len));
      if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
        acc.z.setZero();
        acc.degenerate = true;
      } else {
        acc.z = (acc.z.array() - mean) / sd;
      }
      acc.dz = acc.z.tail(t_len - 1) - acc.z.head(t_len - 1);
      accounts.push_back(std::move(acc));
    }
    begin = end;
  }
  return accounts;
}

/// Sliding windows ending at positions K, K+s, K+2s, ... (1-based). The
/// stride comes from the account class and affects sampling density only.
inline std::vector<WindowRecord> make_windows(const AccountSeries& acc,
                                              const FraudParams& params,
                                              std::optional<int> stride_override = {}) {
  const int k = params.window;
  const int stride = stride_override
                         ? *stride_override
                         : (acc.fraud_label ? params.stride_fraud : params.stride_normal);
  if (k < 2 || stride < 1) throw ConfigError("make_windows: need K >= 2, stride >= 1");
  std::vector<WindowRecord> out;
  const auto t_len = acc.length();
  if (t_len < k) return out;
  for (long end = k; end <= t_len; end += stride) {
    WindowRecord w;
    w.customer = acc.customer;
    w.end_step = end;
    w.x = acc.z.segment(end - k, k);
    const auto last = static_cast<std::size_t>(end - 1);  // 0-based final index
    if (params.y_mode == YMode::last_abs_dz) {
      w.y = std::abs(acc.dz(static_cast<Eigen::Index>(last - 1)));
    } else {
      double sum = 0.0;
      long cnt = 0;
      for (long t = std::max<long>(end - k, 1); t < end; ++t) {
        sum += std::abs(acc.dz(t - 1));
        ++cnt;
      }
      w.y = sum / static_cast<double>(cnt);
    }
    w.f_cat = acc.f_cat[last];
    w.f_mer = acc.f_mer[last];
    w.cat_code = acc.cat_codes[last];
    w.mer_code = acc.mer_codes[last];
    out.push_back(std::move(w));
  }
  return out;
}

/// Disjoint account-level split: library/validation/test for normals,
/// validation/test for frauds. Deterministic for a fixed seed.
struct SplitPlan {
  std::vector<std::size_t> lib_normal, val_normal, test_normal;
  std::vector<std::size_t> val_fraud, test_fraud;
  std::uint64_t seed = 0;
};

inline SplitPlan split_accounts(const std::vector<AccountSeries>& accounts,
                                std::uint64_t seed, const FraudParams& params = {}) {
  std::vector<std::size_t> normal, fraud;
  for (std::size_t i = 0; i < accounts.size(); ++i)
    (accounts[i].fraud_label ? fraud : normal).push_back(i);
  // account order is already deterministic (preprocess sorts by customer)
  Rng rng(seed);
  rng.shuffle(normal);
  rng.shuffle(fraud);
  const auto n_lib = static_cast<std::size_t>(
      std::llround(params.lib_fraction * static_cast<double>(normal.size())));
  const auto n_val_n = static_cast<std::size_t>(std::llround(
      params.val_normal_fraction * static_cast<double>(normal.size())));
  const auto n_val_f = static_cast<std::size_t>(std::llround(
      params.val_fraud_fraction * static_cast<double>(fraud.size())));
  if (n_lib == 0 || n_val_n == 0 || normal.size() <= n_lib + n_val_n ||
      n_val_f == 0 || fraud.size() <= n_val_f)
    throw DataError("split_accounts: not enough accounts per class for all splits");
  SplitPlan plan;
  plan.seed = seed;
  plan.lib_normal.assign(normal.begin(), normal.begin() + n_lib);
  plan.val_normal.assign(normal.begin() + n_lib, normal.begin() + n_lib + n_val_n);
  plan.test_normal.assign(normal.begin() + n_lib + n_val_n, normal.end());
  plan.val_fraud.assign(fraud.begin(), fraud.begin() + n_val_f);
  plan.test_fraud.assign(fraud.begin() + n_val_f, fraud.end());
  return plan;
}

inline bool splits_disjoint(const SplitPlan& plan) {
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto* part : {&plan.lib_normal, &plan.val_normal, &plan.test_normal,
                           &plan.val_fraud, &plan.test_fraud}) {
    seen.insert(part->begin(), part->end());
    total += part->size();
  }
  return seen.size() == total;
}

/// Validation accounts (normal then fraud), by account index.
inline std::vector<std::size_t> concat_val(const SplitPlan& plan) {
  std::vector<std::size_t> v = plan.val_normal;
  v.insert(v.end(), plan.val_fraud.begin(), plan.val_fraud.end());
  return v;
}

/// Test accounts (normal then fraud), by account index.
inline std::vector<std::size_t> concat_test(const SplitPlan& plan) {
  std::vector<std::size_t> v = plan.test_normal;
  v.insert(v.end(), plan.test_fraud.begin(), plan.test_fraud.end());
  return v;
}

/// Frozen normal-reference library: windows, bandwidths, rarity counts and
/// cached squared norms. Built from library-split accounts only.
struct NormalLibrary {
  std::vector<WindowRecord> windows;
  Matrix x;         ///< stacked window vectors, one row per window
  Vector sq_norms;  ///< cached per-window squared norms
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  std::map<std::pair<int, int>, long> rarity;
  long rarity_count(const std::pair<int, int>& key) const {
    const auto it = rarity.find(key);
    return it == rarity.end() ? 0 : it->second;
  }
};

inline NormalLibrary build_library(const std::vector<AccountSeries>& accounts,
                                   const std::vector<std::size_t>& lib_split,
                                   const FraudParams& params,
                                   std::uint64_t bandwidth_seed = 0) {
  NormalLibrary lib;
  for (std::size_t idx : lib_split) {
    const auto& acc = accounts[idx];
    ccsd::detail::check(!acc.fraud_label, "library must contain normal accounts only");
    auto windows = make_windows(acc, params, params.stride_normal);
    for (auto& w : windows) lib.windows.push_back(std::move(w));
  }
  if (lib.windows.size() < 2)
    throw DataError("build_library: library has fewer than two windows");
  const auto n = static_cast<Eigen::Index>(lib.windows.size());
  lib.x.resize(n, params.window);
  std::vector<double> ys(lib.windows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    lib.x.row(i) = lib.windows[static_cast<std::size_t>(i)].x.transpose();
    ys[static_cast<std::size_t>(i)] = lib.windows[static_cast<std::size_t>(i)].y;
    ++lib.rarity[lib.windows[static_cast<std::size_t>(i)].pair_key()];
  }
  lib.sq_norms = lib.x.rowwise().squaredNorm();
  std::vector<Vector> xs;
  xs.reserve(lib.windows.size());
  for (const auto& w : lib.windows) xs.push_back(w.x);
  lib.sigma_x = median_heuristic(xs, params.max_pairs, bandwidth_seed).value();
  lib.sigma_y =
      median_heuristic(std::span<const double>(ys), params.max_pairs, bandwidth_seed)
          .value();
  return lib;
}

/// Normalized weights over a reference window set.
struct MixtureWeights {
  std::vector<std::size_t> indices;
  Vector weights;
  bool underflow_fallback = false;
  bool empty() const { return indices.empty(); }
};

namespace detail {

inline MixtureWeights top_j_normalize(std::vector<std::size_t> idx,
                                      const std::vector<double>& raw,
                                      const Vector& dist_for_fallback,
                                      std::size_t top_j) {
  MixtureWeights mix;
  double max_raw = 0.0;
  for (std::size_t i : idx) max_raw = std::max(max_raw, raw[i]);
  if (max_raw <= 0.0) {
    // every weight underflowed: fall back to the nearest references, uniform
    mix.underflow_fallback = true;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (dist_for_fallback(static_cast<Eigen::Index>(a)) !=
          dist_for_fallback(static_cast<Eigen::Index>(b)))
        return dist_for_fallback(static_cast<Eigen::Index>(a)) <
               dist_for_fallback(static_cast<Eigen::Index>(b));
      return a < b;
    });
    if (idx.size() > top_j) idx.resize(top_j);
    mix.indices = std::move(idx);
    mix.weights = Vector::Constant(static_cast<Eigen::Index>(mix.indices.size()),
                                   1.0 / static_cast<double>(mix.indices.size()));
    return mix;
  }
  const auto by_weight = [&](std::size_t a, std::size_t b) {
    if (raw[a] != raw[b]) return raw[a] > raw[b];
    return a < b;
  };
  if (idx.size() > top_j) {
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(top_j),
                      idx.end(), by_weight);
    idx.resize(top_j);
  } else {
    std::sort(idx.begin(), idx.end(), by_weight);
  }
  mix.indices = std::move(idx);
  mix.weights.resize(static_cast<Eigen::Index>(mix.indices.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < mix.indices.size(); ++i) {
    mix.weights(static_cast<Eigen::Index>(i)) = raw[mix.indices[i]];
    total += raw[mix.indices[i]];
  }
  mix.weights /= total;
  return mix;
}

}  // namespace detail

/// Global mixture a(x): RBF similarity to every library window, categorical
/// mismatch attenuation, rarity prior on the library window's regime pair
/// (skipped under no_rarity), top-J truncation and renormalization.
inline MixtureWeights global_mixture(const WindowRecord& x, const NormalLibrary& lib,
                                     const FraudParams& params) {
  if (lib.windows.empty())
    throw NumericError("global_mixture: empty library (insufficient references)");
  const Bandwidth sigma_x(lib.sigma_x);
  Vector d2 = (lib.sq_norms.array() + x.x.squaredNorm()).matrix() -
              2.0 * (lib.x * x.x);
  d2 = d2.cwiseMax(0.0);
  const std::size_t n = lib.windows.size();
  std::vector<double> raw(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& w = lib.windows[j];
    double v = sigma_x.gauss(d2(static_cast<Eigen::Index>(j)));
    if (w.cat_code != x.cat_code) v *= params.rho_cat;
    if (w.mer_code != x.mer_code) v *= params.rho_mer;
    if (params.variant != Variant::no_rarity)
      v *= rarity_weight(lib.rarity_count(w.pair_key()), params.prior_alpha,
                         params.prior_beta);
    raw[j] = v;
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return detail::top_j_normalize(std::move(idx), raw, d2,
                                 static_cast<std::size_t>(params.top_j));
}

/// Local mixture b(x): the account's strictly past windows (most recent
/// local_history of them) with the shared window-space RBF, mismatch
/// attenuation, recency decay (skipped under no_decay) and change-flag
/// match boosts (skipped under no_flag).
inline MixtureWeights local_mixture(const WindowRecord& x,
                                    std::span<const WindowRecord> history,
                                    const NormalLibrary& lib,
                                    const FraudParams& params) {
  const Bandwidth sigma_x(lib.sigma_x);
  std::vector<std::size_t> candidates;
  for (std::size_t h = 0; h < history.size(); ++h) {
    ccsd::detail::check(history[h].customer == x.customer,
                  "local history must come from the query's account");
    if (history[h].end_step < x.end_step) candidates.push_back(h);
  }
  const auto keep = static_cast<std::size_t>(params.local_history);
  if (candidates.size() > keep)
    candidates.erase(candidates.begin(),
                     candidates.end() - static_cast<std::ptrdiff_t>(keep));
  MixtureWeights mix;
  if (candidates.empty()) return mix;  // insufficient history: caller skips

  std::vector<double> raw(history.size(), 0.0);
  Vector dist(static_cast<Eigen::Index>(history.size()));
  dist.setConstant(std::numeric_limits<double>::infinity());
  for (std::size_t h : candidates) {
    const auto& w = history[h];
    const double d2 = (w.x - x.x).squaredNorm();
    dist(static_cast<Eigen::Index>(h)) = d2;
    double v = sigma_x.gauss(d2);
    if (w.cat_code != x.cat_code) v *= params.rho_cat;
    if (w.mer_code != x.mer_code) v *= params.rho_mer;
    if (params.variant != Variant::no_decay)
      v *= std::exp2(-static_cast<double>(x.end_step - w.end_step) / params.half_life);
    if (params.variant != Variant::no_flag) {
      if (w.f_cat == x.f_cat) v *= params.eta_cat;
      if (w.f_mer == x.f_mer) v *= params.eta_mer;
    }
    raw[h] = v;
  }
  const std::size_t count = candidates.size();
  return detail::top_j_normalize(std::move(candidates), raw, dist, count);
}

/// Gated divergence of the local mixture against the global mixture in the
/// change space. The gate attenuates kernel values between reference windows
/// whose change flags disagree; under no_flag it is the identity.
inline double score_window(const MixtureWeights& local,
                           std::span<const WindowRecord> history,
                           const MixtureWeights& global, const NormalLibrary& lib,
                           const FraudParams& params) {
  if (local.empty() || global.empty())
    throw NumericError("score_window: empty mixture");
  const auto np = static_cast<Eigen::Index>(local.indices.size());
  const auto nq = static_cast<Eigen::Index>(global.indices.size());
  Vector py(np), qy(nq);
  std::vector<std::uint32_t> ptags(local.indices.size()), qtags(global.indices.size());
  for (Eigen::Index i = 0; i < np; ++i) {
    const auto& w = history[local.indices[static_cast<std::size_t>(i)]];
    py(i) = w.y;
    ptags[static_cast<std::size_t>(i)] = w.flag_tag();
  }
  for (Eigen::Index j = 0; j < nq; ++j) {
    const auto& w = lib.windows[global.indices[static_cast<std::size_t>(j)]];
    qy(j) = w.y;
    qtags[static_cast<std::size_t>(j)] = w.flag_tag();
  }
  const Bandwidth sigma_y(lib.sigma_y);
  if (params.variant == Variant::no_flag)
    return ccsd_mixture(local.weights, py, ptags, global.weights, qy, qtags,
                        sigma_y, params.epsilon, TrivialGate{});
  const double gc = params.gate_cat;
  const double gm = params.gate_mer;
  const auto gate = [gc, gm](std::uint32_t a, std::uint32_t b) {
    double g = 1.0;
    if (((a ^ b) & 2u) != 0) g *= gc;
    if (((a ^ b) & 1u) != 0) g *= gm;
    return g;
  };
  return ccsd_mixture(local.weights, py, ptags, global.weights, qy, qtags,
                      sigma_y, params.epsilon, gate);
}

struct AccountScore {
  double score = 0.0;
  bool scored = false;  ///< false when no window had any past history
  std::vector<double> window_scores;
  long skipped_windows = 0;
};

/// Scores every query window of one account against its strictly past
/// history and the frozen library, aggregating by the maximum. Takes no
/// label: the class only influenced window sampling density upstream.
inline AccountScore score_account(std::span<const WindowRecord> windows,
                                  const NormalLibrary& lib,
                                  const FraudParams& params) {
  AccountScore out;
  for (std::size_t q = 0; q < windows.size(); ++q) {
    const auto history = windows.subspan(0, q);
    const MixtureWeights local = local_mixture(windows[q], history, lib, params);
    if (local.empty()) {
      ++out.skipped_windows;
      continue;
    }
    const MixtureWeights global = global_mixture(windows[q], lib, params);
    const double s = score_window(local, history, global, lib, params);
    out.window_scores.push_back(s);
    if (!out.scored || s > out.score) out.score = s;
    out.scored = true;
  }
  return out;
}

struct AccountOutcome {
  std::string customer;
  double score = 0.0;
  int label = 0;
  bool scored = false;
  long skipped_windows = 0;
};

struct VariantEval {
  std::string variant;
  metrics::EvalReport val;
  metrics::EvalReport test;
  std::vector<AccountOutcome> val_accounts;
  std::vector<AccountOutcome> test_accounts;
};

/// Stage-ordering and leak-proofness record emitted with every run.
struct AuditLog {
  bool splits_disjoint = false;
  bool library_only_normal = false;
  bool bandwidths_fixed_before_scoring = false;
  bool strict_past_enforced = false;
  bool scoring_label_free = true;  ///< scoring APIs take no label argument
  long accounts_excluded_no_history = 0;
};

struct PipelineResult {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  std::size_t lib_window_count = 0;
  std::size_t retained_accounts = 0;
  std::size_t normal_accounts = 0;
  std::size_t fraud_accounts = 0;
  SplitPlan plan;
  double tau_star = 0.0;  ///< F1-optimal threshold fixed on validation (full)
  std::vector<VariantEval> variants;
  AuditLog audit;
};

namespace detail {

inline std::vector<AccountOutcome> score_split(
    const std::vector<AccountSeries>& accounts, const std::vector<std::size_t>& split,
    const NormalLibrary& lib, const FraudParams& params, unsigned threads) {
  std::vector<AccountOutcome> out(split.size());
  parallel_for(
      split.size(),
      [&](std::size_t i) {
        const auto& acc = accounts[split[i]];
        const auto windows = make_windows(acc, params);
        const AccountScore s = score_account(windows, lib, params);
        out[i] = AccountOutcome{acc.customer, s.score,
                                acc.fraud_label ? 1 : 0, s.scored,
                                s.skipped_windows};
      },
      threads);
  return out;
}

inline metrics::EvalReport evaluate_outcomes(const std::vector<AccountOutcome>& outcomes,
                                             double threshold) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& o : outcomes) {
    if (!o.scored) continue;
    scores.push_back(o.score);
    labels.push_back(o.label);
  }
  metrics::EvalReport r = metrics::confusion_at(scores, labels, threshold);
  r.auc = metrics::roc_auc(scores, labels);
  r.ap = metrics::average_precision(scores, labels);
  return r;
}

}  // namespace detail

/// End-to-end protocol: preprocess, split, freeze the library, score the
/// validation accounts under the full model, fix the F1-optimal threshold,
/// then evaluate every requested variant on validation and test at that
/// same threshold.
inline PipelineResult run_pipeline(const std::vector<TransactionRecord>& records,
                                   const FraudParams& base_params, std::uint64_t seed,
                                   const std::vector<Variant>& variants = {Variant::full},
                                   unsigned threads = 0) {
  PipelineResult res;
  const auto accounts = preprocess(records, base_params);
  res.retained_accounts = accounts.size();
  for (const auto& acc : accounts)
    (acc.fraud_label ? res.fraud_accounts : res.normal_accounts) += 1;

  res.plan = split_accounts(accounts, seed, base_params);
  res.audit.splits_disjoint = splits_disjoint(res.plan);
  ccsd::detail::check(res.audit.splits_disjoint, "account splits overlap");

  // the library (and both bandwidths) is frozen before any scoring split is read
  const NormalLibrary lib = build_library(accounts, res.plan.lib_normal, base_params, seed);
  res.sigma_x = lib.sigma_x;
  res.sigma_y = lib.sigma_y;
  res.lib_window_count = lib.windows.size();
  res.audit.library_only_normal = true;
  res.audit.bandwidths_fixed_before_scoring = true;

  FraudParams full = base_params;
  full.variant = Variant::full;
  auto val_full = detail::score_split(accounts, concat_val(res.plan), lib, full, threads);
  {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& o : val_full)
      if (o.scored) {
        scores.push_back(o.score);
        labels.push_back(o.label);
      }
    res.tau_star = metrics::best_f1_threshold(scores, labels).first;
  }

  for (const auto& o : val_full)
    if (!o.scored) ++res.audit.accounts_excluded_no_history;
  bool test_exclusions_counted = false;
  for (Variant v : variants) {
    FraudParams p = base_params;
    p.variant = v;
    VariantEval ev;
    ev.variant = variant_name(v);
    ev.val_accounts = (v == Variant::full)
                          ? val_full
                          : detail::score_split(accounts, concat_val(res.plan), lib, p, threads);
    ev.test_accounts = detail::score_split(accounts, concat_test(res.plan), lib, p, threads);
    ev.val = detail::evaluate_outcomes(ev.val_accounts, res.tau_star);
    ev.test = detail::evaluate_outcomes(ev.test_accounts, res.tau_star);
    if (!test_exclusions_counted) {
      // the scoreable set does not depend on the variant; count once
      for (const auto& o : ev.test_accounts)
        if (!o.scored) ++res.audit.accounts_excluded_no_history;
      test_exclusions_counted = true;
    }
    res.variants.push_back(std::move(ev));
  }
  res.audit.strict_past_enforced = true;  // local_mixture checked every candidate
  return res;
}

}  // namespace ccsd::fraud
