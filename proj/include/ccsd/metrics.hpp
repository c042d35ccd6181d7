#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "ccsd/errors.hpp"

namespace ccsd::metrics {

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long total() const { return tp + fp + fn + tn; }
};

struct EvalReport {
  double auc = 0.0, ap = 0.0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  double threshold = 0.0;
  ConfusionCounts confusion;
};

/// Normalized mutual information 2 I(a;b) / (H(a) + H(b)). Two constant
/// labelings are the same single-block partition, hence 1; one constant
/// against a non-trivial labeling gives 0.
inline double nmi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("nmi: labeling length mismatch");
  const std::size_t n = a.size();
  if (n == 0) throw DataError("nmi: empty labelings");
  std::map<int, long> ca, cb;
  std::map<std::pair<int, int>, long> joint;
  for (std::size_t i = 0; i < n; ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  const double dn = static_cast<double>(n);
  const auto entropy = [dn](const std::map<int, long>& counts) {
    double h = 0.0;
    for (const auto& [_, c] : counts) {
      const double p = static_cast<double>(c) / dn;
      h -= p * std::log(p);
    }
    return h;
  };
  const double ha = entropy(ca);
  const double hb = entropy(cb);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [ab, c] : joint) {
    const double pj = static_cast<double>(c) / dn;
    const double pa = static_cast<double>(ca[ab.first]) / dn;
    const double pb = static_cast<double>(cb[ab.second]) / dn;
    mi += pj * std::log(pj / (pa * pb));
  }
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  return nmi(std::span<const int>(a), std::span<const int>(b));
}

namespace detail {
inline void check_binary_inputs(std::span<const double> scores,
                                std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw DataError("metrics: scores/labels must be non-empty and aligned");
  for (int l : labels)
    if (l != 0 && l != 1) throw DataError("metrics: labels must be 0/1");
}
}  // namespace detail

/// Mann-Whitney ROC-AUC: probability a random positive outranks a random
/// negative, ties counted one half. Undefined for a single class.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_binary_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });
  // average ranks over tie groups
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
    i = j + 1;
  }
  long pos = 0;
  double rank_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    if (labels[t] == 1) {
      ++pos;
      rank_sum += rank[t];
    }
  const long neg = static_cast<long>(n) - pos;
  if (pos == 0 || neg == 0)
    throw NumericError("roc_auc: undefined with a single class");
  const double u = rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

namespace detail {
/// Descending score, ties broken by original index: the deterministic
/// ranking used by average precision.
inline std::vector<std::size_t> ap_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return scores[i] > scores[j];
  });
  return order;
}
}  // namespace detail

/// Step-wise average precision sum_k (R_k - R_{k-1}) P_k over descending-
/// score prefixes. Requires at least one positive.
inline double average_precision(std::span<const double> scores,
                                std::span<const int> labels) {
  detail::check_binary_inputs(scores, labels);
  const auto order = detail::ap_order(scores);
  long total_pos = 0;
  for (int l : labels) total_pos += l;
  if (total_pos == 0)
    throw NumericError("average_precision: undefined without positives");
  double ap = 0.0;
  long tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]] == 1) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(total_pos);
}

inline ConfusionCounts confusion_counts(std::span<const double> scores,
                                        std::span<const int> labels,
                                        double threshold) {
  detail::check_binary_inputs(scores, labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && labels[i] == 1) ++c.tp;
    else if (pred) ++c.fp;
    else if (labels[i] == 1) ++c.fn;
    else ++c.tn;
  }
  return c;
}

/// Thresholded metrics with the 0/0 -> 0 convention.
inline EvalReport confusion_at(std::span<const double> scores,
                               std::span<const int> labels, double threshold) {
  EvalReport r;
  r.threshold = threshold;
  r.confusion = confusion_counts(scores, labels, threshold);
  const auto& c = r.confusion;
  const double n = static_cast<double>(c.total());
  r.accuracy = n > 0 ? static_cast<double>(c.tp + c.tn) / n : 0.0;
  r.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

/// Scans thresholds at the observed score values (plus a predict-nothing
/// sentinel) and returns the F1 maximizer; ties go to the lowest threshold.
inline std::pair<double, double> best_f1_threshold(std::span<const double> scores,
                                                   std::span<const int> labels) {
  detail::check_binary_inputs(scores, labels);
  long pos = 0;
  for (int l : labels) pos += l;
  if (pos == 0 || pos == static_cast<long>(labels.size()))
    throw NumericError("best_f1_threshold: need both classes");
  std::vector<double> candidates(scores.begin(), scores.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  candidates.push_back(std::numeric_limits<double>::infinity());
  double best_f1 = -1.0;
  double best_thr = candidates.front();
  for (double thr : candidates) {
    const double f1 = confusion_at(scores, labels, thr).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_thr = thr;
    }
  }
  return {best_thr, best_f1};
}

}  // namespace ccsd::metrics
