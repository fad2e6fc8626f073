#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include <spdlog/spdlog.h>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"

namespace paae {

/// One row of the results table.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro
  double roc_auc = 0.0;    // macro one-vs-rest
  double test_mse = 0.0;
  std::size_t param_count = 0;
};

struct ConfusionMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<double> class_precision, class_recall, class_f1;
};

/// Accuracy and unweighted per-class means over `n_classes`; a per-class
/// value with an empty denominator counts as 0.
inline ConfusionMetrics confusion_metrics(const std::vector<std::size_t>& y_true,
                                          const std::vector<std::size_t>& y_pred,
                                          std::size_t n_classes) {
  if (y_true.empty()) throw InvalidArgument("confusion_metrics: empty input");
  if (y_true.size() != y_pred.size())
    throw InvalidArgument("confusion_metrics: y_true and y_pred differ in length");
  std::vector<double> tp(n_classes, 0.0), pred(n_classes, 0.0), actual(n_classes, 0.0);
  double hits = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= n_classes || y_pred[i] >= n_classes)
      throw InvalidArgument("confusion_metrics: label outside the vocabulary");
    actual[y_true[i]] += 1.0;
    pred[y_pred[i]] += 1.0;
    if (y_true[i] == y_pred[i]) {
      tp[y_true[i]] += 1.0;
      hits += 1.0;
    }
  }
  ConfusionMetrics m;
  m.accuracy = hits / static_cast<double>(y_true.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double p = pred[c] > 0.0 ? tp[c] / pred[c] : 0.0;
    const double r = actual[c] > 0.0 ? tp[c] / actual[c] : 0.0;
    const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    m.class_precision.push_back(p);
    m.class_recall.push_back(r);
    m.class_f1.push_back(f);
  }
  const double k = static_cast<double>(n_classes);
  m.precision = std::accumulate(m.class_precision.begin(), m.class_precision.end(), 0.0) / k;
  m.recall = std::accumulate(m.class_recall.begin(), m.class_recall.end(), 0.0) / k;
  m.f1 = std::accumulate(m.class_f1.begin(), m.class_f1.end(), 0.0) / k;
  return m;
}

/// 1-based midranks (ties share the average rank).
inline std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = rank;
    i = j + 1;
  }
  return r;
}

/// AUC of `scores` for positives vs negatives via midranks; NaN when
/// either side is empty.
inline double roc_auc_binary(const std::vector<bool>& positive, const std::vector<double>& scores) {
  if (positive.size() != scores.size())
    throw InvalidArgument("roc_auc: labels and scores differ in length");
  const std::vector<double> r = midranks(scores);
  double n_pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (positive[i]) {
      n_pos += 1.0;
      rank_sum += r[i];
    }
  const double n_neg = static_cast<double>(r.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nan("");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

/// Macro one-vs-rest AUC over the columns of `scores`. Classes with no
/// positives or no negatives are skipped with a warning.
inline double roc_auc_macro(const std::vector<std::size_t>& y_true, const Matrix& scores) {
  if (y_true.size() != scores.rows())
    throw InvalidArgument("roc_auc_macro: one score row per sample required");
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    std::vector<bool> pos(y_true.size());
    for (std::size_t i = 0; i < y_true.size(); ++i) pos[i] = y_true[i] == c;
    const double auc = roc_auc_binary(pos, scores.column(c));
    if (std::isnan(auc)) {
      spdlog::warn("roc_auc_macro: class {} has no positives or no negatives; skipped", c);
      continue;
    }
    total += auc;
    ++used;
  }
  if (used == 0) throw DataError("roc_auc_macro: no class is scorable one-vs-rest");
  return total / static_cast<double>(used);
}

enum class WilcoxonMethod { kAuto, kExact, kNormal };

struct WilcoxonResult {
  double statistic = 0.0;  // Mann–Whitney U of group a
  double p_value = 1.0;    // two-sided
  bool exact = false;
};

/// Two-sided rank-sum test. Exact enumeration of all rank splits when
/// n_a + n_b ≤ 12 (kAuto); otherwise normal approximation with tie and
/// continuity corrections.
inline WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b,
                                        WilcoxonMethod method = WilcoxonMethod::kAuto) {
  if (a.empty() || b.empty()) throw InvalidArgument("wilcoxon_rank_sum: empty group");
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  const std::vector<double> r = midranks(all);
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  double w = 0.0;
  for (std::size_t i = 0; i < na; ++i) w += r[i];
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb);
  const double u = w - dna * (dna + 1.0) / 2.0;
  const double mean_w = dna * static_cast<double>(n + 1) / 2.0;

  WilcoxonResult res;
  res.statistic = u;
  const bool exact = method == WilcoxonMethod::kExact || (method == WilcoxonMethod::kAuto && n <= 12);
  if (exact) {
    if (n > 24) throw InvalidArgument("wilcoxon_rank_sum: exact path limited to 24 samples");
    const double observed = std::abs(w - mean_w) - 1e-9;
    std::uint64_t extreme = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) s += r[i];
      ++total;
      if (std::abs(s - mean_w) >= observed) ++extreme;
    }
    res.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    res.exact = true;
    return res;
  }
  std::map<double, double> ties;
  for (double v : all) ties[v] += 1.0;
  double tie_sum = 0.0;
  for (const auto& [v, t] : ties) tie_sum += t * t * t - t;
  const double dn = static_cast<double>(n);
  const double var = dna * dnb / 12.0 * ((dn + 1.0) - tie_sum / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double z = std::max(0.0, std::abs(u - dna * dnb / 2.0) - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

/// Equal-frequency bin of each value from its midrank; ties share a bin.
inline std::vector<std::size_t> equal_frequency_bins(const std::vector<double>& v,
                                                     std::size_t bins) {
  const std::vector<double> r = midranks(v);
  const double n = static_cast<double>(v.size());
  std::vector<std::size_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::min(bins - 1, static_cast<std::size_t>((r[i] - 1.0) * static_cast<double>(bins) / n));
  return out;
}

/// Bin count used by mutual_information: 8, reduced to n/5 (≥ 2) for small n.
inline std::size_t default_mi_bins(std::size_t n) {
  return std::clamp<std::size_t>(n / 5, 2, 8);
}

/// Plug-in entropy in nats of a discrete sequence.
inline double entropy_nats(const std::vector<std::size_t>& codes) {
  std::map<std::size_t, double> counts;
  for (std::size_t c : codes) counts[c] += 1.0;
  const double n = static_cast<double>(codes.size());
  double h = 0.0;
  for (const auto& [k, c] : counts) h -= c / n * std::log(c / n);
  return h;
}

/// Plug-in mutual information (nats) between the equal-frequency-binned
/// feature and discrete labels, clamped at 0. `bins` = 0 selects
/// default_mi_bins.
inline double mutual_information(const std::vector<double>& feature,
                                 const std::vector<std::size_t>& labels, std::size_t bins = 0) {
  if (feature.size() != labels.size())
    throw InvalidArgument("mutual_information: feature and labels differ in length");
  if (feature.size() < 2) throw InvalidArgument("mutual_information: need at least 2 samples");
  if (std::all_of(labels.begin(), labels.end(), [&](std::size_t l) { return l == labels[0]; })) {
    spdlog::warn("mutual_information: constant labels; MI is 0");
    return 0.0;
  }
  const std::vector<std::size_t> x =
      equal_frequency_bins(feature, bins ? bins : default_mi_bins(feature.size()));
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], labels[i]}] += 1.0;
    px[x[i]] += 1.0;
    py[labels[i]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (px[key.first] * py[key.second]));
  return std::max(0.0, mi);
}

/// Quantile with linear interpolation between order statistics.
inline double quantile_linear(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidArgument("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct MedianIqr {
  double median = 0.0;
  double iqr = 0.0;
};

inline MedianIqr median_iqr(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("median_iqr: empty input");
  return {quantile_linear(v, 0.5), quantile_linear(v, 0.75) - quantile_linear(v, 0.25)};
}

}  // namespace paae
