#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "paae/data/expression.hpp"
#include "paae/error.hpp"

namespace paae {

enum class NormalizerKind { kZScore, kPercentile, kLogOffset };

inline NormalizerKind parse_normalizer_kind(const std::string& s) {
  if (s == "zscore") return NormalizerKind::kZScore;
  if (s == "percentile") return NormalizerKind::kPercentile;
  if (s == "log_offset") return NormalizerKind::kLogOffset;
  throw ConfigError("unknown normalizer '" + s + "' (expected zscore, percentile or log_offset)");
}

inline std::string to_string(NormalizerKind k) {
  switch (k) {
    case NormalizerKind::kZScore: return "zscore";
    case NormalizerKind::kPercentile: return "percentile";
    case NormalizerKind::kLogOffset: return "log_offset";
  }
  return "?";
}

/// Per-gene statistics fitted on one table and applied to tables with the
/// same gene axis.
struct Normalizer {
  NormalizerKind kind = NormalizerKind::kZScore;
  std::vector<std::string> gene_names;
  std::vector<double> mean;                    // zscore
  std::vector<double> sd;                      // zscore, population
  std::vector<std::vector<double>> reference;  // percentile: sorted fitted values
  double offset = 1e-3;                        // log_offset
};

inline Normalizer fit_normalizer(const ExpressionTable& t, NormalizerKind kind,
                                 double log_offset = 1e-3) {
  if (t.sample_count() == 0) throw DataError("fit_normalizer: table has no samples");
  Normalizer n;
  n.kind = kind;
  n.gene_names = t.gene_names;
  n.offset = log_offset;
  const std::size_t rows = t.sample_count();
  switch (kind) {
    case NormalizerKind::kZScore:
      n.mean.resize(t.gene_count());
      n.sd.resize(t.gene_count());
      for (std::size_t g = 0; g < t.gene_count(); ++g) {
        double m = 0.0;
        for (std::size_t r = 0; r < rows; ++r) m += t.values(r, g);
        m /= static_cast<double>(rows);
        double v = 0.0;
        for (std::size_t r = 0; r < rows; ++r) v += (t.values(r, g) - m) * (t.values(r, g) - m);
        n.mean[g] = m;
        n.sd[g] = std::sqrt(v / static_cast<double>(rows));
      }
      break;
    case NormalizerKind::kPercentile:
      n.reference.resize(t.gene_count());
      for (std::size_t g = 0; g < t.gene_count(); ++g) {
        n.reference[g] = t.values.column(g);
        std::sort(n.reference[g].begin(), n.reference[g].end());
      }
      break;
    case NormalizerKind::kLogOffset:
      if (!(log_offset > 0.0)) throw ConfigError("log offset must be > 0");
      break;
  }
  return n;
}

/// Empirical percentile of v against a sorted reference: midrank/(n−1) for
/// values present in the reference, linear interpolation between the
/// midranks of neighbouring distinct values otherwise, clamped to [0, 1].
inline double percentile_of(const std::vector<double>& sorted, double v) {
  const std::size_t n = sorted.size();
  if (n == 1) return 0.5;
  const double denom = static_cast<double>(n - 1);
  auto midrank = [&](double value) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), value);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), value);
    const double first = static_cast<double>(lo - sorted.begin());
    const double last = static_cast<double>(hi - sorted.begin()) - 1.0;
    return 0.5 * (first + last);
  };
  if (v <= sorted.front()) return v == sorted.front() ? midrank(v) / denom : 0.0;
  if (v >= sorted.back()) return v == sorted.back() ? midrank(v) / denom : 1.0;
  const auto hi_it = std::lower_bound(sorted.begin(), sorted.end(), v);
  if (*hi_it == v) return midrank(v) / denom;
  const double hi = *hi_it;
  const double lo = *(hi_it - 1);
  const double r_lo = midrank(lo);
  const double r_hi = midrank(hi);
  const double pos = r_lo + (v - lo) / (hi - lo) * (r_hi - r_lo);
  return std::clamp(pos / denom, 0.0, 1.0);
}

inline ExpressionTable apply_normalizer(const Normalizer& n, const ExpressionTable& t) {
  if (t.gene_names != n.gene_names)
    throw DataError("apply_normalizer: gene axis differs from the fitted table");
  ExpressionTable out = t;
  switch (n.kind) {
    case NormalizerKind::kZScore:
      for (std::size_t r = 0; r < t.sample_count(); ++r)
        for (std::size_t g = 0; g < t.gene_count(); ++g)
          out.values(r, g) = n.sd[g] > 0.0 ? (t.values(r, g) - n.mean[g]) / n.sd[g] : 0.0;
      out.scale = ValueScale::normalized();
      break;
    case NormalizerKind::kPercentile:
      for (std::size_t r = 0; r < t.sample_count(); ++r)
        for (std::size_t g = 0; g < t.gene_count(); ++g)
          out.values(r, g) = percentile_of(n.reference[g], t.values(r, g));
      out.scale = ValueScale::normalized();
      break;
    case NormalizerKind::kLogOffset:
      for (std::size_t r = 0; r < t.sample_count(); ++r)
        for (std::size_t g = 0; g < t.gene_count(); ++g) {
          const double lin = std::max(0.0, t.scale.to_linear(t.values(r, g)));
          out.values(r, g) = std::log2(lin + n.offset);
        }
      out.scale = ValueScale::log2_plus_offset(n.offset);
      break;
  }
  return out;
}

}  // namespace paae
