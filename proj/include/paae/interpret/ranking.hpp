#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"
#include "paae/metrics/metrics.hpp"

namespace paae {

struct RankedPathway {
  std::string name;
  std::size_t column = 0;
  double mi = 0.0;
};

/// Columns of `a` ranked by mutual information with `labels`, descending,
/// ties in column order; the top `k` are returned.
inline std::vector<RankedPathway> rank_pathways_by_mi(const Matrix& a,
                                                      const std::vector<std::size_t>& labels,
                                                      const std::vector<std::string>& names,
                                                      std::size_t k, std::size_t bins = 0) {
  if (a.rows() != labels.size())
    throw InvalidArgument("rank_pathways_by_mi: labels must align with rows");
  if (names.size() != a.cols())
    throw InvalidArgument("rank_pathways_by_mi: one name per column required");
  std::vector<RankedPathway> ranked;
  for (std::size_t c = 0; c < a.cols(); ++c)
    ranked.push_back({names[c], c, mutual_information(a.column(c), labels, bins)});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedPathway& x, const RankedPathway& y) { return x.mi > y.mi; });
  if (k > ranked.size()) {
    spdlog::warn("rank_pathways_by_mi: k={} exceeds {} columns; clamped", k, ranked.size());
    k = ranked.size();
  }
  ranked.resize(k);
  return ranked;
}

}  // namespace paae
