#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"

namespace paae {

enum class DistanceMetric { kCosine, kEuclidean };

inline DistanceMetric parse_distance_metric(const std::string& s) {
  if (s == "cosine") return DistanceMetric::kCosine;
  if (s == "euclidean") return DistanceMetric::kEuclidean;
  throw ConfigError("unknown distance metric '" + s + "' (expected cosine or euclidean)");
}

struct Merge {
  std::size_t left = 0;   // cluster ids: leaves 0..n-1, merge m creates n+m
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct ClusterTree {
  std::size_t leaf_count = 0;
  std::vector<Merge> merges;       // n−1 entries
  std::vector<std::size_t> order;  // dendrogram leaf order
};

/// Pairwise distance matrix of the rows of x.
inline Matrix pairwise_distances(const Matrix& x, DistanceMetric metric) {
  const std::size_t n = x.rows();
  std::vector<double> norms(n, 0.0);
  if (metric == DistanceMetric::kCosine)
    for (std::size_t r = 0; r < n; ++r) {
      for (double v : x.row(r)) norms[r] += v * v;
      norms[r] = std::sqrt(norms[r]);
      if (norms[r] == 0.0)
        throw DataError("cosine distance undefined for all-zero row " + std::to_string(r));
    }
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 0.0;
      auto a = x.row(i), b = x.row(j);
      if (metric == DistanceMetric::kCosine) {
        // 1 − cos = ½‖a/|a| − b/|b|‖², exact 0 for parallel rows.
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double t = a[c] / norms[i] - b[c] / norms[j];
          v += t * t;
        }
        v *= 0.5;
      } else {
        for (std::size_t c = 0; c < x.cols(); ++c) v += (a[c] - b[c]) * (a[c] - b[c]);
        v = std::sqrt(v);
      }
      d(i, j) = d(j, i) = v;
    }
  return d;
}

/// Agglomerative average-linkage clustering. Equal distances merge the pair
/// with the lowest slot indices first; the lower slot becomes the left child.
inline ClusterTree hierarchical_cluster(const Matrix& x,
                                        DistanceMetric metric = DistanceMetric::kCosine) {
  const std::size_t n = x.rows();
  if (n < 2) throw InvalidArgument("hierarchical_cluster: need at least 2 rows");
  Matrix d = pairwise_distances(x, metric);
  std::vector<std::size_t> id(n), size(n, 1);
  for (std::size_t i = 0; i < n; ++i) id[i] = i;
  std::vector<bool> active(n, true);
  ClusterTree tree;
  tree.leaf_count = n;
  double last = 0.0;
  for (std::size_t m = 0; m + 1 < n; ++m) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j)
        if (active[j] && d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
    }
    const double h = std::max(last, best);
    last = h;
    tree.merges.push_back({id[bi], id[bj], h, size[bi] + size[bj]});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double v = (static_cast<double>(size[bi]) * d(k, bi) +
                        static_cast<double>(size[bj]) * d(k, bj)) /
                       static_cast<double>(size[bi] + size[bj]);
      d(k, bi) = d(bi, k) = v;
    }
    active[bj] = false;
    size[bi] += size[bj];
    id[bi] = n + m;
  }
  // Depth-first, left child first.
  std::vector<std::size_t> stack{2 * n - 2};
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    if (c < n) {
      tree.order.push_back(c);
      continue;
    }
    const Merge& mg = tree.merges[c - n];
    stack.push_back(mg.right);
    stack.push_back(mg.left);
  }
  return tree;
}

/// Identity order for an axis that is not clustered.
inline ClusterTree unclustered(std::size_t n) {
  ClusterTree t;
  t.leaf_count = n;
  for (std::size_t i = 0; i < n; ++i) t.order.push_back(i);
  return t;
}

}  // namespace paae
