#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <span>
#include <thread>
#include <vector>

#include "paae/core/matrix.hpp"
#include "paae/core/rng.hpp"
#include "paae/error.hpp"

namespace paae {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<double> counts;  // leaf class counts
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0

  const TreeNode& leaf_for(std::span<const double> x) const {
    const TreeNode* n = &nodes[0];
    while (n->feature >= 0)
      n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold
                                              ? n->left
                                              : n->right)];
    return *n;
  }
  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (nodes[i].feature >= 0) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  // 0 → ⌈√d⌉
  bool bootstrap = true;
  std::size_t threads = 1;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<std::string> vocabulary;
  std::size_t feature_count = 0;
  std::size_t max_features = 0;

  std::size_t class_count() const noexcept { return vocabulary.size(); }
};

namespace detail {

inline double gini_weighted(const std::vector<double>& counts, double n) {
  if (n <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += c * c;
  return n - s / n;  // n · gini
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<std::size_t>& y, std::size_t k,
              std::size_t max_features, std::size_t min_split, Rng& rng)
      : x_(x), y_(y), k_(k), max_features_(max_features), min_split_(min_split), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    grow(samples);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& samples) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::vector<double> counts(k_, 0.0);
    for (std::size_t s : samples) counts[y_[s]] += 1.0;
    const std::size_t distinct =
        static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](double c) {
          return c > 0.0;
        }));
    if (distinct <= 1 || samples.size() < min_split_ || !split(samples, counts, id)) {
      tree_.nodes[static_cast<std::size_t>(id)].counts = std::move(counts);
      return id;
    }
    const TreeNode node = tree_.nodes[static_cast<std::size_t>(id)];
    std::vector<std::size_t> left, right;
    for (std::size_t s : samples)
      (x_(s, static_cast<std::size_t>(node.feature)) <= node.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    const std::int32_t l = grow(left);
    const std::int32_t r = grow(right);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  bool split(const std::vector<std::size_t>& samples, const std::vector<double>& counts,
             std::int32_t id) {
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features);
    const double n = static_cast<double>(samples.size());
    const double parent = gini_weighted(counts, n);

    bool found = false;
    double best_cost = 0.0, best_thr = 0.0;
    std::size_t best_feature = 0, used = 0;
    std::vector<std::pair<double, std::size_t>> order(samples.size());
    std::vector<double> left(k_);
    for (std::size_t f : features) {
      if (used == max_features_) break;
      for (std::size_t i = 0; i < samples.size(); ++i) order[i] = {x_(samples[i], f), y_[samples[i]]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;  // constant here; not counted
      ++used;
      std::fill(left.begin(), left.end(), 0.0);
      std::vector<double> right = counts;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left[order[i].second] += 1.0;
        right[order[i].second] -= 1.0;
        if (order[i].first == order[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double cost = gini_weighted(left, nl) + gini_weighted(right, n - nl);
        const double thr = order[i].first + 0.5 * (order[i + 1].first - order[i].first);
        const double tol = 1e-12 * std::max(1.0, parent);
        const bool better =
            !found || cost < best_cost - tol ||
            (cost <= best_cost + tol &&
             (f < best_feature || (f == best_feature && thr < best_thr)));
        if (better) {
          found = true;
          best_cost = cost;
          best_feature = f;
          best_thr = thr;
        }
      }
    }
    if (!found) return false;
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = best_thr;
    return true;
  }

  const Matrix& x_;
  const std::vector<std::size_t>& y_;
  std::size_t k_;
  std::size_t max_features_;
  std::size_t min_split_;
  Rng& rng_;
  DecisionTree tree_;
};

}  // namespace detail

/// Random forest of CART trees on bootstrap resamples with Gini splits.
/// Candidate features per node come from a random permutation, skipping
/// features that are constant within the node. Tree t draws from its own
/// stream, so results do not depend on `threads`.
inline ForestModel rf_fit(const Matrix& x, const std::vector<std::size_t>& y,
                          std::vector<std::string> vocabulary, Rng& rng,
                          const ForestConfig& config = {}) {
  if (x.rows() == 0 || x.cols() == 0) throw DataError("rf_fit: empty input");
  if (x.rows() != y.size()) throw InvalidArgument("rf_fit: need one label per sample");
  if (config.n_trees == 0) throw ConfigError("rf_fit: n_trees must be >= 1");
  if (!x.all_finite()) throw NumericError("rf_fit: non-finite feature value");
  for (std::size_t c : y)
    if (c >= vocabulary.size()) throw InvalidArgument("rf_fit: label index outside the vocabulary");

  ForestModel m;
  m.vocabulary = std::move(vocabulary);
  m.feature_count = x.cols();
  m.max_features = config.max_features
                       ? std::min(config.max_features, x.cols())
                       : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));
  m.trees.resize(config.n_trees);
  const std::uint64_t seed = rng.next_u64();

  auto build = [&](std::size_t t) {
    Rng r = Rng::stream(seed, t);
    std::vector<std::size_t> samples(x.rows());
    if (config.bootstrap)
      for (auto& s : samples) s = static_cast<std::size_t>(r.below(x.rows()));
    else
      std::iota(samples.begin(), samples.end(), 0);
    detail::TreeBuilder b(x, y, m.class_count(), m.max_features,
                          std::max<std::size_t>(2, config.min_samples_split), r);
    m.trees[t] = b.build(std::move(samples));
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, config.n_trees));
  if (threads == 1) {
    for (std::size_t t = 0; t < config.n_trees; ++t) build(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < config.n_trees; t += threads) build(t);
      });
    for (auto& th : pool) th.join();
  }
  return m;
}

inline Matrix rf_predict_proba(const ForestModel& m, const Matrix& x) {
  if (x.cols() != m.feature_count)
    throw ShapeError("rf_predict: expected " + std::to_string(m.feature_count) +
                     " features, got " + std::to_string(x.cols()));
  Matrix p(x.rows(), m.class_count());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (const auto& tree : m.trees) {
      const auto& leaf = tree.leaf_for(x.row(r));
      const double total = std::accumulate(leaf.counts.begin(), leaf.counts.end(), 0.0);
      for (std::size_t c = 0; c < m.class_count(); ++c) p(r, c) += leaf.counts[c] / total;
    }
    for (std::size_t c = 0; c < m.class_count(); ++c)
      p(r, c) /= static_cast<double>(m.trees.size());
  }
  return p;
}

/// Index of the largest entry per row; ties go to the lowest index.
inline std::vector<std::size_t> argmax_rows(const Matrix& p) {
  std::vector<std::size_t> out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace paae
