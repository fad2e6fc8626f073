#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"

namespace paae {

/// Class indices 0..k-1 paired with their names.
struct EncodedLabels {
  std::vector<std::size_t> y;
  std::vector<std::string> vocabulary;
};

inline EncodedLabels encode_labels(const std::vector<std::string>& labels,
                                   std::vector<std::string> vocabulary = {}) {
  if (vocabulary.empty()) {
    std::set<std::string> s(labels.begin(), labels.end());
    vocabulary.assign(s.begin(), s.end());
  }
  EncodedLabels e{{}, vocabulary};
  e.y.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = std::find(vocabulary.begin(), vocabulary.end(), l);
    if (it == vocabulary.end()) throw DataError("label '" + l + "' not in the vocabulary");
    e.y.push_back(static_cast<std::size_t>(it - vocabulary.begin()));
  }
  return e;
}

inline std::vector<std::string> index_vocabulary(std::size_t n_classes) {
  std::vector<std::string> v;
  for (std::size_t k = 0; k < n_classes; ++k) v.push_back(std::to_string(k));
  return v;
}

struct LogisticConfig {
  double C = 1.0;
  std::size_t max_iter = 100;
  double tolerance = 1e-6;  // max-abs gradient
  std::size_t memory = 10;
};

struct LogisticModel {
  Matrix weights;  // d × k
  Matrix bias;     // 1 × k
  std::vector<std::string> vocabulary;
  std::vector<double> objective_history;  // one entry per accepted iterate
  std::size_t iterations = 0;
  bool converged = false;

  std::size_t feature_count() const noexcept { return weights.rows(); }
  std::size_t class_count() const noexcept { return weights.cols(); }
};

/// Row-wise softmax, max-shifted.
inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) z += (p(r, c) = std::exp(in[c] - m));
    for (std::size_t c = 0; c < logits.cols(); ++c) p(r, c) /= z;
  }
  return p;
}

namespace detail {

struct LogisticObjective {
  const Matrix& x;
  const std::vector<std::size_t>& y;
  std::size_t k;
  double C;

  std::size_t dim() const { return x.cols() * k + k; }

  // ½‖W‖² + C·Σ CE; θ = [W row-major, b].
  double data_loss(const std::vector<double>& theta) const {
    Matrix logits = logits_of(theta);
    double ce = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto l = logits.row(r);
      const double m = *std::max_element(l.begin(), l.end());
      double z = 0.0;
      for (double v : l) z += std::exp(v - m);
      ce += m + std::log(z) - l[y[r]];
    }
    return ce;
  }

  Matrix logits_of(const std::vector<double>& theta) const {
    const std::size_t d = x.cols();
    Matrix w(d, k), b(1, k);
    std::copy_n(theta.begin(), d * k, w.values().begin());
    std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(d * k), k, b.values().begin());
    Matrix logits = matmul(x, w);
    for (std::size_t r = 0; r < logits.rows(); ++r)
      for (std::size_t c = 0; c < k; ++c) logits(r, c) += b[c];
    return logits;
  }

  double operator()(const std::vector<double>& theta, std::vector<double>& grad) const {
    const std::size_t d = x.cols();
    Matrix logits = logits_of(theta);
    Matrix p = softmax_rows(logits);
    double ce = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto l = logits.row(r);
      const double m = *std::max_element(l.begin(), l.end());
      double z = 0.0;
      for (double v : l) z += std::exp(v - m);
      ce += m + std::log(z) - l[y[r]];
      p(r, y[r]) -= 1.0;
    }
    Matrix gw = matmul_tn(x, p);
    grad.assign(dim(), 0.0);
    double reg = 0.0;
    for (std::size_t i = 0; i < d * k; ++i) {
      reg += theta[i] * theta[i];
      grad[i] = theta[i] + C * gw[i];
    }
    for (std::size_t r = 0; r < p.rows(); ++r)
      for (std::size_t c = 0; c < k; ++c) grad[d * k + c] += C * p(r, c);
    return 0.5 * reg + C * ce;
  }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Multinomial L2 logistic regression fitted by L-BFGS with Armijo
/// backtracking. C scales the data term; the bias is unregularized.
inline LogisticModel lr_fit(const Matrix& x, const std::vector<std::size_t>& y,
                            std::vector<std::string> vocabulary,
                            const LogisticConfig& config = {}) {
  if (x.rows() == 0 || x.rows() != y.size())
    throw InvalidArgument("lr_fit: need one label per sample and at least one sample");
  if (!(config.C > 0.0)) throw ConfigError("lr_fit: C must be > 0");
  if (!x.all_finite()) throw NumericError("lr_fit: non-finite feature value");
  const std::size_t k = vocabulary.size();
  std::set<std::size_t> present;
  for (std::size_t c : y) {
    if (c >= k) throw InvalidArgument("lr_fit: label index outside the vocabulary");
    present.insert(c);
  }
  if (present.size() < 2) throw DataError("lr_fit: need at least two classes present in y");

  detail::LogisticObjective obj{x, y, k, config.C};
  const std::size_t n = obj.dim();
  std::vector<double> theta(n, 0.0), grad, trial(n), trial_grad;
  double f = obj(theta, grad);

  LogisticModel model;
  model.vocabulary = std::move(vocabulary);
  model.objective_history.push_back(f);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(n), alpha_buf;

  for (std::size_t it = 0; it < config.max_iter; ++it) {
    if (detail::max_abs(grad) <= config.tolerance) {
      model.converged = true;
      break;
    }
    // Two-loop recursion.
    dir = grad;
    alpha_buf.assign(s_hist.size(), 0.0);
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha_buf[i] = rho_hist[i] * detail::dot(s_hist[i], dir);
      for (std::size_t j = 0; j < n; ++j) dir[j] -= alpha_buf[i] * y_hist[i][j];
    }
    if (!s_hist.empty()) {
      const double gamma =
          detail::dot(s_hist.back(), y_hist.back()) / detail::dot(y_hist.back(), y_hist.back());
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * detail::dot(y_hist[i], dir);
      for (std::size_t j = 0; j < n; ++j) dir[j] += (alpha_buf[i] - beta) * s_hist[i][j];
    }
    for (double& v : dir) v = -v;
    double slope = detail::dot(grad, dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < n; ++j) dir[j] = -grad[j];
      slope = detail::dot(grad, dir);
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / detail::max_abs(grad)) : 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = theta[j] + step * dir[j];
      f_new = obj(trial, trial_grad);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || !(f_new < f)) break;
    std::vector<double> s(n), yv(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = trial[j] - theta[j];
      yv[j] = trial_grad[j] - grad[j];
    }
    const double sy = detail::dot(s, yv);
    if (sy > 1e-10) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(trial);
    grad.swap(trial_grad);
    f = f_new;
    model.objective_history.push_back(f);
    model.iterations = it + 1;
  }
  if (!model.converged && detail::max_abs(grad) <= config.tolerance) model.converged = true;

  const std::size_t d = x.cols();
  model.weights = Matrix(d, k);
  model.bias = Matrix(1, k);
  std::copy_n(theta.begin(), d * k, model.weights.values().begin());
  std::copy_n(theta.begin() + static_cast<std::ptrdiff_t>(d * k), k, model.bias.values().begin());
  if (!model.weights.all_finite() || !model.bias.all_finite())
    throw NumericError("lr_fit: non-finite parameters");
  return model;
}

inline LogisticModel lr_fit(const Matrix& x, const EncodedLabels& labels,
                            const LogisticConfig& config = {}) {
  return lr_fit(x, labels.y, labels.vocabulary, config);
}

/// ½‖W‖² + C·Σ CE for fixed parameters.
inline double lr_objective(const LogisticModel& m, const Matrix& x,
                           const std::vector<std::size_t>& y, double C) {
  std::vector<double> theta(m.weights.values());
  theta.insert(theta.end(), m.bias.values().begin(), m.bias.values().end());
  detail::LogisticObjective obj{x, y, m.class_count(), C};
  std::vector<double> g;
  return obj(theta, g);
}

/// Σ cross-entropy alone.
inline double lr_data_loss(const LogisticModel& m, const Matrix& x,
                           const std::vector<std::size_t>& y) {
  std::vector<double> theta(m.weights.values());
  theta.insert(theta.end(), m.bias.values().begin(), m.bias.values().end());
  return detail::LogisticObjective{x, y, m.class_count(), 1.0}.data_loss(theta);
}

inline Matrix lr_logits(const LogisticModel& m, const Matrix& x) {
  if (x.cols() != m.feature_count())
    throw ShapeError("lr_predict: expected " + std::to_string(m.feature_count()) +
                     " features, got " + std::to_string(x.cols()));
  Matrix logits = matmul(x, m.weights);
  for (std::size_t r = 0; r < logits.rows(); ++r)
    for (std::size_t c = 0; c < logits.cols(); ++c) logits(r, c) += m.bias[c];
  return logits;
}

inline Matrix lr_predict_proba(const LogisticModel& m, const Matrix& x) {
  return softmax_rows(lr_logits(m, x));
}

}  // namespace paae
