#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"

namespace paae {

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update applied in place to `params`.
/// Moment buffers are created on the first call.
inline void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                      AdamState& state, double lr) {
  if (params.size() != grads.size())
    throw ShapeError("adam_step: parameter/gradient count mismatch");
  if (!(lr > 0.0)) throw InvalidArgument("adam_step: learning rate must be > 0");
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.m.size() != params.size())
    throw ShapeError("adam_step: state was built for a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(*grads[i]) || !state.m[i].same_shape(*grads[i]))
      throw ShapeError("adam_step: shape mismatch on tensor " + std::to_string(i));
    for (double g : grads[i]->values())
      if (std::isnan(g))
        throw NumericError("adam_step: NaN gradient in tensor " + std::to_string(i));
  }

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i]->values();
    const auto& g = grads[i]->values();
    auto& m = state.m[i].values();
    auto& v = state.v[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace paae
