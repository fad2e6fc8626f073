#pragma once

#include <cmath>
#include <cstddef>

#include "paae/core/matrix.hpp"
#include "paae/core/rng.hpp"
#include "paae/error.hpp"
#include "paae/models/model.hpp"

namespace paae {

struct MseResult {
  double value = 0.0;
  Matrix grad;  // ∂/∂x̂
};

/// Mean squared error over samples and features.
inline MseResult mse_loss(const Matrix& x, const Matrix& x_hat) {
  if (!x.same_shape(x_hat))
    throw ShapeError("mse_loss: " + x.shape_string() + " vs " + x_hat.shape_string());
  MseResult r{0.0, Matrix(x.rows(), x.cols())};
  if (x.empty()) return r;
  const double inv = 1.0 / static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x_hat[i] - x[i];
    s += d * d;
    r.grad[i] = 2.0 * d * inv;
  }
  r.value = s * inv;
  return r;
}

struct KlResult {
  double value = 0.0;
  Matrix grad_mu;
  Matrix grad_logvar;
};

/// KL(N(μ, σ²) ‖ N(0, I)) summed over latent dims, averaged over samples.
inline KlResult kl_gaussian(const Matrix& mu, const Matrix& logvar) {
  if (!mu.same_shape(logvar))
    throw ShapeError("kl_gaussian: " + mu.shape_string() + " vs " + logvar.shape_string());
  KlResult r{0.0, Matrix(mu.rows(), mu.cols()), Matrix(mu.rows(), mu.cols())};
  if (mu.rows() == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(mu.rows());
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double var = std::exp(logvar[i]);
    s += mu[i] * mu[i] + var - 1.0 - logvar[i];
    r.grad_mu[i] = mu[i] * inv_n;
    r.grad_logvar[i] = 0.5 * (var - 1.0) * inv_n;
  }
  r.value = 0.5 * s * inv_n;
  return r;
}

struct LossResult {
  double total = 0.0;
  double mse = 0.0;
  double kl = 0.0;
  Matrix grad_x_hat;
  Matrix grad_mu;      // KL contribution only; empty for deterministic models
  Matrix grad_logvar;  // KL contribution only
};

/// AE/PAAE: MSE. VAE/PAVAE: MSE + β_eff·KL.
inline LossResult compute_loss(ModelKind kind, const Matrix& x, const ForwardOutputs& out,
                               double beta_eff) {
  MseResult m = mse_loss(x, out.x_hat);
  LossResult r;
  r.mse = m.value;
  r.grad_x_hat = std::move(m.grad);
  r.total = r.mse;
  if (is_variational(kind)) {
    KlResult k = kl_gaussian(out.mu, out.logvar);
    r.kl = k.value;
    r.total += beta_eff * k.value;
    r.grad_mu = std::move(k.grad_mu);
    r.grad_logvar = std::move(k.grad_logvar);
    r.grad_mu *= beta_eff;
    r.grad_logvar *= beta_eff;
  }
  if (std::isnan(r.total)) throw NumericError("loss is NaN");
  return r;
}

struct LossAndGrads {
  LossResult loss;
  ModelParams grads;
};

/// Forward, loss and backward on one batch. `rng` drives dropout and ε.
inline LossAndGrads loss_and_gradients(const Model& model, const Matrix& x, double beta_eff,
                                       bool training, Rng& rng) {
  ForwardCache cache;
  ForwardOutputs out = forward(model, x, training, rng, &cache);
  LossAndGrads r;
  r.loss = compute_loss(model.arch.kind, x, out, beta_eff);
  if (is_variational(model.arch.kind)) {
    r.grads = backward(model, out, cache, r.loss.grad_x_hat, &r.loss.grad_mu,
                       &r.loss.grad_logvar);
  } else {
    r.grads = backward(model, out, cache, r.loss.grad_x_hat);
  }
  return r;
}

}  // namespace paae
