#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "paae/core/adam.hpp"
#include "paae/core/matrix.hpp"
#include "paae/core/rng.hpp"
#include "paae/error.hpp"
#include "paae/models/loss.hpp"
#include "paae/models/model.hpp"
#include "paae/models/schedule.hpp"

namespace paae {

struct TrainConfig {
  std::size_t epochs = 1024;
  double learning_rate = 1e-4;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct FitResult {
  /// Sample-weighted mean training loss per epoch.
  std::vector<double> loss_history;
};

/// Mini-batch Adam on `x_train`. Samples are reshuffled every epoch; the
/// KL weight follows the model's β schedule evaluated at the epoch index.
/// Throws TrainingError naming the epoch when the loss becomes non-finite.
inline FitResult fit(Model& model, const Matrix& x_train, const TrainConfig& config,
                     Rng& rng) {
  config.validate();
  if (x_train.cols() != model.gene_count)
    throw ShapeError("fit: training matrix has " + std::to_string(x_train.cols()) +
                     " columns, model expects " + std::to_string(model.gene_count));
  FitResult result;
  result.loss_history.reserve(config.epochs);
  if (config.epochs == 0 || x_train.rows() == 0) return result;

  std::vector<Matrix*> params;
  for_each_tensor(model.params, [&](Matrix& m) { params.push_back(&m); });
  AdamState adam;

  std::vector<std::size_t> order(x_train.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    const double beta_eff = beta_schedule(static_cast<double>(epoch), model.arch);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Matrix batch = select_rows(x_train, idx);
      LossAndGrads lg;
      try {
        lg = loss_and_gradients(model, batch, beta_eff, /*training=*/true, rng);
      } catch (const NumericError& e) {
        throw TrainingError(epoch, e.what());
      }
      if (!std::isfinite(lg.loss.total))
        throw TrainingError(epoch, "non-finite loss " + std::to_string(lg.loss.total));
      epoch_loss += lg.loss.total * static_cast<double>(idx.size());

      std::vector<const Matrix*> grads;
      grads.reserve(params.size());
      for_each_tensor(lg.grads, [&](const Matrix& m) { grads.push_back(&m); });
      for (const Matrix* g : grads)
        if (!g->all_finite()) throw TrainingError(epoch, "non-finite gradient");
      adam_step(params, grads, adam, config.learning_rate);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingError(epoch, "non-finite epoch loss");
    result.loss_history.push_back(epoch_loss);
  }
  for (const Matrix* p : params)
    if (!p->all_finite())
      throw TrainingError(config.epochs - 1, "non-finite parameters after training");
  return result;
}

/// Deterministic reconstruction MSE (dropout off, z = μ).
inline double reconstruction_mse(const Model& model, const Matrix& x) {
  Rng unused(0);
  ForwardOutputs out = forward(model, x, /*training=*/false, unused);
  return mse_loss(x, out.x_hat).value;
}

}  // namespace paae
