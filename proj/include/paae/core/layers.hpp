#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "paae/core/matrix.hpp"
#include "paae/core/rng.hpp"
#include "paae/error.hpp"

namespace paae {

/// out = x·W + b, b broadcast over rows.
inline Matrix affine_forward(const Matrix& x, const Matrix& W, const Matrix& b) {
  if (x.cols() != W.rows() || b.rows() != 1 || b.cols() != W.cols())
    throw ShapeError("affine_forward: x " + x.shape_string() + ", W " +
                     W.shape_string() + ", b " + b.shape_string());
  Matrix out = matmul(x, W);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < out.cols(); ++c) row[c] += b[c];
  }
  return out;
}

struct AffineGrads {
  Matrix x;
  Matrix W;
  Matrix b;
};

inline AffineGrads affine_backward(const Matrix& x, const Matrix& W,
                                   const Matrix& upstream) {
  if (x.cols() != W.rows() || upstream.rows() != x.rows() ||
      upstream.cols() != W.cols())
    throw ShapeError("affine_backward: x " + x.shape_string() + ", W " +
                     W.shape_string() + ", upstream " + upstream.shape_string());
  AffineGrads g;
  g.x = matmul_nt(upstream, W);
  g.W = matmul_tn(x, upstream);
  g.b = Matrix(1, W.cols());
  for (std::size_t r = 0; r < upstream.rows(); ++r) {
    auto row = upstream.row(r);
    for (std::size_t c = 0; c < upstream.cols(); ++c) g.b[c] += row[c];
  }
  return g;
}

inline Matrix relu_forward(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

/// Gradient through ReLU given the forward input. The subgradient at 0 is 0.
inline Matrix relu_backward(const Matrix& forward_input, const Matrix& upstream) {
  if (!forward_input.same_shape(upstream))
    throw ShapeError("relu_backward: " + forward_input.shape_string() + " vs " +
                     upstream.shape_string());
  Matrix out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(forward_input[i] > 0.0)) out[i] = 0.0;
  return out;
}

struct DropoutResult {
  Matrix output;
  /// Per-entry multiplier: 0 for dropped, 1/(1-rate) for kept, 1 at inference.
  Matrix mask;
};

/// Inverted dropout. Inference (training == false) is the identity.
inline DropoutResult dropout(const Matrix& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw InvalidArgument("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  DropoutResult r{x, Matrix(x.rows(), x.cols(), 1.0)};
  if (!training || rate == 0.0) return r;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = rng.uniform() < rate ? 0.0 : keep_scale;
    r.mask[i] = m;
    r.output[i] = x[i] * m;
  }
  return r;
}

inline Matrix dropout_backward(const Matrix& mask, const Matrix& upstream) {
  if (!mask.same_shape(upstream))
    throw ShapeError("dropout_backward: " + mask.shape_string() + " vs " +
                     upstream.shape_string());
  Matrix out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return out;
}

/// He-normal weights: N(0, 2/fan_in), shape fan_in × fan_out.
inline Matrix init_weights(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in == 0 || fan_out == 0)
    throw InvalidArgument("init_weights: fan_in and fan_out must be >= 1");
  Matrix w(fan_in, fan_out);
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : w.values()) v = sd * rng.normal();
  return w;
}

/// One dense layer; biases start at zero.
struct Dense {
  Matrix W;
  Matrix b;

  static Dense init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    return {init_weights(fan_in, fan_out, rng), Matrix(1, fan_out)};
  }
  std::size_t in() const noexcept { return W.rows(); }
  std::size_t out() const noexcept { return W.cols(); }
  std::size_t param_count() const noexcept { return W.size() + b.size(); }
  friend bool operator==(const Dense&, const Dense&) = default;
};

}  // namespace paae
