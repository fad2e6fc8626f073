#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"

namespace paae {

/// Central-difference gradient of a scalar function of a matrix.
template <class F>
  requires std::invocable<F&, const Matrix&>
Matrix finite_diff_grad(F&& f, const Matrix& x, double h = 1e-5) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_grad: h must be > 0");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = static_cast<double>(f(static_cast<const Matrix&>(probe)));
    probe[i] = orig - h;
    const double fm = static_cast<double>(f(static_cast<const Matrix&>(probe)));
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_grad: non-finite function value at coordinate " +
                         std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// ‖a − b‖ / max(‖a‖, ‖b‖); 0 when both are zero.
inline double relative_error(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("relative_error: shape mismatch");
  const double scale = std::max(frobenius_norm(a), frobenius_norm(b));
  if (scale == 0.0) return 0.0;
  return frobenius_norm(a - b) / scale;
}

}  // namespace paae
