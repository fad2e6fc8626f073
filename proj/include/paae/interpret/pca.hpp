#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"

namespace paae {

struct Pca2d {
  Matrix coords;                     // n × 2
  double explained[2] = {0.0, 0.0};  // variance fractions
  Matrix axes;                       // d × 2 loadings
};

/// Projects centered rows on the top two principal axes. Each axis is
/// signed so its largest-magnitude loading is positive.
inline Pca2d pca_2d(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw InvalidArgument("pca_2d: need at least 2 rows");
  if (d == 0) throw InvalidArgument("pca_2d: no columns");
  Eigen::MatrixXd m(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) m(Eigen::Index(r), Eigen::Index(c)) = x(r, c);
  const Eigen::RowVectorXd mean = m.colwise().mean();
  m.rowwise() -= mean;
  const Eigen::MatrixXd cov = (m.transpose() * m) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0);
  const double total = vals.sum();

  Pca2d out{Matrix(n, 2), {0.0, 0.0}, Matrix(d, 2)};
  const double tiny = 1e-12 * std::max(1.0, total);
  for (int k = 0; k < 2; ++k) {
    const Eigen::Index idx = Eigen::Index(d) - 1 - k;
    if (idx < 0 || vals(idx) <= tiny) {
      spdlog::warn("pca_2d: component {} has no variance; coordinate zeroed", k + 1);
      continue;
    }
    Eigen::VectorXd axis = eig.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    const Eigen::VectorXd proj = m * axis;
    for (std::size_t r = 0; r < n; ++r) out.coords(r, std::size_t(k)) = proj(Eigen::Index(r));
    for (std::size_t c = 0; c < d; ++c) out.axes(c, std::size_t(k)) = axis(Eigen::Index(c));
    out.explained[k] = total > 0.0 ? vals(idx) / total : 0.0;
  }
  return out;
}

}  // namespace paae
