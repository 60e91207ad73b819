#pragma once

#include <Eigen/Dense>

#include "navcast/error.hpp"

namespace navcast {

struct OlsFit {
  Eigen::VectorXd beta;
  double rss = 0.0;
  /// (X'X)^-1, the unscaled coefficient covariance.
  Eigen::MatrixXd xtx_inverse;
  Eigen::Index nobs = 0;
};

/// Least squares y ~ X. Throws NumericalError when X is rank deficient.
[[nodiscard]] inline OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw ConfigurationError("ols: row count mismatch");
  if (X.rows() < X.cols()) throw DegenerateInputError("ols: fewer rows than regressors");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-12);
  if (qr.rank() < X.cols()) throw NumericalError("ols: collinear regressors");

  OlsFit fit;
  fit.beta = qr.solve(y);
  fit.rss = (y - X * fit.beta).squaredNorm();
  fit.nobs = X.rows();

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::Index k = X.cols();
  Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  fit.xtx_inverse = perm * inner * perm.transpose();
  return fit;
}

}  // namespace navcast
