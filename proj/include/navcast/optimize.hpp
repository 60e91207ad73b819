#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "navcast/error.hpp"

namespace navcast {

struct MinimizeOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  /// A line search that cannot improve the objective ends the run; it counts
  /// as converged when the projected gradient is already below this floor.
  double stall_tolerance = 1e-6;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double projected_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

/// Gradient with components that point out of the box zeroed.
inline Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                          const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0)) pg(i) = 0.0;
  }
  return pg;
}

}  // namespace detail

/// Box-constrained BFGS with a projected backtracking line search.
///
/// `objective(x, grad)` returns f(x) and writes the gradient into `grad`.
template <class Objective>
[[nodiscard]] MinimizeResult minimize_box(Objective&& objective, Eigen::VectorXd x0,
                                          const Eigen::VectorXd& lower,
                                          const Eigen::VectorXd& upper,
                                          const MinimizeOptions& options = {}) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw ConfigurationError("minimize_box: bound dimension mismatch");

  MinimizeResult res;
  res.x = detail::clamp_box(x0, lower, upper);
  Eigen::VectorXd g(n);
  res.value = objective(res.x, g);
  if (!std::isfinite(res.value)) throw NumericalError("minimize_box: non-finite start value");

  if (n == 0) {
    res.converged = true;
    return res;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  Eigen::VectorXd gn(n);

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const Eigen::VectorXd pg = detail::projected_gradient(res.x, g, lower, upper);
    res.projected_gradient = pg.lpNorm<Eigen::Infinity>();
    if (res.projected_gradient < options.gradient_tolerance) {
      res.converged = true;
      return res;
    }

    Eigen::VectorXd dir = -(H * pg);
    for (Eigen::Index i = 0; i < n; ++i)
      if (pg(i) == 0.0) dir(i) = 0.0;
    if (!(g.dot(dir) < 0.0)) {
      H.setIdentity();
      fresh = true;
      dir = -pg;
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn;
    double fn = 0.0;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      xn = detail::clamp_box(res.x + step * dir, lower, upper);
      fn = objective(xn, gn);
      if (std::isfinite(fn) && fn <= res.value + 1e-4 * g.dot(xn - res.x) && fn < res.value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!fresh) {
        H.setIdentity();
        fresh = true;
        continue;
      }
      res.converged = res.projected_gradient < options.stall_tolerance;
      return res;
    }

    const Eigen::VectorXd s = xn - res.x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) H *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
      fresh = false;
    }
    res.x = std::move(xn);
    res.value = fn;
    g = gn;
  }
  const Eigen::VectorXd pg = detail::projected_gradient(res.x, g, lower, upper);
  res.projected_gradient = pg.lpNorm<Eigen::Infinity>();
  res.converged = res.projected_gradient < options.gradient_tolerance;
  return res;
}

}  // namespace navcast
