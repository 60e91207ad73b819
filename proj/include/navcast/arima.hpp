#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "navcast/error.hpp"
#include "navcast/optimize.hpp"
#include "navcast/series.hpp"

namespace navcast {

struct ArimaOrder {
  std::size_t p = 0;
  std::size_t d = 0;
  std::size_t q = 0;

  friend bool operator==(const ArimaOrder&, const ArimaOrder&) = default;

  [[nodiscard]] std::string to_string() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
  }
};

/// Largest orders the search and the parser accept.
inline constexpr ArimaOrder kDefaultOrderCaps{5, 2, 5};

inline void validate(const ArimaOrder& order, const ArimaOrder& caps = kDefaultOrderCaps) {
  if (order.p > caps.p || order.d > caps.d || order.q > caps.q)
    throw ConfigurationError("ARIMA order " + order.to_string() + " exceeds caps " +
                             caps.to_string());
}

/// A fitted ARIMA(p,d,q).
///
/// With w the d-times differenced series and z = w - mean, the innovations
/// follow  z_t = sum_i ar[i] z_{t-i} + e_t - sum_j ma[j] e_{t-j}.
/// `intercept` is the same constant written for w directly,
/// mean * (1 - sum(ar)); for (0,1,0) it is the mean first difference.
struct ArimaModel {
  ArimaOrder order;
  std::vector<double> ar;
  std::vector<double> ma;
  double mean = 0.0;
  double intercept = 0.0;
  double sigma2 = 0.0;
  double css = 0.0;
  /// One residual per differenced observation (pre-sample terms are zero).
  std::vector<double> in_sample_residuals;
  std::size_t n_obs = 0;
  bool converged = true;
  /// All roots of the AR polynomial outside the unit circle.
  bool ar_stationary = true;
  int iterations = 0;
};

/// Non-convergence; carries the best parameters reached.
class ArimaFitError : public Error {
 public:
  ArimaFitError(const std::string& what, ArimaModel best)
      : Error(what), best_so_far_(std::move(best)) {}
  [[nodiscard]] const ArimaModel& best_so_far() const noexcept { return best_so_far_; }

 private:
  ArimaModel best_so_far_;
};

struct ArimaFitOptions {
  MinimizeOptions minimizer{};
};

namespace detail {

/// Conditional sum of squares for centered z. `params` = [ar..., ma...].
/// Writes the gradient and/or the innovations when requested.
inline double css_objective(std::span<const double> z, std::size_t p, std::size_t q,
                            const Eigen::VectorXd& params, Eigen::VectorXd* grad,
                            std::vector<double>* residuals) {
  const std::size_t n = z.size();
  const std::size_t k = p + q;
  std::vector<double> e(n, 0.0);
  // de[t*k + j] = d e_t / d params_j
  std::vector<double> de(grad && q > 0 ? n * k : 0, 0.0);
  if (grad) grad->setZero(static_cast<Eigen::Index>(k));

  Eigen::VectorXd row(static_cast<Eigen::Index>(k));
  double css = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double et = z[t];
    for (std::size_t i = 1; i <= p && i <= t; ++i) et -= params(static_cast<Eigen::Index>(i - 1)) * z[t - i];
    for (std::size_t j = 1; j <= q && j <= t; ++j)
      et += params(static_cast<Eigen::Index>(p + j - 1)) * e[t - j];
    e[t] = et;
    css += et * et;

    if (grad) {
      for (std::size_t i = 1; i <= p; ++i) row(static_cast<Eigen::Index>(i - 1)) = i <= t ? -z[t - i] : 0.0;
      for (std::size_t j = 1; j <= q; ++j) row(static_cast<Eigen::Index>(p + j - 1)) = j <= t ? e[t - j] : 0.0;
      for (std::size_t j = 1; j <= q && j <= t; ++j) {
        const double theta = params(static_cast<Eigen::Index>(p + j - 1));
        const double* prev = &de[(t - j) * k];
        for (std::size_t c = 0; c < k; ++c) row(static_cast<Eigen::Index>(c)) += theta * prev[c];
      }
      if (q > 0)
        for (std::size_t c = 0; c < k; ++c) de[t * k + c] = row(static_cast<Eigen::Index>(c));
      *grad += 2.0 * et * row;
    }
  }
  if (residuals) *residuals = std::move(e);
  return css;
}

/// Innovations of the ARMA recursion over z with zero pre-sample terms.
inline std::vector<double> arma_innovations(std::span<const double> z, const std::vector<double>& ar,
                                            const std::vector<double>& ma) {
  std::vector<double> e(z.size(), 0.0);
  for (std::size_t t = 0; t < z.size(); ++t) {
    double et = z[t];
    for (std::size_t i = 1; i <= ar.size() && i <= t; ++i) et -= ar[i - 1] * z[t - i];
    for (std::size_t j = 1; j <= ma.size() && j <= t; ++j) et += ma[j - 1] * e[t - j];
    e[t] = et;
  }
  return e;
}

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

/// Roots of 1 - a_1 z - ... - a_p z^p all lie outside the unit circle.
inline bool polynomial_roots_outside_unit_circle(const std::vector<double>& a) {
  const auto p = static_cast<Eigen::Index>(a.size());
  if (p == 0) return true;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = a[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  return (solver.eigenvalues().array().abs() < 1.0).all();
}

inline double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

/// Conditional-sum-of-squares fit of ARIMA(p,d,q).
///
/// The series is differenced d times and mean-centered; AR terms start from
/// the Yule-Walker solution and MA terms from zero, then box-constrained BFGS
/// minimises the CSS. Coefficient boxes are |c_i| <= C(order, i), the
/// envelope of the stationary / invertible region.
[[nodiscard]] inline ArimaModel fit(std::span<const double> values, const ArimaOrder& order,
                                    const ArimaFitOptions& options = {}) {
  validate(order);
  const std::size_t need = order.p + order.q + order.d + 2;
  if (values.size() < need)
    throw DegenerateInputError("ARIMA" + order.to_string() + " needs at least " +
                               std::to_string(need) + " observations, have " +
                               std::to_string(values.size()));

  const std::vector<double> w = difference_values(values, order.d);
  const double mean = detail::mean_of(w);
  std::vector<double> z(w.size());
  std::transform(w.begin(), w.end(), z.begin(), [mean](double v) { return v - mean; });

  const std::size_t p = order.p;
  const std::size_t q = order.q;
  const auto k = static_cast<Eigen::Index>(p + q);

  ArimaModel model;
  model.order = order;
  model.n_obs = values.size();
  model.mean = mean;

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd lo(k), hi(k);
  for (std::size_t i = 1; i <= p; ++i) {
    hi(static_cast<Eigen::Index>(i - 1)) = detail::binomial(p, i);
  }
  for (std::size_t j = 1; j <= q; ++j) {
    hi(static_cast<Eigen::Index>(p + j - 1)) = detail::binomial(q, j);
  }
  lo = -hi;

  if (p > 0) {
    try {
      const auto r = detail::autocorrelations(z, p);
      const auto yw = detail::durbin_levinson(r);
      for (std::size_t i = 0; i < p; ++i) x0(static_cast<Eigen::Index>(i)) = yw.coefficients[i];
    } catch (const Error&) {
      // constant or near-singular input: start from zero
    }
  }

  double sum_sq = 0.0;
  for (double v : z) sum_sq += v * v;
  const double scale = sum_sq > 0.0 ? sum_sq : 1.0;

  MinimizeResult opt;
  if (k > 0) {
    auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      const double css = detail::css_objective(z, p, q, x, &g, nullptr);
      g /= scale;
      return css / scale;
    };
    opt = minimize_box(objective, x0, lo, hi, options.minimizer);
  } else {
    opt.x = x0;
    opt.converged = true;
  }

  model.ar.assign(opt.x.data(), opt.x.data() + p);
  model.ma.assign(opt.x.data() + p, opt.x.data() + p + q);
  model.css = detail::css_objective(z, p, q, opt.x, nullptr, &model.in_sample_residuals);
  model.sigma2 = model.css / static_cast<double>(z.size());
  model.intercept = mean * (1.0 - std::accumulate(model.ar.begin(), model.ar.end(), 0.0));
  model.ar_stationary = detail::polynomial_roots_outside_unit_circle(model.ar);
  model.iterations = opt.iterations;
  model.converged = opt.converged;
  if (!std::isfinite(model.css)) throw NumericalError("ARIMA fit produced non-finite CSS");
  if (!opt.converged)
    throw ArimaFitError("ARIMA" + order.to_string() + " CSS minimisation did not converge after " +
                            std::to_string(opt.iterations) + " iterations",
                        model);
  return model;
}

[[nodiscard]] inline ArimaModel fit(const TimeSeries& series, const ArimaOrder& order,
                                    const ArimaFitOptions& options = {}) {
  return fit(series.values(), order, options);
}

/// Gaussian-CSS information criterion n ln(CSS/n) + 2(p + q + 1).
[[nodiscard]] inline double aic(const ArimaModel& model) {
  if (!(model.sigma2 > 0.0)) throw DegenerateInputError("aic: residual variance is zero");
  const auto n = static_cast<double>(model.in_sample_residuals.size());
  const auto k = static_cast<double>(model.order.p + model.order.q + 1);
  return n * std::log(model.css / n) + 2.0 * k;
}

namespace detail {

inline void check_history(const ArimaModel& model, std::size_t n) {
  const std::size_t need = std::max<std::size_t>(model.order.p + model.order.d, 1);
  if (n < need)
    throw DegenerateInputError("ARIMA" + model.order.to_string() + " needs " +
                               std::to_string(need) + " history values, have " +
                               std::to_string(n));
}

}  // namespace detail

/// One-step-ahead level forecast from `history` (oldest first).
///
/// The differenced history is filtered through the ARMA recursion, the next
/// shock is set to zero, and the result is integrated back to the level.
[[nodiscard]] inline double forecast_one(const ArimaModel& model, std::span<const double> history) {
  detail::check_history(model, history.size());
  const std::size_t d = model.order.d;
  const std::vector<double> w = difference_values(history, d);
  std::vector<double> z(w.size());
  std::transform(w.begin(), w.end(), z.begin(), [&](double v) { return v - model.mean; });
  const std::vector<double> e = detail::arma_innovations(z, model.ar, model.ma);

  const std::size_t m = z.size();
  double z_hat = 0.0;
  for (std::size_t i = 1; i <= model.ar.size() && i <= m; ++i) z_hat += model.ar[i - 1] * z[m - i];
  for (std::size_t j = 1; j <= model.ma.size() && j <= m; ++j) z_hat -= model.ma[j - 1] * e[m - j];
  const double w_hat = model.mean + z_hat;

  // y_{n} = w_hat - sum_{k=1..d} (-1)^k C(d,k) y_{n-k}
  const std::size_t n = history.size();
  double level = 0.0;
  for (std::size_t k = 1; k <= d; ++k) {
    const double sign = (k % 2 == 1) ? 1.0 : -1.0;
    level += sign * detail::binomial(d, k) * history[n - k];
  }
  return level + w_hat;
}

/// Innovations e_t = y_t - (one-step prediction of y_t) at every t with p
/// differenced predecessors; length n - d - p.
[[nodiscard]] inline std::vector<double> residuals(const ArimaModel& model,
                                                   std::span<const double> values) {
  const std::size_t d = model.order.d;
  const std::size_t p = model.order.p;
  if (values.size() < d + p + 1)
    throw DegenerateInputError("residuals: need at least " + std::to_string(d + p + 1) +
                               " values, have " + std::to_string(values.size()));
  const std::vector<double> w = difference_values(values, d);
  std::vector<double> z(w.size());
  std::transform(w.begin(), w.end(), z.begin(), [&](double v) { return v - model.mean; });
  std::vector<double> e = detail::arma_innovations(z, model.ar, model.ma);
  e.erase(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(p));
  return e;
}

// ---------------------------------------------------------------------------
// Order selection

struct OrderCandidate {
  ArimaOrder order;
  double aic = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string note;
};

struct OrderSearchReport {
  std::vector<OrderCandidate> candidates;
  ArimaOrder chosen;
  /// ADF result for each differencing order tried, starting at d = 0.
  std::vector<AdfResult> adf;
};

/// Minimal AIC among converged candidates; ties go to smaller p+q, then
/// smaller p. Independent of candidate order.
[[nodiscard]] inline ArimaOrder choose_order(std::span<const OrderCandidate> candidates) {
  const OrderCandidate* best = nullptr;
  auto better = [](const OrderCandidate& a, const OrderCandidate& b) {
    if (a.aic != b.aic) return a.aic < b.aic;
    const std::size_t sa = a.order.p + a.order.q;
    const std::size_t sb = b.order.p + b.order.q;
    if (sa != sb) return sa < sb;
    if (a.order.p != b.order.p) return a.order.p < b.order.p;
    return a.order.d < b.order.d;
  };
  for (const auto& c : candidates) {
    if (!c.converged || !std::isfinite(c.aic)) continue;
    if (!best || better(c, *best)) best = &c;
  }
  if (!best) throw AnalysisError("order search: no candidate converged");
  return best->order;
}

/// Picks d as the smallest differencing order whose series passes the ADF test
/// at 5%, then grid-searches p and q by AIC.
[[nodiscard]] inline OrderSearchReport select_order(std::span<const double> values,
                                                    const ArimaOrder& caps = kDefaultOrderCaps,
                                                    const ArimaFitOptions& options = {}) {
  OrderSearchReport report;
  std::optional<std::size_t> chosen_d;
  for (std::size_t d = 0; d <= caps.d; ++d) {
    const auto w = difference_values(values, d);
    report.adf.push_back(adf_test(w));
    if (report.adf.back().is_stationary_5pct) {
      chosen_d = d;
      break;
    }
  }
  if (!chosen_d)
    throw AnalysisError("order search: series is not stationary after " + std::to_string(caps.d) +
                        " differences; it is unsuitable for ARIMA");

  for (std::size_t p = 0; p <= caps.p; ++p) {
    for (std::size_t q = 0; q <= caps.q; ++q) {
      OrderCandidate c;
      c.order = {p, *chosen_d, q};
      try {
        const auto model = fit(values, c.order, options);
        c.aic = aic(model);
        c.converged = true;
      } catch (const ArimaFitError& e) {
        if (e.best_so_far().sigma2 > 0.0) c.aic = aic(e.best_so_far());
        c.note = e.what();
      } catch (const Error& e) {
        c.note = e.what();
      }
      report.candidates.push_back(std::move(c));
    }
  }
  report.chosen = choose_order(report.candidates);
  return report;
}

}  // namespace navcast
