#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "navcast/date.hpp"
#include "navcast/error.hpp"
#include "navcast/linalg.hpp"

namespace navcast {

/// Ordered, dated univariate observations.
///
/// Dates are strictly increasing and every value is finite; the constructor
/// rejects anything else.
class TimeSeries {
 public:
  TimeSeries() = default;

  TimeSeries(std::vector<Date> dates, std::vector<double> values, std::string name = {})
      : dates_(std::move(dates)), values_(std::move(values)), name_(std::move(name)) {
    if (dates_.size() != values_.size())
      throw ConfigurationError("TimeSeries: dates and values differ in length");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        throw DegenerateInputError("TimeSeries: non-finite value at index " + std::to_string(i));
      if (i > 0 && !(dates_[i - 1] < dates_[i]))
        throw ConfigurationError("TimeSeries: dates not strictly increasing at index " +
                                 std::to_string(i));
    }
  }

  /// Values stamped on consecutive business days starting at `start`.
  [[nodiscard]] static TimeSeries from_values(std::vector<double> values, Date start,
                                              std::string name = {}) {
    std::vector<Date> dates;
    dates.reserve(values.size());
    Date d = start;
    for (std::size_t i = 0; i < values.size(); ++i) {
      dates.push_back(d);
      d = next_business_day(d);
    }
    return TimeSeries(std::move(dates), std::move(values), std::move(name));
  }

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
  [[nodiscard]] double value(std::size_t i) const { return values_.at(i); }
  [[nodiscard]] Date date(std::size_t i) const { return dates_.at(i); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::span<const Date> dates() const noexcept { return dates_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

  [[nodiscard]] TimeSeries slice(std::size_t first, std::size_t count) const {
    if (first + count > size()) throw ConfigurationError("TimeSeries::slice out of range");
    return TimeSeries({dates_.begin() + first, dates_.begin() + first + count},
                      {values_.begin() + first, values_.begin() + first + count}, name_);
  }

 private:
  std::vector<Date> dates_;
  std::vector<double> values_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Differencing

struct DifferencedSeries {
  std::vector<double> values;
  std::size_t order_d = 0;
  /// The d leading observations of the source series.
  std::vector<double> anchors;
};

[[nodiscard]] inline std::vector<double> difference_values(std::span<const double> values,
                                                           std::size_t d) {
  if (values.size() <= d)
    throw DegenerateInputError("difference: series length " + std::to_string(values.size()) +
                               " must exceed d=" + std::to_string(d));
  std::vector<double> cur(values.begin(), values.end());
  for (std::size_t pass = 0; pass < d; ++pass) {
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) cur[i] = cur[i + 1] - cur[i];
    cur.pop_back();
  }
  return cur;
}

[[nodiscard]] inline DifferencedSeries difference(std::span<const double> values, std::size_t d) {
  DifferencedSeries out;
  out.values = difference_values(values, d);
  out.order_d = d;
  out.anchors.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(d));
  return out;
}

[[nodiscard]] inline DifferencedSeries difference(const TimeSeries& series, std::size_t d) {
  return difference(series.values(), d);
}

/// Exact left inverse of `difference`.
[[nodiscard]] inline std::vector<double> integrate(const DifferencedSeries& diff) {
  if (diff.anchors.size() != diff.order_d)
    throw InvalidStateError("integrate: expected " + std::to_string(diff.order_d) +
                            " anchors, have " + std::to_string(diff.anchors.size()));
  // Leading value of each intermediate differencing level.
  std::vector<double> leads(diff.order_d);
  std::vector<double> level = diff.anchors;
  for (std::size_t k = 0; k < diff.order_d; ++k) {
    leads[k] = level.front();
    for (std::size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
    level.pop_back();
  }

  std::vector<double> cur = diff.values;
  for (std::size_t k = diff.order_d; k-- > 0;) {
    std::vector<double> up;
    up.reserve(cur.size() + 1);
    up.push_back(leads[k]);
    for (double step : cur) up.push_back(up.back() + step);
    cur = std::move(up);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Correlograms

struct CorrelogramPoint {
  std::size_t lag = 0;
  double value = 0.0;
  /// Half-width of the approximate 95% white-noise band, 1.96/sqrt(n).
  double confidence_bound = 0.0;
};

namespace detail {

/// Biased (divide-by-n) autocorrelations for lags 0..max_lag.
[[nodiscard]] inline std::vector<double> autocorrelations(std::span<const double> x,
                                                          std::size_t max_lag) {
  const std::size_t n = x.size();
  if (n < 2) throw DegenerateInputError("acf: need at least 2 observations");
  if (max_lag >= n)
    throw DegenerateInputError("acf: max_lag " + std::to_string(max_lag) +
                               " must be below series length " + std::to_string(n));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(n);
  std::transform(x.begin(), x.end(), centered.begin(), [mean](double v) { return v - mean; });

  std::vector<double> cov(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t t = k; t < n; ++t) s += centered[t] * centered[t - k];
    cov[k] = s / static_cast<double>(n);
  }
  if (!(cov[0] > 0.0)) throw DegenerateInputError("acf: zero-variance input");
  std::vector<double> r(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) r[k] = cov[k] / cov[0];
  r[0] = 1.0;
  return r;
}

struct DurbinLevinson {
  std::vector<double> pacf;          ///< pacf[k-1] is the lag-k partial autocorrelation
  std::vector<double> coefficients;  ///< AR(max_lag) Yule-Walker coefficients
};

/// Runs the recursion on autocorrelations r[0..K].
[[nodiscard]] inline DurbinLevinson durbin_levinson(std::span<const double> r) {
  const std::size_t max_lag = r.size() - 1;
  DurbinLevinson out;
  out.pacf.reserve(max_lag);
  std::vector<double> phi;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = r[k];
    double den = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      num -= phi[j - 1] * r[k - j];
      den -= phi[j - 1] * r[j];
    }
    if (!(std::abs(den) > 1e-14))
      throw NumericalError("pacf: singular Durbin-Levinson step at lag " + std::to_string(k));
    const double kk = num / den;
    std::vector<double> next(k);
    for (std::size_t j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - kk * phi[k - j - 1];
    next[k - 1] = kk;
    phi = std::move(next);
    out.pacf.push_back(kk);
  }
  out.coefficients = std::move(phi);
  return out;
}

}  // namespace detail

/// Lag-k sample autocorrelation; lag 0 is 1.
[[nodiscard]] inline double autocorrelation(std::span<const double> values, std::size_t lag) {
  return detail::autocorrelations(values, lag)[lag];
}

/// Sample ACF at lags 1..max_lag.
[[nodiscard]] inline std::vector<CorrelogramPoint> acf(std::span<const double> values,
                                                       std::size_t max_lag) {
  if (max_lag == 0) throw ConfigurationError("acf: max_lag must be positive");
  const auto r = detail::autocorrelations(values, max_lag);
  const double bound = 1.96 / std::sqrt(static_cast<double>(values.size()));
  std::vector<CorrelogramPoint> out;
  out.reserve(max_lag);
  for (std::size_t k = 1; k <= max_lag; ++k) out.push_back({k, r[k], bound});
  return out;
}

/// Sample PACF at lags 1..max_lag by the Durbin-Levinson recursion.
[[nodiscard]] inline std::vector<CorrelogramPoint> pacf(std::span<const double> values,
                                                        std::size_t max_lag) {
  if (max_lag == 0) throw ConfigurationError("pacf: max_lag must be positive");
  if (2 * max_lag >= values.size())
    throw DegenerateInputError("pacf: max_lag must be below half the series length");
  const auto r = detail::autocorrelations(values, max_lag);
  const auto dl = detail::durbin_levinson(r);
  const double bound = 1.96 / std::sqrt(static_cast<double>(values.size()));
  std::vector<CorrelogramPoint> out;
  out.reserve(max_lag);
  for (std::size_t k = 1; k <= max_lag; ++k) out.push_back({k, dl.pacf[k - 1], bound});
  return out;
}

// ---------------------------------------------------------------------------
// Augmented Dickey-Fuller

struct AdfCriticalValues {
  double pct1 = -3.43;
  double pct5 = -2.86;
  double pct10 = -2.57;
};

struct AdfResult {
  double statistic = 0.0;
  std::size_t lag_used = 0;
  std::size_t nobs = 0;
  AdfCriticalValues critical_values;
  bool is_stationary_5pct = false;
};

/// Schwert's rule, floor(12 (n/100)^(1/4)).
[[nodiscard]] inline std::size_t adf_default_max_lag(std::size_t n) {
  return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

namespace detail {

/// Design for dy_t = c + gamma y_{t-1} + sum_i beta_i dy_{t-i} on rows
/// t = first..n_diff-1 (dy index).
inline void adf_design(std::span<const double> y, const std::vector<double>& dy,
                       std::size_t lags, std::size_t first, Eigen::MatrixXd& X,
                       Eigen::VectorXd& target) {
  const std::size_t rows = dy.size() - first;
  X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lags + 2));
  target.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = first + r;
    const auto row = static_cast<Eigen::Index>(r);
    target(row) = dy[t];
    X(row, 0) = 1.0;
    X(row, 1) = y[t];
    for (std::size_t i = 1; i <= lags; ++i) X(row, static_cast<Eigen::Index>(i + 1)) = dy[t - i];
  }
}

}  // namespace detail

/// ADF unit-root test with a constant and no trend. The lag order minimises
/// AIC over 0..max_lag on a common sample, then the chosen regression is
/// refit on every available row.
[[nodiscard]] inline AdfResult adf_test(std::span<const double> y,
                                        std::optional<std::size_t> max_lag = std::nullopt) {
  const std::size_t n = y.size();
  if (n < 20) throw DegenerateInputError("adf_test: need at least 20 observations");
  std::vector<double> dy = difference_values(y, 1);

  std::size_t cap = max_lag.value_or(adf_default_max_lag(n));
  // Keep enough rows for a meaningful regression at the largest lag.
  while (cap > 0 && dy.size() < cap + 2 * (cap + 2) + 5) --cap;

  Eigen::MatrixXd X;
  Eigen::VectorXd target;
  std::size_t best_lag = 0;
  if (cap > 0) {
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= cap; ++k) {
      detail::adf_design(y, dy, k, cap, X, target);
      const auto fit = ols(X, target);
      const double nobs = static_cast<double>(fit.nobs);
      const double aic = nobs * std::log(fit.rss / nobs) + 2.0 * static_cast<double>(k + 2);
      if (aic < best_aic) {
        best_aic = aic;
        best_lag = k;
      }
    }
  }

  detail::adf_design(y, dy, best_lag, best_lag, X, target);
  const auto fit = ols(X, target);
  const double dof = static_cast<double>(fit.nobs - X.cols());
  if (!(dof > 0.0)) throw DegenerateInputError("adf_test: no residual degrees of freedom");
  const double s2 = fit.rss / dof;
  const double se = std::sqrt(s2 * fit.xtx_inverse(1, 1));
  if (!(se > 0.0) || !std::isfinite(se))
    throw NumericalError("adf_test: zero standard error on lagged level");

  AdfResult out;
  out.statistic = fit.beta(1) / se;
  out.lag_used = best_lag;
  out.nobs = static_cast<std::size_t>(fit.nobs);
  out.is_stationary_5pct = out.statistic < out.critical_values.pct5;
  return out;
}

// ---------------------------------------------------------------------------
// Scaling

struct ScaleParams {
  double min = 0.0;
  double max = 1.0;
  double target_lo = -1.0;
  double target_hi = 1.0;
};

inline void validate(const ScaleParams& p) {
  if (!(p.max > p.min)) throw DegenerateInputError("scale: max must exceed min (constant input?)");
  if (!(p.target_hi > p.target_lo)) throw ConfigurationError("scale: empty target range");
}

/// Min-max parameters mapping the observed range onto [lo, hi].
[[nodiscard]] inline ScaleParams fit_minmax(std::span<const double> values, double lo = -1.0,
                                            double hi = 1.0) {
  if (values.empty()) throw DegenerateInputError("fit_minmax: empty input");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  ScaleParams p{*mn, *mx, lo, hi};
  validate(p);
  return p;
}

/// Range [-M, M] with M = max |v|, so zero maps to the target midpoint.
[[nodiscard]] inline ScaleParams fit_symmetric(std::span<const double> values, double lo = -1.0,
                                               double hi = 1.0) {
  if (values.empty()) throw DegenerateInputError("fit_symmetric: empty input");
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  ScaleParams p{-m, m, lo, hi};
  validate(p);
  return p;
}

[[nodiscard]] inline double minmax_scale(double v, const ScaleParams& p) {
  return p.target_lo + (v - p.min) * (p.target_hi - p.target_lo) / (p.max - p.min);
}

[[nodiscard]] inline double minmax_unscale(double s, const ScaleParams& p) {
  return p.min + (s - p.target_lo) * (p.max - p.min) / (p.target_hi - p.target_lo);
}

[[nodiscard]] inline std::vector<double> minmax_scale(std::span<const double> values,
                                                      const ScaleParams& p) {
  validate(p);
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return minmax_scale(v, p); });
  return out;
}

[[nodiscard]] inline std::vector<double> minmax_unscale(std::span<const double> scaled,
                                                        const ScaleParams& p) {
  validate(p);
  std::vector<double> out(scaled.size());
  std::transform(scaled.begin(), scaled.end(), out.begin(),
                 [&](double s) { return minmax_unscale(s, p); });
  return out;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  std::size_t train_len = 900;
  std::size_t val_len = 100;
  std::size_t test_len = 260;

  [[nodiscard]] std::size_t total() const noexcept { return train_len + val_len + test_len; }
  [[nodiscard]] std::size_t test_start() const noexcept { return train_len + val_len; }
};

inline void validate(const SplitSpec& spec, std::size_t n) {
  if (spec.train_len == 0 || spec.val_len == 0 || spec.test_len == 0)
    throw ConfigurationError("split: every segment must be non-empty");
  if (spec.total() != n)
    throw ConfigurationError("split: segments sum to " + std::to_string(spec.total()) +
                             " but series has " + std::to_string(n) + " observations");
}

/// 900:100:260 rescaled to n, rounded so the parts sum to n.
[[nodiscard]] inline SplitSpec proportional_split(std::size_t n) {
  const double scale = static_cast<double>(n) / 1260.0;
  SplitSpec s;
  s.train_len = static_cast<std::size_t>(std::llround(900.0 * scale));
  s.val_len = static_cast<std::size_t>(std::llround(100.0 * scale));
  if (s.train_len + s.val_len >= n)
    throw ConfigurationError("split: series of length " + std::to_string(n) + " is too short");
  s.test_len = n - s.train_len - s.val_len;
  validate(s, n);
  return s;
}

[[nodiscard]] inline std::tuple<TimeSeries, TimeSeries, TimeSeries> split(const TimeSeries& series,
                                                                          const SplitSpec& spec) {
  validate(spec, series.size());
  return {series.slice(0, spec.train_len), series.slice(spec.train_len, spec.val_len),
          series.slice(spec.test_start(), spec.test_len)};
}

}  // namespace navcast
