#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "navcast/arima.hpp"
#include "navcast/linalg.hpp"
#include "support.hpp"

using namespace navcast;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("ARIMA(0,1,0) forecasts the last value plus the mean step", "[arima]") {
  const auto y = testing::random_walk(200, 3, 10.0);
  const auto m = fit(y, {0, 1, 0});
  const auto d = difference_values(y, 1);
  const double drift = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  CHECK_THAT(m.intercept, WithinAbs(drift, 1e-15));
  CHECK(m.in_sample_residuals.size() == y.size() - 1);
  for (std::size_t t = 2; t < y.size(); ++t) {
    const std::span<const double> history(y.data(), t);
    CHECK_THAT(forecast_one(m, history), WithinAbs(y[t - 1] + m.intercept, 1e-12));
  }
}

TEST_CASE("pure AR fits coincide with zero-padded least squares", "[arima]") {
  // Reference: OLS of the centered series on its zero-padded lags 1 and 2.
  auto y = testing::chirp_fixture(120);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] += 0.1 * static_cast<double>(t) / 120.0;
  const auto m = fit(y, {2, 0, 0});
  CHECK(m.converged);
  CHECK_THAT(m.ar[0], WithinAbs(0.00360896638500932, 1e-6));
  CHECK_THAT(m.ar[1], WithinAbs(-0.06851587458670266, 1e-6));
  CHECK_THAT(m.css, WithinRel(65.82859325211183, 1e-9));
  CHECK_THAT(m.mean, WithinAbs(0.09589380892155071, 1e-12));
  CHECK_THAT(m.intercept, WithinAbs(m.mean * (1.0 - m.ar[0] - m.ar[1]), 1e-15));
}

TEST_CASE("AR residuals are orthogonal to their regressors", "[arima]") {
  const auto z = testing::simulate_arma({0.5, -0.3}, {}, 800, 21);
  const auto m = fit(z, {2, 0, 0});
  const auto& e = m.in_sample_residuals;
  std::vector<double> c(z.size());
  std::transform(z.begin(), z.end(), c.begin(), [&](double v) { return v - m.mean; });
  for (std::size_t lag = 1; lag <= 2; ++lag) {
    double dot = 0.0, ee = 0.0, xx = 0.0;
    for (std::size_t t = lag; t < c.size(); ++t) {
      dot += e[t] * c[t - lag];
      ee += e[t] * e[t];
      xx += c[t - lag] * c[t - lag];
    }
    CHECK(std::abs(dot / std::sqrt(ee * xx)) < 1e-6);
  }
}

TEST_CASE("ARIMA(1,1,1) matches an independent CSS minimisation", "[arima]") {
  // Reference: the same CSS recursion minimised by a derivative-free method.
  const auto y = testing::cumulative(testing::chirp_fixture(150));
  const auto m = fit(y, {1, 1, 1});
  CHECK(m.converged);
  CHECK_THAT(m.ar[0], WithinAbs(-0.704342866506255, 1e-5));
  CHECK_THAT(m.ma[0], WithinAbs(-0.733983599492401, 1e-5));
  CHECK_THAT(m.css, WithinRel(81.7720326180394, 1e-9));
  CHECK_THAT(m.mean, WithinAbs(0.03799364408038003, 1e-14));
  CHECK_THAT(aic(m), WithinAbs(-83.40164202957229, 1e-6));
  CHECK(m.sigma2 == m.css / 149.0);
}

TEST_CASE("CSS gradient agrees with finite differences", "[arima]") {
  const auto z = testing::chirp_fixture(80);
  Eigen::VectorXd x(4);
  x << 0.3, -0.2, 0.4, 0.1;
  Eigen::VectorXd g;
  detail::css_objective(z, 2, 2, x, &g, nullptr);
  for (Eigen::Index i = 0; i < 4; ++i) {
    Eigen::VectorXd up = x, down = x;
    up(i) += 1e-6;
    down(i) -= 1e-6;
    const double fd = (detail::css_objective(z, 2, 2, up, nullptr, nullptr) -
                       detail::css_objective(z, 2, 2, down, nullptr, nullptr)) /
                      2e-6;
    CHECK_THAT(g(i), WithinRel(fd, 1e-6));
  }
}

TEST_CASE("AR(1) and MA(1) coefficients are recovered", "[arima]") {
  const auto ar = testing::simulate_arma({0.6}, {}, 2000, 77);
  CHECK_THAT(fit(ar, {1, 0, 0}).ar[0], WithinAbs(0.6, 0.05));
  const auto ma = testing::simulate_arma({}, {0.5}, 2000, 78);
  CHECK_THAT(fit(ma, {0, 0, 1}).ma[0], WithinAbs(0.5, 0.08));
}

TEST_CASE("residuals drop the first p innovations", "[arima]") {
  const auto y = testing::random_walk(300, 8);
  const auto m = fit(y, {2, 1, 1});
  const auto e = residuals(m, y);
  CHECK(e.size() == y.size() - 1 - 2);
  for (std::size_t k = 0; k < e.size(); ++k) CHECK_THAT(e[k], WithinAbs(m.in_sample_residuals[k + 2], 1e-12));
}

TEST_CASE("forecast residuals equal actual minus one-step forecast", "[arima]") {
  const auto y = testing::random_walk(120, 9);
  const auto m = fit(y, {1, 1, 0});
  const auto e = residuals(m, y);
  // Residual k belongs to observation k + d + p.
  for (std::size_t k = 0; k < e.size(); ++k) {
    const std::size_t t = k + 2;
    CHECK_THAT(e[k], WithinAbs(y[t] - forecast_one(m, std::span<const double>(y.data(), t)), 1e-12));
  }
}

TEST_CASE("forecast_one needs enough history", "[arima]") {
  const auto y = testing::random_walk(100, 4);
  const auto m = fit(y, {2, 1, 0});
  CHECK_THROWS_AS(forecast_one(m, std::span<const double>(y.data(), 2)), DegenerateInputError);
  CHECK_NOTHROW(forecast_one(m, std::span<const double>(y.data(), 3)));
}

TEST_CASE("fit input checks", "[arima]") {
  CHECK_THROWS_AS(fit(std::vector<double>{1, 2, 3}, {2, 0, 2}), DegenerateInputError);
  CHECK_THROWS_AS(fit(testing::random_walk(100, 1), {6, 0, 0}), ConfigurationError);
  const auto m = fit(std::vector<double>{1, 2, 3, 4, 5, 6}, {0, 1, 0});
  CHECK(m.sigma2 == 0.0);
  CHECK_THROWS_AS(aic(m), DegenerateInputError);
}

TEST_CASE("AIC prefers the true order over an underfit", "[arima]") {
  const auto z = testing::simulate_arma({0.5, 0.3}, {}, 1000, 31);
  const auto a1 = aic(fit(z, {1, 0, 0}));
  const auto a2 = aic(fit(z, {2, 0, 0}));
  CHECK(a2 < a1);
  // Nested fits never raise the CSS.
  CHECK(fit(z, {3, 0, 0}).css <= fit(z, {2, 0, 0}).css + 1e-9);
}

TEST_CASE("order choice is independent of candidate order", "[arima][select]") {
  std::vector<OrderCandidate> c{
      {{1, 1, 0}, -10.0, true, {}}, {{0, 1, 1}, -10.0, true, {}}, {{2, 1, 0}, -12.0, false, {}},
      {{0, 1, 2}, -9.0, true, {}},  {{1, 1, 1}, -10.0, true, {}},
  };
  const auto first = choose_order(c);
  CHECK(first == ArimaOrder{0, 1, 1});
  std::mt19937 rng(3);
  for (int k = 0; k < 20; ++k) {
    std::shuffle(c.begin(), c.end(), rng);
    CHECK(choose_order(c) == first);
  }
  std::vector<OrderCandidate> none{{{1, 1, 0}, -1.0, false, {}}};
  CHECK_THROWS_AS(choose_order(none), AnalysisError);
}

TEST_CASE("select_order differences a random walk once", "[arima][select]") {
  const auto y = testing::random_walk(600, 12, 100.0);
  const auto report = select_order(y, {2, 2, 2});
  REQUIRE(report.adf.size() == 2);
  CHECK_FALSE(report.adf[0].is_stationary_5pct);
  CHECK(report.adf[1].is_stationary_5pct);
  CHECK(report.chosen.d == 1);
  CHECK(report.candidates.size() == 9);
}

TEST_CASE("select_order keeps stationary AR data undifferenced", "[arima][select]") {
  const auto z = testing::simulate_arma({0.6}, {}, 800, 13);
  const auto report = select_order(z, {2, 2, 2});
  CHECK(report.chosen.d == 0);
  CHECK(report.chosen.p >= 1);
}

TEST_CASE("stationarity flag reflects the AR roots", "[arima]") {
  CHECK(detail::polynomial_roots_outside_unit_circle({0.5}));
  CHECK_FALSE(detail::polynomial_roots_outside_unit_circle({1.2}));
  CHECK(detail::polynomial_roots_outside_unit_circle({0.5, 0.3}));
  CHECK_FALSE(detail::polynomial_roots_outside_unit_circle({0.5, 0.6}));
}

TEST_CASE("OLS helper recovers exact coefficients", "[linalg]") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4;
  Eigen::VectorXd y = X * Eigen::Vector2d(2.0, -0.5);
  const auto r = ols(X, y);
  CHECK_THAT(r.beta(0), WithinAbs(2.0, 1e-12));
  CHECK_THAT(r.beta(1), WithinAbs(-0.5, 1e-12));
  CHECK(r.rss < 1e-20);
  Eigen::MatrixXd singular(3, 2);
  singular << 1, 2, 2, 4, 3, 6;
  CHECK_THROWS_AS(ols(singular, Eigen::Vector3d(1, 2, 3)), NumericalError);
}

TEST_CASE("box-constrained minimiser respects bounds", "[optimize]") {
  // f = (x - 3)^2 + (y + 1)^2 on [-1,1]^2 has its minimum at the corner (1,-1).
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g(0) = 2 * (x(0) - 3);
    g(1) = 2 * (x(1) + 1);
    return (x(0) - 3) * (x(0) - 3) + (x(1) + 1) * (x(1) + 1);
  };
  const auto r = minimize_box(f, Eigen::Vector2d(0, 0), Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  CHECK(r.converged);
  CHECK_THAT(r.x(0), WithinAbs(1.0, 1e-12));
  CHECK_THAT(r.x(1), WithinAbs(-1.0, 1e-8));
}
