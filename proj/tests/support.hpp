#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "navcast/navcast.hpp"

namespace navcast::testing {

/// Deterministic, irregular values with no random generator involved:
/// sin(0.7 t^2 + 0.3) + 0.5 cos(1.3 t).
inline std::vector<double> chirp_fixture(std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    out[i] = std::sin(0.7 * t * t + 0.3) + 0.5 * std::cos(1.3 * t);
  }
  return out;
}

inline std::vector<double> cumulative(std::vector<double> v) {
  for (std::size_t i = 1; i < v.size(); ++i) v[i] += v[i - 1];
  return v;
}

inline std::vector<double> simulate_arma(const std::vector<double>& ar, const std::vector<double>& ma,
                                         std::size_t n, std::uint64_t seed, std::size_t burn = 200) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> z(n + burn, 0.0), e(n + burn, 0.0);
  for (std::size_t t = 0; t < n + burn; ++t) {
    e[t] = noise(rng);
    double v = e[t];
    for (std::size_t i = 1; i <= ar.size() && i <= t; ++i) v += ar[i - 1] * z[t - i];
    for (std::size_t j = 1; j <= ma.size() && j <= t; ++j) v -= ma[j - 1] * e[t - j];
    z[t] = v;
  }
  return {z.begin() + static_cast<std::ptrdiff_t>(burn), z.end()};
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed, double start = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(n);
  double level = start;
  for (auto& v : y) {
    level += noise(rng);
    v = level;
  }
  return y;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(n);
  for (auto& v : y) v = noise(rng);
  return y;
}

/// Relative error floor: gradients smaller than this are compared absolutely.
inline constexpr double kGradientFloor = 1e-6;

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t parameters = 0;
};

/// Analytic BPTT against central differences of the batch MSE, every parameter.
inline GradientCheck check_gradients(std::size_t hidden, std::size_t layers, std::size_t window,
                                     std::uint64_t seed, double eps = 1e-5) {
  LstmNetwork net = init_network(1, hidden, layers, seed, HeadInit::uniform);
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Non-trivial biases so every gate path carries gradient.
  for (auto& layer : net.layers)
    for (auto& b : layer.b)
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) += 0.3 * u(rng);
  net.head.b = 0.1;

  const Eigen::Index batch = 5;
  Eigen::MatrixXd windows(batch, static_cast<Eigen::Index>(window));
  Eigen::VectorXd targets(batch);
  for (Eigen::Index r = 0; r < batch; ++r) {
    for (Eigen::Index c = 0; c < windows.cols(); ++c) windows(r, c) = u(rng);
    targets(r) = u(rng);
  }

  auto loss = [&](const LstmNetwork& n) {
    return (forward_batch(n, windows) - targets).squaredNorm() / static_cast<double>(batch);
  };

  BatchGradient analytic = bptt_gradients(net, windows, targets);
  const auto names = tensor_names(net);
  auto params = tensors(net);
  auto grads = tensors(analytic.grad);

  GradientCheck out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      params[k][i] = saved + eps;
      const double up = loss(net);
      params[k][i] = saved - eps;
      const double down = loss(net);
      params[k][i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = grads[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradientFloor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst_tensor = names[k];
      }
      ++out.parameters;
    }
  }
  return out;
}

/// Wraps a series and audits every read. Reads made while producing the
/// prediction for t (everything since the previous `on_predict`) must all be
/// of indices < t. Reading index t right after `on_predict(t)` is the reveal
/// of the actual and is always allowed.
class AccessLoggedSeries {
 public:
  explicit AccessLoggedSeries(const TimeSeries& inner) : inner_(&inner) {}

  [[nodiscard]] std::size_t size() const { return inner_->size(); }
  [[nodiscard]] double value(std::size_t i) const {
    record(i);
    return inner_->value(i);
  }
  [[nodiscard]] Date date(std::size_t i) const {
    record(i);
    return inner_->date(i);
  }
  void on_predict(std::size_t t) const {
    for (std::size_t i : pending_)
      if (i >= t) ++violations_;
    pending_.clear();
    revealed_ = t;
    ++predictions_;
  }

  [[nodiscard]] std::size_t violations() const { return violations_; }
  [[nodiscard]] std::size_t reads() const { return reads_; }
  [[nodiscard]] std::size_t predictions() const { return predictions_; }

 private:
  void record(std::size_t i) const {
    ++reads_;
    if (revealed_ && i == *revealed_) return;
    revealed_.reset();
    pending_.push_back(i);
  }

  const TimeSeries* inner_;
  mutable std::vector<std::size_t> pending_;
  mutable std::optional<std::size_t> revealed_;
  mutable std::size_t reads_ = 0;
  mutable std::size_t violations_ = 0;
  mutable std::size_t predictions_ = 0;
};

/// A fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("navcast_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace navcast::testing
