#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "navcast/date.hpp"
#include "navcast/error.hpp"
#include "navcast/series.hpp"

namespace navcast {

enum class SyntheticKind { random_walk, ar1, linear_plus_sine };

[[nodiscard]] inline SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "random-walk") return SyntheticKind::random_walk;
  if (name == "ar1") return SyntheticKind::ar1;
  if (name == "linear-plus-sine") return SyntheticKind::linear_plus_sine;
  throw ConfigurationError("unknown synthetic kind '" + std::string(name) + "'");
}

[[nodiscard]] inline std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::random_walk: return "random-walk";
    case SyntheticKind::ar1: return "ar1";
    case SyntheticKind::linear_plus_sine: return "linear-plus-sine";
  }
  return "?";
}

struct SyntheticParams {
  double start = 3.0;   ///< initial level (random walks) or process mean (ar1)
  double drift = 0.0;   ///< per-step mean increment of the random walk
  double sigma = 0.02;  ///< innovation standard deviation
  double phi = 0.6;     ///< ar1 coefficient
  double amplitude = 0.2;
  double period = 50.0;
};

inline const Date kSyntheticStart = Date{std::chrono::year{2016} / 6 / 6};

/// Seeded synthetic series on consecutive business days.
///
///   random-walk       y_t = y_{t-1} + drift + sigma e_t
///   ar1               y_t = start + phi (y_{t-1} - start) + sigma e_t
///   linear-plus-sine  random walk + amplitude sin(2 pi t / period)
[[nodiscard]] inline TimeSeries generate_synthetic(SyntheticKind kind, std::size_t n,
                                                   const SyntheticParams& params,
                                                   std::uint64_t seed) {
  if (n < 30) throw ConfigurationError("generate_synthetic: n must be at least 30");
  if (!(params.sigma >= 0.0) || !std::isfinite(params.sigma))
    throw ConfigurationError("generate_synthetic: sigma must be non-negative");
  if (kind == SyntheticKind::ar1 && !(std::abs(params.phi) < 1.0))
    throw ConfigurationError("generate_synthetic: ar1 needs |phi| < 1");
  if (kind == SyntheticKind::linear_plus_sine && !(params.period > 0.0))
    throw ConfigurationError("generate_synthetic: period must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(n);

  switch (kind) {
    case SyntheticKind::random_walk:
    case SyntheticKind::linear_plus_sine: {
      double level = params.start;
      for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) level += params.drift + params.sigma * noise(rng);
        y[t] = level;
      }
      if (kind == SyntheticKind::linear_plus_sine) {
        for (std::size_t t = 0; t < n; ++t)
          y[t] += params.amplitude *
                  std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / params.period);
      }
      break;
    }
    case SyntheticKind::ar1: {
      // Start from the stationary distribution.
      double dev = params.sigma / std::sqrt(1.0 - params.phi * params.phi) * noise(rng);
      for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) dev = params.phi * dev + params.sigma * noise(rng);
        y[t] = params.start + dev;
      }
      break;
    }
  }
  return TimeSeries::from_values(std::move(y), kSyntheticStart, std::string(to_string(kind)));
}

}  // namespace navcast
