#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navcast/date.hpp"
#include "navcast/error.hpp"

namespace navcast {

namespace detail {

inline void check_pair(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size())
    throw ConfigurationError("metrics: prediction/actual length mismatch (" +
                             std::to_string(pred.size()) + " vs " + std::to_string(actual.size()) +
                             ")");
  if (pred.empty()) throw ConfigurationError("metrics: empty input");
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!std::isfinite(pred[i]) || !std::isfinite(actual[i]))
      throw ConfigurationError("metrics: non-finite value at index " + std::to_string(i));
}

}  // namespace detail

[[nodiscard]] inline double mse(std::span<const double> pred, std::span<const double> actual) {
  detail::check_pair(pred, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - actual[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.size());
}

[[nodiscard]] inline double mae(std::span<const double> pred, std::span<const double> actual) {
  detail::check_pair(pred, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

[[nodiscard]] inline double rmse(std::span<const double> pred, std::span<const double> actual) {
  return std::sqrt(mse(pred, actual));
}

enum class ModelKind { arima, lstm, hybrid };

[[nodiscard]] inline std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::arima: return "arima";
    case ModelKind::lstm: return "lstm";
    case ModelKind::hybrid: return "hybrid";
  }
  return "?";
}

[[nodiscard]] inline ModelKind parse_model_kind(const std::string& name) {
  if (name == "arima") return ModelKind::arima;
  if (name == "lstm") return ModelKind::lstm;
  if (name == "hybrid") return ModelKind::hybrid;
  throw ConfigurationError("unknown model kind '" + name + "'");
}

struct MetricsRow {
  ModelKind model = ModelKind::arima;
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  /// Set when the model failed; the numeric fields are then meaningless.
  std::optional<std::string> error;

  [[nodiscard]] bool ok() const noexcept { return !error.has_value(); }
};

struct MetricsReport {
  std::string segment = "test";
  std::vector<MetricsRow> rows;
  /// Name of the model strictly best on MSE, MAE and RMSE; "tie" when the
  /// leaders share the lowest MSE, "mixed" when the metrics disagree.
  std::string best;
};

[[nodiscard]] inline MetricsRow make_row(ModelKind kind, std::span<const double> pred,
                                         std::span<const double> actual) {
  MetricsRow row;
  row.model = kind;
  row.mse = mse(pred, actual);
  row.mae = mae(pred, actual);
  row.rmse = std::sqrt(row.mse);
  row.n = pred.size();
  return row;
}

[[nodiscard]] inline std::string best_model(const std::vector<MetricsRow>& rows) {
  const MetricsRow* lead = nullptr;
  bool tie = false;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    if (!lead || r.mse < lead->mse) {
      lead = &r;
      tie = false;
    } else if (r.mse == lead->mse) {
      tie = true;
    }
  }
  if (!lead) return "none";
  if (tie) return "tie";
  for (const auto& r : rows) {
    if (!r.ok() || &r == lead) continue;
    if (!(lead->mae < r.mae) || !(lead->rmse < r.rmse)) return "mixed";
  }
  return to_string(lead->model);
}

/// Aligned one-step-ahead predictions of one model over an evaluation segment.
struct EvalRun {
  ModelKind kind = ModelKind::arima;
  std::vector<Date> dates;
  std::vector<double> predictions;
  std::vector<double> actuals;
  /// Trailing history length used for each prediction.
  std::size_t window_L = 0;
  /// Predictions that had less than window_L observations available.
  std::size_t short_windows = 0;
  /// Hybrid only: the linear and residual components, predictions = linear + nonlinear.
  std::vector<double> linear;
  std::vector<double> nonlinear;
  /// Set when the model failed to fit or predict.
  std::optional<std::string> error;
};

[[nodiscard]] inline MetricsReport build_report(std::span<const EvalRun> runs,
                                                std::string segment = "test") {
  MetricsReport report;
  report.segment = std::move(segment);
  for (ModelKind kind : {ModelKind::arima, ModelKind::lstm, ModelKind::hybrid}) {
    for (const auto& run : runs) {
      if (run.kind != kind) continue;
      if (run.error) {
        MetricsRow row;
        row.model = kind;
        row.error = run.error;
        report.rows.push_back(std::move(row));
        continue;
      }
      if (run.predictions.empty()) throw ConfigurationError("build_report: empty run");
      report.rows.push_back(make_row(kind, run.predictions, run.actuals));
    }
  }
  report.best = best_model(report.rows);
  return report;
}

}  // namespace navcast
