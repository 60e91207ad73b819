#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navcast/arima.hpp"
#include "navcast/error.hpp"
#include "navcast/lstm.hpp"
#include "navcast/metrics.hpp"
#include "navcast/series.hpp"

namespace navcast {

/// Anything the rolling evaluator can read observations from.
template <class S>
concept SeriesSource = requires(const S& s, std::size_t i) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s.value(i) } -> std::convertible_to<double>;
  { s.date(i) } -> std::convertible_to<Date>;
};

/// Sources that want to know when the prediction for index t is produced.
template <class S>
concept PredictionObserver = requires(const S& s, std::size_t t) { s.on_predict(t); };

enum class RefitPolicy { none, arima };

struct EvalOptions {
  /// Trailing history length handed to each one-step prediction.
  std::size_t window_L = 120;
  RefitPolicy refit = RefitPolicy::none;
  /// Explicit order; order search on the training segment when empty.
  std::optional<ArimaOrder> arima_order;
  ArimaOrder order_caps = kDefaultOrderCaps;
};

/// Diagnostics of one LSTM training run.
struct TrainSummary {
  std::vector<double> loss_history;
  std::vector<double> val_history;
  std::optional<double> initial_val_mse;
  std::optional<std::size_t> best_val_epoch;
  double best_val_mse = std::numeric_limits<double>::quiet_NaN();
};

/// ARIMA for the linear part plus an LSTM on the ARIMA residuals.
struct HybridModel {
  ArimaModel arima;
  LstmNetwork residual_net;
  /// Symmetric range fitted on training residuals only, so 0 maps to 0.
  ScaleParams residual_scale;
  std::size_t window_m = 20;
  TrainSummary training;
};

/// The standalone LSTM baseline on min-max scaled levels.
struct LstmBaseline {
  LstmNetwork net;
  ScaleParams scale;
  std::size_t window_m = 20;
  TrainSummary training;
};

struct HybridPrediction {
  double y_hat = 0.0;
  double linear = 0.0;
  double nonlinear = 0.0;
};

/// Seed offsets that keep the three models on independent streams.
[[nodiscard]] inline std::uint64_t model_seed(std::uint64_t master, ModelKind kind) {
  switch (kind) {
    case ModelKind::arima: return master;
    case ModelKind::lstm: return master + 1;
    case ModelKind::hybrid: return master + 2;
  }
  return master;
}

namespace detail {

inline TrainSummary summarize(const TrainResult& r) {
  return {r.loss_history, r.val_history, r.initial_val_mse, r.best_val_epoch, r.best_val_mse};
}

inline std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

/// Fits the linear model: an explicit order, or the AIC-selected one.
[[nodiscard]] inline ArimaModel fit_arima_stage(std::span<const double> train_values,
                                                const std::optional<ArimaOrder>& order,
                                                const ArimaOrder& caps = kDefaultOrderCaps) {
  const ArimaOrder chosen = order ? *order : select_order(train_values, caps).chosen;
  return fit(train_values, chosen);
}

/// Trains the residual network for an already fitted ARIMA model.
[[nodiscard]] inline HybridModel fit_hybrid_residuals(ArimaModel arima,
                                                      std::span<const double> train_values,
                                                      std::span<const double> val_values,
                                                      const TrainConfig& cfg) {
  validate(cfg);
  const std::size_t m = cfg.window_m;
  const std::vector<double> e = residuals(arima, train_values);
  if (e.size() <= m)
    throw ConfigurationError("fit_hybrid: " + std::to_string(e.size()) +
                             " training residuals do not cover window_m=" + std::to_string(m));

  HybridModel model;
  model.window_m = m;
  model.residual_scale = fit_symmetric(e);
  const auto windows = make_windows(e, m, model.residual_scale);

  std::optional<SupervisedWindowSet> val_windows;
  if (!val_values.empty()) {
    const auto all = detail::concat(train_values, val_values);
    const auto e_all = residuals(arima, all);
    // residual k belongs to observation k + d + p
    const std::size_t first = train_values.size() - arima.order.d - arima.order.p;
    val_windows = make_windows(e_all, m, model.residual_scale, first);
  }

  // Zero output head: before training the hybrid reproduces ARIMA exactly.
  auto net = init_network(1, cfg.hidden_dim, cfg.layers, cfg.seed, HeadInit::zero);
  auto trained = train(std::move(net), windows, cfg, val_windows ? &*val_windows : nullptr);
  model.residual_net = std::move(trained.net);
  model.training = detail::summarize(trained);
  model.arima = std::move(arima);
  return model;
}

/// ARIMA on the training segment, then an LSTM on its residual series.
/// The validation segment is only scored, never trained on.
[[nodiscard]] inline HybridModel fit_hybrid(std::span<const double> train_values,
                                            std::span<const double> val_values,
                                            const std::optional<ArimaOrder>& order,
                                            const TrainConfig& cfg) {
  validate(cfg);
  if (train_values.size() < cfg.window_m)
    throw ConfigurationError("fit_hybrid: training segment shorter than window_m");
  return fit_hybrid_residuals(fit_arima_stage(train_values, order), train_values, val_values, cfg);
}

/// The nonlinear correction from the last window_m residuals.
[[nodiscard]] inline double predict_residual(const HybridModel& model,
                                             std::span<const double> recent_residuals) {
  const std::size_t m = model.window_m;
  if (recent_residuals.size() < m)
    throw DegenerateInputError("predict_one: need " + std::to_string(m) + " residuals, have " +
                               std::to_string(recent_residuals.size()));
  const auto tail = recent_residuals.subspan(recent_residuals.size() - m);
  const auto scaled = minmax_scale(tail, model.residual_scale);
  return minmax_unscale(forward(model.residual_net, scaled), model.residual_scale);
}

/// y_hat = linear + nonlinear, with the linear part from `arima` (which may be
/// a refit of model.arima).
[[nodiscard]] inline HybridPrediction predict_one(const HybridModel& model, const ArimaModel& arima,
                                                  std::span<const double> history,
                                                  std::span<const double> recent_residuals) {
  HybridPrediction p;
  p.linear = forecast_one(arima, history);
  p.nonlinear = predict_residual(model, recent_residuals);
  p.y_hat = p.linear + p.nonlinear;
  return p;
}

[[nodiscard]] inline HybridPrediction predict_one(const HybridModel& model,
                                                  std::span<const double> history,
                                                  std::span<const double> recent_residuals) {
  return predict_one(model, model.arima, history, recent_residuals);
}

[[nodiscard]] inline LstmBaseline fit_lstm_baseline(std::span<const double> train_values,
                                                    std::span<const double> val_values,
                                                    const TrainConfig& cfg) {
  validate(cfg);
  LstmBaseline model;
  model.window_m = cfg.window_m;
  model.scale = fit_minmax(train_values);
  const auto windows = make_windows(train_values, cfg.window_m, model.scale);
  std::optional<SupervisedWindowSet> val_windows;
  if (!val_values.empty()) {
    const auto all = detail::concat(train_values, val_values);
    val_windows = make_windows(all, cfg.window_m, model.scale, train_values.size());
  }
  auto net = init_network(1, cfg.hidden_dim, cfg.layers, cfg.seed, HeadInit::uniform);
  auto trained = train(std::move(net), windows, cfg, val_windows ? &*val_windows : nullptr);
  model.net = std::move(trained.net);
  model.training = detail::summarize(trained);
  return model;
}

[[nodiscard]] inline double predict_one(const LstmBaseline& model, std::span<const double> history) {
  if (history.size() < model.window_m)
    throw DegenerateInputError("lstm predict: history shorter than window_m");
  const auto tail = history.subspan(history.size() - model.window_m);
  return minmax_unscale(forward(model.net, minmax_scale(tail, model.scale)), model.scale);
}

// ---------------------------------------------------------------------------
// Rolling one-step-ahead evaluation

namespace detail {

template <SeriesSource S>
std::vector<double> read_range(const S& src, std::size_t first, std::size_t last) {
  std::vector<double> out;
  out.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) out.push_back(src.value(i));
  return out;
}

/// Walks the test segment: each prediction sees only the trailing window
/// [t - L, t); the actual at t is read after the prediction is made and then
/// handed to `observe(prediction, actual)`.
template <SeriesSource S, class Predict, class Observe>
EvalRun rolling_evaluate(const S& src, const SplitSpec& spec, ModelKind kind,
                         std::size_t window_L, Predict&& predict, Observe&& observe) {
  validate(spec, src.size());
  if (window_L == 0) throw ConfigurationError("evaluate: window_L must be positive");
  EvalRun run;
  run.kind = kind;
  run.window_L = window_L;
  const std::size_t n = src.size();
  run.predictions.reserve(spec.test_len);
  for (std::size_t t = spec.test_start(); t < n; ++t) {
    const std::size_t begin = t >= window_L ? t - window_L : 0;
    if (t - begin < window_L) ++run.short_windows;
    const std::vector<double> history = read_range(src, begin, t);
    const HybridPrediction p = predict(std::span<const double>(history));
    if constexpr (PredictionObserver<S>) src.on_predict(t);
    run.predictions.push_back(p.y_hat);
    if (kind == ModelKind::hybrid) {
      run.linear.push_back(p.linear);
      run.nonlinear.push_back(p.nonlinear);
    }
    run.dates.push_back(src.date(t));
    run.actuals.push_back(src.value(t));
    observe(p, run.actuals.back());
  }
  return run;
}

inline constexpr auto ignore_actual = [](const HybridPrediction&, double) {};

/// The ARIMA used at one step: the fitted model, or a same-order refit on
/// the current window.
inline ArimaModel step_arima(const ArimaModel& base, std::span<const double> history,
                             RefitPolicy refit) {
  if (refit == RefitPolicy::none) return base;
  try {
    return fit(history, base.order);
  } catch (const ArimaFitError& e) {
    return e.best_so_far();
  }
}

}  // namespace detail

template <SeriesSource S>
[[nodiscard]] EvalRun evaluate_arima(const S& src, const SplitSpec& spec, const ArimaModel& model,
                                     const EvalOptions& opts = {}) {
  return detail::rolling_evaluate(src, spec, ModelKind::arima, opts.window_L,
                                  [&](std::span<const double> history) {
                                    const auto m = detail::step_arima(model, history, opts.refit);
                                    const double y = forecast_one(m, history);
                                    return HybridPrediction{y, y, 0.0};
                                  },
                                  detail::ignore_actual);
}

/// Residuals fed to the network are e_t = y_t - L_t, where L_t is the linear
/// forecast issued at t. Before the test segment they are the in-sample
/// residuals of the model over all pre-test observations.
template <SeriesSource S>
[[nodiscard]] EvalRun evaluate_hybrid(const S& src, const SplitSpec& spec, const HybridModel& model,
                                      const EvalOptions& opts = {}) {
  validate(spec, src.size());
  std::vector<double> recent =
      residuals(model.arima, detail::read_range(src, 0, spec.test_start()));
  return detail::rolling_evaluate(
      src, spec, ModelKind::hybrid, opts.window_L,
      [&](std::span<const double> history) {
        const auto m = detail::step_arima(model.arima, history, opts.refit);
        return predict_one(model, m, history, recent);
      },
      [&](const HybridPrediction& p, double actual) { recent.push_back(actual - p.linear); });
}

template <SeriesSource S>
[[nodiscard]] EvalRun evaluate_lstm(const S& src, const SplitSpec& spec, const LstmBaseline& model,
                                    const EvalOptions& opts = {}) {
  return detail::rolling_evaluate(src, spec, ModelKind::lstm, opts.window_L,
                                  [&](std::span<const double> history) {
                                    const double y = predict_one(model, history);
                                    return HybridPrediction{y, y, 0.0};
                                  },
                                  detail::ignore_actual);
}

/// Fits one model kind on the training segment and evaluates it over the
/// test segment.
template <SeriesSource S>
[[nodiscard]] EvalRun sliding_window_evaluate(const S& src, const SplitSpec& spec, ModelKind kind,
                                              const TrainConfig& cfg, const EvalOptions& opts = {}) {
  validate(spec, src.size());
  const auto train_values = detail::read_range(src, 0, spec.train_len);
  const auto val_values = detail::read_range(src, spec.train_len, spec.test_start());
  TrainConfig model_cfg = cfg;
  model_cfg.seed = model_seed(cfg.seed, kind);
  switch (kind) {
    case ModelKind::arima:
      return evaluate_arima(src, spec, fit_arima_stage(train_values, opts.arima_order, opts.order_caps), opts);
    case ModelKind::lstm:
      return evaluate_lstm(src, spec, fit_lstm_baseline(train_values, val_values, model_cfg), opts);
    case ModelKind::hybrid: {
      auto arima = fit_arima_stage(train_values, opts.arima_order, opts.order_caps);
      return evaluate_hybrid(src, spec, fit_hybrid_residuals(std::move(arima), train_values, val_values, model_cfg),
                             opts);
    }
  }
  throw ConfigurationError("sliding_window_evaluate: unknown model kind");
}

struct Comparison {
  std::vector<EvalRun> runs;  ///< arima, lstm, hybrid
  MetricsReport report;
  std::optional<ArimaModel> arima;
  std::optional<LstmBaseline> lstm;
  std::optional<HybridModel> hybrid;
};

/// ARIMA-only, LSTM-only and hybrid under one split and master seed. A model
/// that fails is reported as a failed row; the others still run.
template <SeriesSource S>
[[nodiscard]] Comparison compare_models(const S& src, const SplitSpec& spec, const TrainConfig& cfg,
                                        const EvalOptions& opts = {}) {
  validate(spec, src.size());
  validate(cfg);
  const auto train_values = detail::read_range(src, 0, spec.train_len);
  const auto val_values = detail::read_range(src, spec.train_len, spec.test_start());

  Comparison out;
  auto failed = [](ModelKind kind, const std::string& why) {
    EvalRun run;
    run.kind = kind;
    run.error = why;
    return run;
  };

  std::optional<std::string> arima_error;
  try {
    out.arima = fit_arima_stage(train_values, opts.arima_order, opts.order_caps);
  } catch (const Error& e) {
    arima_error = e.what();
  }

  if (out.arima) {
    try {
      out.runs.push_back(evaluate_arima(src, spec, *out.arima, opts));
    } catch (const Error& e) {
      out.runs.push_back(failed(ModelKind::arima, e.what()));
    }
  } else {
    out.runs.push_back(failed(ModelKind::arima, *arima_error));
  }

  try {
    TrainConfig c = cfg;
    c.seed = model_seed(cfg.seed, ModelKind::lstm);
    out.lstm = fit_lstm_baseline(train_values, val_values, c);
    out.runs.push_back(evaluate_lstm(src, spec, *out.lstm, opts));
  } catch (const Error& e) {
    out.runs.push_back(failed(ModelKind::lstm, e.what()));
  }

  if (out.arima) {
    try {
      TrainConfig c = cfg;
      c.seed = model_seed(cfg.seed, ModelKind::hybrid);
      out.hybrid = fit_hybrid_residuals(*out.arima, train_values, val_values, c);
      out.runs.push_back(evaluate_hybrid(src, spec, *out.hybrid, opts));
    } catch (const Error& e) {
      out.runs.push_back(failed(ModelKind::hybrid, e.what()));
    }
  } else {
    out.runs.push_back(failed(ModelKind::hybrid, *arima_error));
  }

  out.report = build_report(out.runs);
  return out;
}

}  // namespace navcast
