#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "navcast/arima.hpp"
#include "navcast/error.hpp"
#include "navcast/hybrid.hpp"
#include "navcast/io.hpp"
#include "navcast/lstm.hpp"
#include "navcast/metrics.hpp"
#include "navcast/series.hpp"
#include "navcast/synthetic.hpp"

namespace navcast::cli {

/// Process exit codes. Each failure class has its own code.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIngestion = 3,
  kAnalysis = 4,
  kTraining = 5,
  kOutput = 6,
};

/// Everything the commands read from the command line.
struct Config {
  std::string input;
  std::string split;  ///< "A,B,C"; empty means proportional 900:100:260
  std::string order = "auto";
  TrainConfig train;
  std::size_t window_L = 120;
  std::string refit = "none";
  std::string out = ".";
  std::size_t max_lag = 20;

  // synth only
  std::string kind = "linear-plus-sine";
  std::size_t n = 1260;
  SyntheticParams synthetic;
};

namespace detail {

/// An error tagged with the exit code it should produce.
class Failure : public Error {
 public:
  Failure(ExitCode code, const std::string& what) : Error(what), code_(code) {}
  [[nodiscard]] ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Runs `body`, converting library errors into a Failure with `code`.
template <class Body>
auto stage(ExitCode code, Body&& body) {
  try {
    return body();
  } catch (const Failure&) {
    throw;
  } catch (const Error& e) {
    throw Failure(code, e.what());
  } catch (const std::bad_alloc&) {
    throw Failure(code, "out of memory");
  }
}

inline std::vector<std::size_t> parse_list(const std::string& text, std::size_t expected,
                                           const std::string& flag) {
  std::vector<std::size_t> out;
  for (auto part : navcast::detail::split(text, ',')) {
    const auto v = navcast::detail::parse_size(part);
    if (!v) throw Failure(kUsage, flag + ": '" + text + "' is not a list of non-negative integers");
    out.push_back(*v);
  }
  if (out.size() != expected)
    throw Failure(kUsage, flag + ": expected " + std::to_string(expected) + " comma-separated values");
  return out;
}

inline std::optional<ArimaOrder> parse_order(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const auto v = parse_list(text, 3, "--order");
  const ArimaOrder order{v[0], v[1], v[2]};
  try {
    validate(order);
  } catch (const Error& e) {
    throw Failure(kUsage, std::string("--order: ") + e.what());
  }
  return order;
}

inline RefitPolicy parse_refit(const std::string& text) {
  if (text == "none") return RefitPolicy::none;
  if (text == "arima") return RefitPolicy::arima;
  throw Failure(kUsage, "--refit: expected none or arima, got '" + text + "'");
}

inline SplitSpec resolve_split(const Config& cfg, std::size_t n) {
  if (cfg.split.empty()) {
    try {
      return proportional_split(n);
    } catch (const Error& e) {
      throw Failure(kUsage, std::string("--split: ") + e.what());
    }
  }
  const auto v = parse_list(cfg.split, 3, "--split");
  const SplitSpec spec{v[0], v[1], v[2]};
  try {
    validate(spec, n);
  } catch (const Error& e) {
    throw Failure(kUsage, std::string("--split: ") + e.what());
  }
  return spec;
}

inline void check_train_config(const TrainConfig& cfg) {
  try {
    validate(cfg);
  } catch (const Error& e) {
    throw Failure(kUsage, e.what());
  }
}

inline TimeSeries load_input(const Config& cfg) {
  if (cfg.input.empty()) throw Failure(kUsage, "--input is required");
  return stage(kIngestion, [&] { return read_nav_csv(cfg.input); });
}

inline std::filesystem::path prepare_out(const Config& cfg, bool models) {
  return stage(kOutput, [&] {
    std::filesystem::path dir = cfg.out;
    std::error_code ec;
    std::filesystem::create_directories(models ? dir / "models" : dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    return dir;
  });
}

inline EvalOptions eval_options(const Config& cfg) {
  EvalOptions opts;
  opts.window_L = cfg.window_L;
  opts.refit = parse_refit(cfg.refit);
  opts.arima_order = parse_order(cfg.order);
  if (opts.window_L == 0) throw Failure(kUsage, "--window-L must be positive");
  return opts;
}

inline void print_arima(std::ostream& out, const ArimaModel& m) {
  out << "ARIMA" << m.order.to_string() << "  intercept " << navcast::detail::format_double(m.intercept)
      << "  sigma2 " << navcast::detail::format_double(m.sigma2);
  for (std::size_t i = 0; i < m.ar.size(); ++i)
    out << "  ar" << i + 1 << ' ' << navcast::detail::format_double(m.ar[i]);
  for (std::size_t j = 0; j < m.ma.size(); ++j)
    out << "  ma" << j + 1 << ' ' << navcast::detail::format_double(m.ma[j]);
  if (m.sigma2 > 0.0) out << "  aic " << aic(m);
  out << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

/// ADF per differencing order, correlograms of the stationary series, and
/// the first differences.
inline int cmd_analyze(const Config& cfg, std::ostream& out) {
  const auto series = detail::load_input(cfg);
  const auto dir = detail::prepare_out(cfg, false);

  AdfReport report;
  detail::stage(kAnalysis, [&] {
    for (std::size_t d = 0; d <= kDefaultOrderCaps.d; ++d) {
      report.tests.push_back(adf_test(difference_values(series.values(), d)));
      if (report.tests.back().is_stationary_5pct) {
        report.chosen_d = d;
        break;
      }
    }
  });
  detail::stage(kOutput, [&] { write_adf_json(dir / "adf.json", report); });
  for (std::size_t d = 0; d < report.tests.size(); ++d) {
    const auto& r = report.tests[d];
    out << "ADF d=" << d << "  statistic " << r.statistic << "  lags " << r.lag_used << "  "
        << (r.is_stationary_5pct ? "stationary" : "unit root not rejected") << " at 5%\n";
  }
  if (!report.chosen_d)
    throw detail::Failure(kAnalysis, "series is not stationary after " +
                                         std::to_string(kDefaultOrderCaps.d) + " differences");

  const auto w = difference_values(series.values(), *report.chosen_d);
  const auto [acf_points, pacf_points] = detail::stage(kAnalysis, [&] {
    return std::pair{acf(w, cfg.max_lag), pacf(w, cfg.max_lag)};
  });
  detail::stage(kOutput, [&] {
    write_correlogram_csv(dir / "acf.csv", acf_points);
    write_correlogram_csv(dir / "pacf.csv", pacf_points);
    write_diff_csv(dir / "diff.csv", series);
  });
  out << "d = " << *report.chosen_d << "; wrote adf.json, acf.csv, pacf.csv, diff.csv to "
      << dir.string() << '\n';
  return kOk;
}

/// Fits ARIMA on the training segment.
inline int cmd_fit_arima(const Config& cfg, std::ostream& out) {
  const auto order = detail::parse_order(cfg.order);
  const auto series = detail::load_input(cfg);
  const auto spec = detail::resolve_split(cfg, series.size());
  const auto dir = detail::prepare_out(cfg, true);
  const auto train_values = series.values().subspan(0, spec.train_len);

  std::optional<OrderSearchReport> search;
  const ArimaModel model = detail::stage(kAnalysis, [&] {
    ArimaOrder chosen;
    if (order) {
      chosen = *order;
    } else {
      search = select_order(train_values);
      chosen = search->chosen;
    }
    return fit(train_values, chosen);
  });
  detail::stage(kOutput, [&] {
    write_arima(dir / "models" / "arima.txt", model);
    if (search) write_order_search_json(dir / "order_search.json", *search);
  });
  detail::print_arima(out, model);
  return kOk;
}

/// Fits the hybrid (ARIMA + residual LSTM) on the training segment.
inline int cmd_fit_hybrid(const Config& cfg, std::ostream& out) {
  const auto order = detail::parse_order(cfg.order);
  detail::check_train_config(cfg.train);
  const auto series = detail::load_input(cfg);
  const auto spec = detail::resolve_split(cfg, series.size());
  const auto dir = detail::prepare_out(cfg, true);
  const auto values = series.values();
  const auto train_values = values.subspan(0, spec.train_len);
  const auto val_values = values.subspan(spec.train_len, spec.val_len);

  const ArimaModel arima =
      detail::stage(kAnalysis, [&] { return fit_arima_stage(train_values, order); });
  TrainConfig tc = cfg.train;
  tc.seed = model_seed(cfg.train.seed, ModelKind::hybrid);
  const HybridModel model = detail::stage(
      kTraining, [&] { return fit_hybrid_residuals(arima, train_values, val_values, tc); });
  detail::stage(kOutput, [&] {
    write_hybrid(dir / "models", model);
    write_training_csv(dir / "training.csv", model.training);
  });
  detail::print_arima(out, model.arima);
  const auto& t = model.training;
  out << "residual LSTM: " << t.loss_history.size() << " epochs, final train loss "
      << t.loss_history.back();
  if (t.initial_val_mse) {
    out << ", validation MSE " << t.best_val_mse << " (";
    if (t.best_val_epoch)
      out << "epoch " << *t.best_val_epoch + 1;
    else
      out << "untrained network";
    out << ')';
  }
  out << '\n';
  return kOk;
}

/// ARIMA-only, LSTM-only and hybrid on the same split, rolling one step at a
/// time over the test segment.
inline int cmd_compare(const Config& cfg, std::ostream& out) {
  const auto opts = detail::eval_options(cfg);
  detail::check_train_config(cfg.train);
  const auto series = detail::load_input(cfg);
  const auto spec = detail::resolve_split(cfg, series.size());
  const auto dir = detail::prepare_out(cfg, true);

  const Comparison cmp = compare_models(series, spec, cfg.train, opts);
  detail::stage(kOutput, [&] {
    const auto rows = prediction_rows(series, spec, cmp.runs);
    write_predictions_csv(dir / "predictions.csv", rows);
    write_metrics_json(dir / "metrics.json", cmp.report);
    if (cmp.arima) write_arima(dir / "models" / "arima.txt", *cmp.arima);
    if (cmp.lstm) write_lstm_baseline(dir / "models", *cmp.lstm);
    if (cmp.hybrid) write_hybrid(dir / "models", *cmp.hybrid);
  });

  if (cmp.arima) detail::print_arima(out, *cmp.arima);
  print_metrics_table(out, cmp.report);
  // An ARIMA failure is an analysis problem (the hybrid fails with it).
  for (const auto& row : cmp.report.rows)
    if (!row.ok())
      throw detail::Failure(row.model == ModelKind::arima ? kAnalysis : kTraining,
                            to_string(row.model) + " failed: " + *row.error);
  return kOk;
}

inline int cmd_synth(const Config& cfg, std::ostream& out) {
  const auto kind = detail::stage(kUsage, [&] { return parse_synthetic_kind(cfg.kind); });
  const auto series = detail::stage(kUsage, [&] {
    return generate_synthetic(kind, cfg.n, cfg.synthetic, cfg.train.seed);
  });
  for (std::size_t i = 0; i < series.size(); ++i)
    if (!(series.value(i) > 0.0))
      throw detail::Failure(kUsage, "synthetic series reaches a non-positive value at index " +
                                        std::to_string(i) + "; raise --start");
  const auto dir = detail::prepare_out(cfg, false);
  const auto path = dir / (cfg.kind + ".csv");
  detail::stage(kOutput, [&] { write_nav_csv(path, series); });
  out << "wrote " << series.size() << " rows to " << path.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"NAV forecasting with ARIMA, LSTM and an ARIMA-LSTM hybrid", "navcast"};
  app.require_subcommand(1);
  Config cfg;

  auto add_input = [&](CLI::App* c) {
    c->add_option("--input", cfg.input, "CSV with header date,nav")->required();
    c->add_option("--out", cfg.out, "Output directory")->capture_default_str();
  };
  auto add_split = [&](CLI::App* c) {
    c->add_option("--split", cfg.split, "train,val,test sizes (default 900:100:260 scaled to n)");
    c->add_option("--order", cfg.order, "auto or p,d,q")->capture_default_str();
  };
  auto add_training = [&](CLI::App* c) {
    c->add_option("--lr", cfg.train.learning_rate, "Adam learning rate")->capture_default_str();
    c->add_option("--epochs", cfg.train.epochs)->capture_default_str();
    c->add_option("--batch", cfg.train.batch_size)->capture_default_str();
    c->add_option("--layers", cfg.train.layers, "Stacked LSTM layers")->capture_default_str();
    c->add_option("--hidden", cfg.train.hidden_dim, "LSTM hidden width")->capture_default_str();
    c->add_option("--window-m", cfg.train.window_m, "LSTM input window")->capture_default_str();
    c->add_option("--seed", cfg.train.seed, "Master seed")->capture_default_str();
  };

  auto* analyze = app.add_subcommand("analyze", "ADF tests, ACF/PACF and differences");
  add_input(analyze);
  analyze->add_option("--max-lag", cfg.max_lag, "Correlogram lags")->capture_default_str();

  auto* fit_arima_cmd = app.add_subcommand("fit-arima", "Fit ARIMA on the training segment");
  add_input(fit_arima_cmd);
  add_split(fit_arima_cmd);

  auto* fit_hybrid_cmd = app.add_subcommand("fit-hybrid", "Fit ARIMA plus residual LSTM");
  add_input(fit_hybrid_cmd);
  add_split(fit_hybrid_cmd);
  add_training(fit_hybrid_cmd);

  auto* compare = app.add_subcommand("compare", "Rolling test-segment comparison of all models");
  add_input(compare);
  add_split(compare);
  add_training(compare);
  compare->add_option("--window-L", cfg.window_L, "Sliding history length")->capture_default_str();
  compare->add_option("--refit", cfg.refit, "none or arima")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write a synthetic NAV series");
  synth->add_option("--kind", cfg.kind, "random-walk, ar1 or linear-plus-sine")->capture_default_str();
  synth->add_option("--n", cfg.n, "Length")->capture_default_str();
  synth->add_option("--seed", cfg.train.seed)->capture_default_str();
  synth->add_option("--out", cfg.out, "Output directory")->capture_default_str();
  synth->add_option("--start", cfg.synthetic.start)->capture_default_str();
  synth->add_option("--drift", cfg.synthetic.drift)->capture_default_str();
  synth->add_option("--sigma", cfg.synthetic.sigma)->capture_default_str();
  synth->add_option("--phi", cfg.synthetic.phi)->capture_default_str();
  synth->add_option("--amplitude", cfg.synthetic.amplitude)->capture_default_str();
  synth->add_option("--period", cfg.synthetic.period)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(cfg, out);
    if (fit_arima_cmd->parsed()) return cmd_fit_arima(cfg, out);
    if (fit_hybrid_cmd->parsed()) return cmd_fit_hybrid(cfg, out);
    if (compare->parsed()) return cmd_compare(cfg, out);
    if (synth->parsed()) return cmd_synth(cfg, out);
  } catch (const detail::Failure& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kAnalysis;
  }
  return kUsage;
}

}  // namespace navcast::cli
