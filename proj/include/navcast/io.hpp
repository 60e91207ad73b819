#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "navcast/arima.hpp"
#include "navcast/date.hpp"
#include "navcast/error.hpp"
#include "navcast/hybrid.hpp"
#include "navcast/lstm.hpp"
#include "navcast/metrics.hpp"
#include "navcast/series.hpp"

namespace navcast {

namespace detail {

/// Shortest form that still round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double out = 0.0;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, out);
  if (ec != std::errc{} || ptr != last || !std::isfinite(out)) return std::nullopt;
  return out;
}

inline std::optional<std::size_t> parse_size(std::string_view text) {
  std::size_t out = 0;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, out);
  if (text.empty() || ec != std::errc{} || ptr != last) return std::nullopt;
  return out;
}

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// All lines, with a UTF-8 byte order mark and trailing carriage returns removed.
inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lines.empty() && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    lines.push_back(std::move(line));
  }
  return lines;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

/// Writes through `body(stream)` and fails loudly if anything went wrong.
template <class Body>
void write_file(const std::filesystem::path& path, Body&& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  body(out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

template <class Parse>
auto read_file(const std::filesystem::path& path, Parse&& parse) {
  auto in = open_for_read(path);
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

/// Flat `key value...` document; blank lines and `#` comments are skipped.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::istream& in) {
    KeyValueDoc doc;
    const auto lines = read_lines(in);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto line = trim(lines[i]);
      if (line.empty() || line.front() == '#') continue;
      std::istringstream tokens{std::string(line)};
      std::string key;
      tokens >> key;
      Entry entry{i + 1, {}};
      for (std::string tok; tokens >> tok;) entry.values.push_back(tok);
      if (!doc.entries_.emplace(key, std::move(entry)).second)
        throw ParseError("duplicate key '" + key + "'", i + 1);
    }
    return doc;
  }

  [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) > 0; }

  [[nodiscard]] const std::vector<std::string>& values(const std::string& key) const {
    return entry(key).values;
  }

  [[nodiscard]] std::string text(const std::string& key) const {
    const auto& e = entry(key);
    if (e.values.size() != 1) throw ParseError("key '" + key + "' expects one value", e.line);
    return e.values.front();
  }

  [[nodiscard]] double number(const std::string& key) const {
    const auto v = parse_double(text(key));
    if (!v) throw ParseError("key '" + key + "' is not a finite number", entry(key).line);
    return *v;
  }

  [[nodiscard]] std::size_t count(const std::string& key) const {
    const auto v = parse_size(text(key));
    if (!v) throw ParseError("key '" + key + "' is not a non-negative integer", entry(key).line);
    return *v;
  }

  [[nodiscard]] std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : values(key)) {
      const auto v = parse_double(s);
      if (!v) throw ParseError("key '" + key + "' has non-numeric entry '" + s + "'", entry(key).line);
      out.push_back(*v);
    }
    return out;
  }

  void expect_format(const std::string& name, std::size_t version) const {
    if (!has("format") || text("format") != name)
      throw ParseError("not a " + name + " document", 0);
    if (count("version") != version)
      throw ParseError(name + ": unsupported version " + text("version"), entry("version").line);
  }

 private:
  struct Entry {
    std::size_t line = 0;
    std::vector<std::string> values;
  };

  const Entry& entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError("missing key '" + key + "'", 0);
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

inline void write_numbers(std::ostream& out, const std::string& key, std::span<const double> v) {
  out << key;
  for (double x : v) out << ' ' << format_double(x);
  out << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// NAV series

/// Reads a `date,nav` CSV. Rows are sorted by date; duplicate dates,
/// non-numeric or non-positive NAVs are rejected with their 1-based line.
[[nodiscard]] inline TimeSeries parse_nav_csv(std::istream& in, std::string name = {}) {
  const auto lines = detail::read_lines(in);
  std::size_t header = 0;
  while (header < lines.size() && detail::trim(lines[header]).empty()) ++header;
  if (header == lines.size()) throw ParseError("empty file", 0);
  const auto cols = detail::split(lines[header], ',');
  if (cols.size() != 2 || cols[0] != "date" || cols[1] != "nav")
    throw ParseError("expected header 'date,nav'", header + 1);

  struct Row {
    Date date;
    double nav;
    std::size_t line;
  };
  std::vector<Row> rows;
  for (std::size_t i = header + 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (detail::trim(lines[i]).empty()) continue;
    const auto fields = detail::split(lines[i], ',');
    if (fields.size() != 2)
      throw ParseError("expected 2 fields, found " + std::to_string(fields.size()), line_no);
    const auto date = parse_iso_date(fields[0]);
    if (!date) throw ParseError("invalid date '" + std::string(fields[0]) + "'", line_no);
    const auto nav = detail::parse_double(fields[1]);
    if (!nav) throw ParseError("non-numeric nav '" + std::string(fields[1]) + "'", line_no);
    if (!(*nav > 0.0))
      throw ParseError("nav must be positive, got " + std::string(fields[1]), line_no);
    rows.push_back({*date, *nav, line_no});
  }
  if (rows.empty()) throw ParseError("no data rows", 0);

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  std::vector<Date> dates;
  std::vector<double> values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].date == rows[i - 1].date) {
      const auto& later = rows[i].line > rows[i - 1].line ? rows[i] : rows[i - 1];
      const auto& earlier = rows[i].line > rows[i - 1].line ? rows[i - 1] : rows[i];
      throw ParseError("duplicate date " + format_iso_date(later.date) + " (first on line " +
                           std::to_string(earlier.line) + ")",
                       later.line);
    }
    dates.push_back(rows[i].date);
    values.push_back(rows[i].nav);
  }
  return TimeSeries(std::move(dates), std::move(values), std::move(name));
}

[[nodiscard]] inline TimeSeries read_nav_csv(const std::filesystem::path& path) {
  return detail::read_file(path, [&](std::istream& in) {
    return parse_nav_csv(in, path.stem().string());
  });
}

inline void write_nav_csv(std::ostream& out, const TimeSeries& series) {
  out << "date,nav\n";
  for (std::size_t i = 0; i < series.size(); ++i)
    out << format_iso_date(series.date(i)) << ',' << detail::format_double(series.value(i)) << '\n';
}

inline void write_nav_csv(const std::filesystem::path& path, const TimeSeries& series) {
  detail::write_file(path, [&](std::ostream& out) { write_nav_csv(out, series); });
}

// ---------------------------------------------------------------------------
// ARIMA model document

inline void write_arima(std::ostream& out, const ArimaModel& m) {
  out << "# navcast ARIMA model\n";
  out << "format navcast-arima\nversion 1\n";
  out << "order " << m.order.p << ' ' << m.order.d << ' ' << m.order.q << '\n';
  detail::write_numbers(out, "ar", m.ar);
  detail::write_numbers(out, "ma", m.ma);
  out << "mean " << detail::format_double(m.mean) << '\n';
  out << "intercept " << detail::format_double(m.intercept) << '\n';
  out << "sigma2 " << detail::format_double(m.sigma2) << '\n';
  out << "css " << detail::format_double(m.css) << '\n';
  out << "n_obs " << m.n_obs << '\n';
  out << "converged " << (m.converged ? 1 : 0) << '\n';
}

/// The in-sample residuals are not stored; everything needed to forecast is.
[[nodiscard]] inline ArimaModel parse_arima(std::istream& in) {
  const auto doc = detail::KeyValueDoc::parse(in);
  doc.expect_format("navcast-arima", 1);
  ArimaModel m;
  const auto& order = doc.values("order");
  if (order.size() != 3) throw ParseError("order needs three integers", 0);
  std::size_t pdq[3];
  for (int i = 0; i < 3; ++i) {
    const auto v = detail::parse_size(order[static_cast<std::size_t>(i)]);
    if (!v) throw ParseError("order entries must be non-negative integers", 0);
    pdq[i] = *v;
  }
  m.order = {pdq[0], pdq[1], pdq[2]};
  validate(m.order);
  m.ar = doc.numbers("ar");
  m.ma = doc.numbers("ma");
  if (m.ar.size() != m.order.p || m.ma.size() != m.order.q)
    throw ParseError("coefficient counts do not match order " + m.order.to_string(), 0);
  m.mean = doc.number("mean");
  m.intercept = doc.number("intercept");
  m.sigma2 = doc.number("sigma2");
  m.css = doc.number("css");
  m.n_obs = doc.count("n_obs");
  m.converged = doc.count("converged") != 0;
  m.ar_stationary = detail::polynomial_roots_outside_unit_circle(m.ar);
  return m;
}

inline void write_arima(const std::filesystem::path& path, const ArimaModel& m) {
  detail::write_file(path, [&](std::ostream& out) { write_arima(out, m); });
}

[[nodiscard]] inline ArimaModel read_arima(const std::filesystem::path& path) {
  return detail::read_file(path, [](std::istream& in) { return parse_arima(in); });
}

// ---------------------------------------------------------------------------
// LSTM network document

namespace detail {

/// Every tensor of `net` as a rows x cols view, in `tensors()` order.
inline std::vector<Eigen::Map<Eigen::MatrixXd>> tensor_views(LstmNetwork& net) {
  std::vector<Eigen::Map<Eigen::MatrixXd>> out;
  for (auto& layer : net.layers) {
    for (auto& w : layer.W) out.emplace_back(w.data(), w.rows(), w.cols());
    for (auto& b : layer.b) out.emplace_back(b.data(), b.size(), 1);
  }
  out.emplace_back(net.head.w.data(), 1, net.head.w.size());
  out.emplace_back(&net.head.b, 1, 1);
  return out;
}

}  // namespace detail

/// Dimensions first, then one `tensor NAME ROWS COLS values...` line per
/// tensor with values in row-major order.
inline void write_lstm(std::ostream& out, const LstmNetwork& net) {
  validate(net);
  LstmNetwork copy = net;
  out << "# navcast LSTM network\n";
  out << "format navcast-lstm\nversion 1\n";
  out << "input_dim " << net.input_dim() << '\n';
  out << "layers " << net.layers.size() << '\n';
  out << "hidden";
  for (const auto& layer : net.layers) out << ' ' << layer.hidden_dim();
  out << '\n';
  const auto names = tensor_names(copy);
  const auto views = detail::tensor_views(copy);
  for (std::size_t k = 0; k < views.size(); ++k) {
    const auto& v = views[k];
    out << "tensor " << names[k] << ' ' << v.rows() << ' ' << v.cols();
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      for (Eigen::Index c = 0; c < v.cols(); ++c) out << ' ' << detail::format_double(v(r, c));
    out << '\n';
  }
}

[[nodiscard]] inline LstmNetwork parse_lstm(std::istream& in) {
  const auto lines = detail::read_lines(in);
  std::ostringstream header;
  std::vector<std::pair<std::size_t, std::string>> tensor_lines;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].rfind("tensor ", 0) == 0)
      tensor_lines.emplace_back(i + 1, lines[i]);
    else
      header << lines[i] << '\n';
  }
  std::istringstream header_in(header.str());
  const auto doc = detail::KeyValueDoc::parse(header_in);
  doc.expect_format("navcast-lstm", 1);
  const std::size_t input_dim = doc.count("input_dim");
  const std::size_t layers = doc.count("layers");
  const auto& hidden = doc.values("hidden");
  if (layers == 0 || hidden.size() != layers)
    throw ParseError("hidden must list one width per layer", 0);

  LstmNetwork net;
  std::size_t in_dim = input_dim;
  for (const auto& h : hidden) {
    const auto width = detail::parse_size(h);
    if (!width || *width == 0) throw ParseError("invalid hidden width '" + h + "'", 0);
    net.layers.push_back(LstmCellParams::zeros(in_dim, *width));
    in_dim = *width;
  }
  net.head.w = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(in_dim));

  const auto names = tensor_names(net);
  auto views = detail::tensor_views(net);
  if (tensor_lines.size() != views.size())
    throw ParseError("expected " + std::to_string(views.size()) + " tensors, found " +
                         std::to_string(tensor_lines.size()),
                     0);
  for (std::size_t k = 0; k < views.size(); ++k) {
    const auto& [line_no, text] = tensor_lines[k];
    std::istringstream tokens(text);
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    tokens >> tag >> name >> rows >> cols;
    auto& v = views[k];
    if (!tokens || name != names[k] || rows != static_cast<std::size_t>(v.rows()) ||
        cols != static_cast<std::size_t>(v.cols()))
      throw ParseError("expected tensor " + names[k] + " " + std::to_string(v.rows()) + "x" +
                           std::to_string(v.cols()),
                       line_no);
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        std::string tok;
        if (!(tokens >> tok)) throw ParseError("tensor " + name + " is truncated", line_no);
        const auto x = detail::parse_double(tok);
        if (!x) throw ParseError("tensor " + name + " has bad value '" + tok + "'", line_no);
        v(r, c) = *x;
      }
    }
    if (std::string extra; tokens >> extra)
      throw ParseError("tensor " + name + " has trailing values", line_no);
  }
  validate(net);
  return net;
}

inline void write_lstm(const std::filesystem::path& path, const LstmNetwork& net) {
  detail::write_file(path, [&](std::ostream& out) { write_lstm(out, net); });
}

[[nodiscard]] inline LstmNetwork read_lstm(const std::filesystem::path& path) {
  return detail::read_file(path, [](std::istream& in) { return parse_lstm(in); });
}

// ---------------------------------------------------------------------------
// Scalers and model bundles

inline void write_scale(std::ostream& out, const ScaleParams& s, std::size_t window_m) {
  out << "format navcast-scale\nversion 1\n";
  out << "min " << detail::format_double(s.min) << '\n';
  out << "max " << detail::format_double(s.max) << '\n';
  out << "target_lo " << detail::format_double(s.target_lo) << '\n';
  out << "target_hi " << detail::format_double(s.target_hi) << '\n';
  out << "window_m " << window_m << '\n';
}

[[nodiscard]] inline std::pair<ScaleParams, std::size_t> parse_scale(std::istream& in) {
  const auto doc = detail::KeyValueDoc::parse(in);
  doc.expect_format("navcast-scale", 1);
  ScaleParams s{doc.number("min"), doc.number("max"), doc.number("target_lo"),
                doc.number("target_hi")};
  validate(s);
  const std::size_t m = doc.count("window_m");
  if (m == 0) throw ParseError("window_m must be positive", 0);
  return {s, m};
}

namespace detail {

inline std::pair<ScaleParams, std::size_t> read_scale(const std::filesystem::path& path) {
  return read_file(path, [](std::istream& in) { return parse_scale(in); });
}

inline void write_scale(const std::filesystem::path& path, const ScaleParams& s, std::size_t m) {
  write_file(path, [&](std::ostream& out) { navcast::write_scale(out, s, m); });
}

}  // namespace detail

/// hybrid_arima.txt, hybrid_lstm.txt and hybrid_scale.txt inside `dir`.
inline void write_hybrid(const std::filesystem::path& dir, const HybridModel& model) {
  write_arima(dir / "hybrid_arima.txt", model.arima);
  write_lstm(dir / "hybrid_lstm.txt", model.residual_net);
  detail::write_scale(dir / "hybrid_scale.txt", model.residual_scale, model.window_m);
}

[[nodiscard]] inline HybridModel read_hybrid(const std::filesystem::path& dir) {
  HybridModel model;
  model.arima = read_arima(dir / "hybrid_arima.txt");
  model.residual_net = read_lstm(dir / "hybrid_lstm.txt");
  std::tie(model.residual_scale, model.window_m) = detail::read_scale(dir / "hybrid_scale.txt");
  return model;
}

/// lstm.txt and lstm_scale.txt inside `dir`.
inline void write_lstm_baseline(const std::filesystem::path& dir, const LstmBaseline& model) {
  write_lstm(dir / "lstm.txt", model.net);
  detail::write_scale(dir / "lstm_scale.txt", model.scale, model.window_m);
}

[[nodiscard]] inline LstmBaseline read_lstm_baseline(const std::filesystem::path& dir) {
  LstmBaseline model;
  model.net = read_lstm(dir / "lstm.txt");
  std::tie(model.scale, model.window_m) = detail::read_scale(dir / "lstm_scale.txt");
  return model;
}

// ---------------------------------------------------------------------------
// metrics.json

[[nodiscard]] inline nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["model"] = to_string(r.model);
    if (r.ok()) {
      row["mse"] = r.mse;
      row["mae"] = r.mae;
      row["rmse"] = r.rmse;
    } else {
      row["mse"] = nullptr;
      row["mae"] = nullptr;
      row["rmse"] = nullptr;
    }
    row["n"] = r.n;
    if (r.error) row["error"] = *r.error;
    rows.push_back(std::move(row));
  }
  nlohmann::ordered_json doc;
  doc["segment"] = report.segment;
  doc["rows"] = std::move(rows);
  doc["best"] = report.best;
  return doc;
}

[[nodiscard]] inline MetricsReport metrics_from_json(const nlohmann::json& doc) {
  try {
    MetricsReport report;
    report.segment = doc.at("segment").get<std::string>();
    report.best = doc.at("best").get<std::string>();
    for (const auto& row : doc.at("rows")) {
      MetricsRow r;
      r.model = parse_model_kind(row.at("model").get<std::string>());
      r.n = row.at("n").get<std::size_t>();
      if (row.contains("error")) {
        r.error = row.at("error").get<std::string>();
      } else {
        r.mse = row.at("mse").get<double>();
        r.mae = row.at("mae").get<double>();
        r.rmse = row.at("rmse").get<double>();
      }
      report.rows.push_back(std::move(r));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics.json: ") + e.what(), 0);
  } catch (const ConfigurationError& e) {
    throw ParseError(std::string("metrics.json: ") + e.what(), 0);
  }
}

inline void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report) {
  detail::write_file(path, [&](std::ostream& out) { out << to_json(report).dump(2) << '\n'; });
}

[[nodiscard]] inline MetricsReport read_metrics_json(const std::filesystem::path& path) {
  return detail::read_file(path, [](std::istream& in) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), 0);
    }
    return metrics_from_json(doc);
  });
}

/// Aligned, human-readable table with six significant digits.
inline void print_metrics_table(std::ostream& out, const MetricsReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %14s %14s %14s %6s\n", "model", "MSE", "MAE", "RMSE", "n");
  out << buf;
  for (const auto& r : report.rows) {
    if (r.ok())
      std::snprintf(buf, sizeof buf, "%-8s %14.6g %14.6g %14.6g %6zu\n", to_string(r.model).c_str(),
                    r.mse, r.mae, r.rmse, r.n);
    else
      std::snprintf(buf, sizeof buf, "%-8s %14s %14s %14s %6s  (%s)\n", to_string(r.model).c_str(),
                    "failed", "-", "-", "-", r.error->c_str());
    out << buf;
  }
  out << "best: " << report.best << '\n';
}

// ---------------------------------------------------------------------------
// predictions.csv

inline constexpr std::string_view kPredictionsHeader = "date,actual,arima,lstm,hybrid";

/// One test date; a model that failed leaves its column empty.
struct PredictionRow {
  Date date;
  double actual = 0.0;
  std::optional<double> arima;
  std::optional<double> lstm;
  std::optional<double> hybrid;
};

/// Aligns the runs on the test segment of `series`.
[[nodiscard]] inline std::vector<PredictionRow> prediction_rows(const TimeSeries& series,
                                                                const SplitSpec& spec,
                                                                std::span<const EvalRun> runs) {
  validate(spec, series.size());
  std::vector<PredictionRow> rows;
  for (std::size_t t = spec.test_start(); t < spec.total(); ++t)
    rows.push_back({series.date(t), series.value(t), {}, {}, {}});
  for (const auto& run : runs) {
    if (run.error) continue;
    if (run.predictions.size() != rows.size())
      throw ConfigurationError("prediction_rows: run length does not match the test segment");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& slot = run.kind == ModelKind::arima  ? rows[i].arima
                   : run.kind == ModelKind::lstm ? rows[i].lstm
                                                 : rows[i].hybrid;
      slot = run.predictions[i];
    }
  }
  return rows;
}

inline void write_predictions_csv(std::ostream& out, std::span<const PredictionRow> rows) {
  auto cell = [](const std::optional<double>& v) {
    return v ? detail::format_double(*v) : std::string();
  };
  out << kPredictionsHeader << '\n';
  for (const auto& r : rows)
    out << format_iso_date(r.date) << ',' << detail::format_double(r.actual) << ',' << cell(r.arima)
        << ',' << cell(r.lstm) << ',' << cell(r.hybrid) << '\n';
}

[[nodiscard]] inline std::vector<PredictionRow> parse_predictions_csv(std::istream& in) {
  const auto lines = detail::read_lines(in);
  if (lines.empty() || detail::trim(lines[0]) != kPredictionsHeader)
    throw ParseError("expected header '" + std::string(kPredictionsHeader) + "'", 1);
  std::vector<PredictionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 5) throw ParseError("expected 5 fields", i + 1);
    PredictionRow r;
    const auto date = parse_iso_date(f[0]);
    const auto actual = detail::parse_double(f[1]);
    if (!date || !actual) throw ParseError("bad date or actual", i + 1);
    r.date = *date;
    r.actual = *actual;
    std::optional<double>* slots[3] = {&r.arima, &r.lstm, &r.hybrid};
    for (int k = 0; k < 3; ++k) {
      const auto text = f[static_cast<std::size_t>(k) + 2];
      if (text.empty()) continue;
      const auto v = detail::parse_double(text);
      if (!v) throw ParseError("bad prediction '" + std::string(text) + "'", i + 1);
      *slots[k] = *v;
    }
    rows.push_back(r);
  }
  return rows;
}

inline void write_predictions_csv(const std::filesystem::path& path,
                                  std::span<const PredictionRow> rows) {
  detail::write_file(path, [&](std::ostream& out) { write_predictions_csv(out, rows); });
}

[[nodiscard]] inline std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& path) {
  return detail::read_file(path, [](std::istream& in) { return parse_predictions_csv(in); });
}

// ---------------------------------------------------------------------------
// Analysis artifacts

/// ADF results for d = 0, 1, ... and the first d judged stationary at 5%.
struct AdfReport {
  std::vector<AdfResult> tests;
  std::optional<std::size_t> chosen_d;
};

[[nodiscard]] inline nlohmann::ordered_json to_json(const AdfReport& report) {
  nlohmann::ordered_json tests = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < report.tests.size(); ++d) {
    const auto& r = report.tests[d];
    nlohmann::ordered_json t;
    t["d"] = d;
    t["statistic"] = r.statistic;
    t["lag_used"] = r.lag_used;
    t["nobs"] = r.nobs;
    t["critical_values"] = {{"1%", r.critical_values.pct1},
                            {"5%", r.critical_values.pct5},
                            {"10%", r.critical_values.pct10}};
    t["stationary_5pct"] = r.is_stationary_5pct;
    tests.push_back(std::move(t));
  }
  nlohmann::ordered_json doc;
  doc["tests"] = std::move(tests);
  doc["chosen_d"] = report.chosen_d ? nlohmann::ordered_json(*report.chosen_d) : nullptr;
  return doc;
}

inline void write_adf_json(const std::filesystem::path& path, const AdfReport& report) {
  detail::write_file(path, [&](std::ostream& out) { out << to_json(report).dump(2) << '\n'; });
}

[[nodiscard]] inline AdfReport read_adf_json(const std::filesystem::path& path) {
  return detail::read_file(path, [](std::istream& in) {
    try {
      const auto doc = nlohmann::json::parse(in);
      AdfReport report;
      for (const auto& t : doc.at("tests")) {
        AdfResult r;
        r.statistic = t.at("statistic").get<double>();
        r.lag_used = t.at("lag_used").get<std::size_t>();
        r.nobs = t.at("nobs").get<std::size_t>();
        const auto& cv = t.at("critical_values");
        r.critical_values = {cv.at("1%").get<double>(), cv.at("5%").get<double>(),
                             cv.at("10%").get<double>()};
        r.is_stationary_5pct = t.at("stationary_5pct").get<bool>();
        report.tests.push_back(r);
      }
      if (!doc.at("chosen_d").is_null()) report.chosen_d = doc.at("chosen_d").get<std::size_t>();
      return report;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("adf.json: ") + e.what(), 0);
    }
  });
}

inline void write_correlogram_csv(std::ostream& out, std::span<const CorrelogramPoint> points) {
  out << "lag,value,confidence_bound\n";
  for (const auto& p : points)
    out << p.lag << ',' << detail::format_double(p.value) << ','
        << detail::format_double(p.confidence_bound) << '\n';
}

[[nodiscard]] inline std::vector<CorrelogramPoint> parse_correlogram_csv(std::istream& in) {
  const auto lines = detail::read_lines(in);
  if (lines.empty() || detail::trim(lines[0]) != "lag,value,confidence_bound")
    throw ParseError("expected header 'lag,value,confidence_bound'", 1);
  std::vector<CorrelogramPoint> points;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 3) throw ParseError("expected 3 fields", i + 1);
    const auto lag = detail::parse_size(f[0]);
    const auto value = detail::parse_double(f[1]);
    const auto bound = detail::parse_double(f[2]);
    if (!lag || !value || !bound) throw ParseError("malformed correlogram row", i + 1);
    points.push_back({*lag, *value, *bound});
  }
  return points;
}

inline void write_correlogram_csv(const std::filesystem::path& path,
                                  std::span<const CorrelogramPoint> points) {
  detail::write_file(path, [&](std::ostream& out) { write_correlogram_csv(out, points); });
}

[[nodiscard]] inline std::vector<CorrelogramPoint> read_correlogram_csv(
    const std::filesystem::path& path) {
  return detail::read_file(path, [](std::istream& in) { return parse_correlogram_csv(in); });
}

/// Dated first differences: row k is y_{k+1} - y_k stamped with date k+1.
inline void write_diff_csv(std::ostream& out, const TimeSeries& series) {
  const auto diff = difference(series, 1);
  out << "date,diff\n";
  for (std::size_t k = 0; k < diff.values.size(); ++k)
    out << format_iso_date(series.date(k + 1)) << ',' << detail::format_double(diff.values[k])
        << '\n';
}

[[nodiscard]] inline std::vector<std::pair<Date, double>> parse_diff_csv(std::istream& in) {
  const auto lines = detail::read_lines(in);
  if (lines.empty() || detail::trim(lines[0]) != "date,diff")
    throw ParseError("expected header 'date,diff'", 1);
  std::vector<std::pair<Date, double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split(lines[i], ',');
    if (f.size() != 2) throw ParseError("expected 2 fields", i + 1);
    const auto date = parse_iso_date(f[0]);
    const auto v = detail::parse_double(f[1]);
    if (!date || !v) throw ParseError("malformed diff row", i + 1);
    rows.emplace_back(*date, *v);
  }
  return rows;
}

inline void write_diff_csv(const std::filesystem::path& path, const TimeSeries& series) {
  detail::write_file(path, [&](std::ostream& out) { write_diff_csv(out, series); });
}

[[nodiscard]] inline std::vector<std::pair<Date, double>> read_diff_csv(
    const std::filesystem::path& path) {
  return detail::read_file(path, [](std::istream& in) { return parse_diff_csv(in); });
}

// ---------------------------------------------------------------------------
// Order search and training logs

[[nodiscard]] inline nlohmann::ordered_json to_json(const OrderSearchReport& report) {
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (const auto& c : report.candidates) {
    nlohmann::ordered_json j;
    j["p"] = c.order.p;
    j["d"] = c.order.d;
    j["q"] = c.order.q;
    j["aic"] = std::isfinite(c.aic) ? nlohmann::ordered_json(c.aic) : nullptr;
    j["converged"] = c.converged;
    if (!c.note.empty()) j["note"] = c.note;
    cands.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["chosen"] = {{"p", report.chosen.p}, {"d", report.chosen.d}, {"q", report.chosen.q}};
  doc["candidates"] = std::move(cands);
  return doc;
}

inline void write_order_search_json(const std::filesystem::path& path,
                                    const OrderSearchReport& report) {
  detail::write_file(path, [&](std::ostream& out) { out << to_json(report).dump(2) << '\n'; });
}

/// epoch,train_loss,val_loss (val_loss empty without a validation set).
inline void write_training_csv(const std::filesystem::path& path, const TrainSummary& s) {
  detail::write_file(path, [&](std::ostream& out) {
    out << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < s.loss_history.size(); ++e) {
      out << e << ',' << detail::format_double(s.loss_history[e]) << ',';
      if (e < s.val_history.size()) out << detail::format_double(s.val_history[e]);
      out << '\n';
    }
  });
}

}  // namespace navcast
