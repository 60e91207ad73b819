#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "navcast/cli.hpp"
#include "support.hpp"

using namespace navcast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "navcast");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

/// A 300-row linear-plus-sine file in a fresh directory.
fs::path fixture(const std::string& name) {
  const auto dir = testing::scratch_dir(name);
  write_nav_csv(dir / "nav.csv", generate_synthetic(SyntheticKind::linear_plus_sine, 300, {}, 5));
  return dir;
}

/// Small training settings so the end-to-end runs take seconds.
std::vector<std::string> with_tiny(std::vector<std::string> args, const std::string& window_m = "5") {
  args.insert(args.end(), {"--epochs", "2", "--hidden", "4", "--layers", "1", "--window-m", window_m});
  if (args[0] == "compare") args.insert(args.end(), {"--window-L", "60"});
  return args;
}

}  // namespace

TEST_CASE("usage errors exit with 2", "[cli]") {
  const auto dir = fixture("cli_usage");
  const auto csv = (dir / "nav.csv").string();
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"bogus"}).code == cli::kUsage);
  CHECK(invoke({"compare"}).code == cli::kUsage);
  CHECK(invoke({"fit-arima", "--input", csv, "--split", "1,2"}).code == cli::kUsage);
  CHECK(invoke({"fit-arima", "--input", csv, "--split", "200,200,200"}).code == cli::kUsage);
  CHECK(invoke({"fit-arima", "--input", csv, "--order", "1,x,0"}).code == cli::kUsage);
  CHECK(invoke({"compare", "--input", csv, "--refit", "lstm"}).code == cli::kUsage);
  CHECK(invoke({"compare", "--input", csv, "--batch", "0"}).code == cli::kUsage);
  CHECK(invoke({"synth", "--kind", "garch", "--out", dir.string()}).code == cli::kUsage);
  CHECK(invoke({"--help"}).code == cli::kOk);
}

TEST_CASE("ingestion errors exit with 3", "[cli]") {
  const auto dir = testing::scratch_dir("cli_ingest");
  CHECK(invoke({"analyze", "--input", (dir / "missing.csv").string()}).code == cli::kIngestion);
  {
    std::ofstream f(dir / "bad.csv");
    f << "date,nav\n2021-07-29,1.0\n2021-07-30,abc\n";
  }
  const auto r = invoke({"analyze", "--input", (dir / "bad.csv").string(), "--out", dir.string()});
  CHECK(r.code == cli::kIngestion);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("analysis errors exit with 4", "[cli]") {
  const auto dir = testing::scratch_dir("cli_analysis");
  {
    std::ofstream f(dir / "flat.csv");
    f << "date,nav\n";
    const auto s = TimeSeries::from_values(std::vector<double>(100, 1.0), kSyntheticStart);
    for (std::size_t i = 0; i < s.size(); ++i) f << format_iso_date(s.date(i)) << ",1.0\n";
  }
  const auto r = invoke({"analyze", "--input", (dir / "flat.csv").string(), "--out", dir.string()});
  INFO(r.err);
  CHECK(r.code == cli::kAnalysis);
}

TEST_CASE("training errors exit with 5 and still report ARIMA", "[cli]") {
  const auto dir = fixture("cli_training");
  const auto r = invoke(with_tiny({"compare", "--input", (dir / "nav.csv").string(), "--out",
                                   dir.string(), "--order", "1,1,0"},
                                  "250"));
  CHECK(r.code == cli::kTraining);
  const auto report = read_metrics_json(dir / "metrics.json");
  CHECK(report.rows[0].ok());
  CHECK_FALSE(report.rows[1].ok());
  CHECK(report.best == "arima");
}

TEST_CASE("compare writes the documented artifacts", "[cli]") {
  const auto dir = fixture("cli_compare");
  const auto r = invoke(with_tiny({"compare", "--input", (dir / "nav.csv").string(), "--out",
                                   dir.string(), "--order", "0,1,0", "--seed", "3"}));
  INFO(r.err);
  REQUIRE(r.code == cli::kOk);

  const auto text = testing::slurp(dir / "predictions.csv");
  CHECK(text.substr(0, text.find('\n')) == "date,actual,arima,lstm,hybrid");

  const auto doc = nlohmann::json::parse(testing::slurp(dir / "metrics.json"));
  CHECK(doc.at("segment") == "test");
  REQUIRE(doc.at("rows").size() == 3);
  for (const auto& row : doc.at("rows")) {
    for (const char* key : {"model", "mse", "mae", "rmse", "n"}) CHECK(row.contains(key));
    CHECK(row.at("n") == 62);
  }
  CHECK(doc.contains("best"));

  // ARIMA(0,1,0) forecasts are the previous value plus the mean training difference.
  const auto series = read_nav_csv(dir / "nav.csv");
  const auto model = read_arima(dir / "models" / "arima.txt");
  const auto rows = read_predictions_csv(dir / "predictions.csv");
  REQUIRE(rows.size() == 62);
  const std::size_t start = 300 - 62;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].date == series.date(start + i));
    CHECK(rows[i].actual == series.value(start + i));
    CHECK(std::abs(*rows[i].arima - (series.value(start + i - 1) + model.intercept)) < 1e-12);
  }
  CHECK(fs::exists(dir / "models" / "hybrid_lstm.txt"));
  CHECK(fs::exists(dir / "models" / "lstm.txt"));
}

TEST_CASE("analyze finds d = 1 for a random walk", "[cli]") {
  const auto dir = testing::scratch_dir("cli_analyze");
  REQUIRE(invoke({"synth", "--kind", "random-walk", "--n", "600", "--seed", "8", "--start", "10",
                  "--out", dir.string()}).code == cli::kOk);
  const auto r = invoke({"analyze", "--input", (dir / "random-walk.csv").string(), "--out",
                         dir.string(), "--max-lag", "12"});
  INFO(r.err);
  REQUIRE(r.code == cli::kOk);
  const auto adf = read_adf_json(dir / "adf.json");
  REQUIRE(adf.tests.size() == 2);
  CHECK_FALSE(adf.tests[0].is_stationary_5pct);
  CHECK(adf.tests[1].is_stationary_5pct);
  CHECK(adf.chosen_d == 1);
  CHECK(read_correlogram_csv(dir / "acf.csv").size() == 12);
  CHECK(read_correlogram_csv(dir / "pacf.csv").size() == 12);
  CHECK(read_diff_csv(dir / "diff.csv").size() == 599);
}

TEST_CASE("fit-arima and fit-hybrid write loadable models", "[cli]") {
  const auto dir = fixture("cli_fit");
  const auto csv = (dir / "nav.csv").string();
  REQUIRE(invoke({"fit-arima", "--input", csv, "--out", dir.string()}).code == cli::kOk);
  const auto search = nlohmann::json::parse(testing::slurp(dir / "order_search.json"));
  const auto model = read_arima(dir / "models" / "arima.txt");
  CHECK(search.at("chosen").at("p") == model.order.p);

  const auto r = invoke(with_tiny({"fit-hybrid", "--input", csv, "--out", dir.string(), "--order",
                                   "1,1,0"}));
  INFO(r.err);
  REQUIRE(r.code == cli::kOk);
  const auto hybrid = read_hybrid(dir / "models");
  CHECK(hybrid.window_m == 5);
  CHECK(hybrid.arima.order == ArimaOrder{1, 1, 0});
  CHECK(fs::exists(dir / "training.csv"));
}
