#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "qmele/experiments.hpp"
#include "qmele/io.hpp"

using namespace qmele;
using namespace qmele::experiments;
using Catch::Approx;

namespace {

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

const char* kSmall = R"(
[model]
p = 1
q = 0
r = 1
s = 1
theta = 0.0, 0.5, 0.1, 0.18, 0.4
[innovation]
kind = laplace
standardization = raw
[experiment]
n = 300
replications = 6
seed = 77
estimators = sw_qmele, local_qmele, sw_qmle, local_qmle
)";

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qmele_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("scenario parsing") {
  const auto c = parse(kSmall);
  CHECK(c.orders == model::ModelOrders{1, 0, 1, 1});
  CHECK(c.theta0.values()[3] == 0.18);
  CHECK(c.n == 300);
  CHECK(c.replications == 6);
  CHECK(c.seed == 77);
  CHECK(c.estimators.size() == 4);
  CHECK(c.dist.kind() == model::DistKind::Laplace);
  CHECK(c.g0_source == G0Source::Known);

  const auto file = load_scenario(std::string(QMELE_CONFIG_DIR) + "/laplace_igarch.ini");
  CHECK(file.theta0.values()[3] == 0.3);
  CHECK(file.seed == 20240601);
  CHECK(file.replications == 200);
}

TEST_CASE("scenario errors name the field") {
  std::string s = kSmall;
  CHECK_THAT(error_of(s + "[bogus]\nx = 1\n"), Catch::Matchers::ContainsSubstring("bogus"));
  CHECK_THAT(error_of(std::string(kSmall).replace(s.find("n = 300"), 7, "n = abc")),
             Catch::Matchers::ContainsSubstring("experiment.n"));
  CHECK_THAT(error_of(std::string(kSmall).replace(s.find("replications = 6"), 16, "replications = 0")),
             Catch::Matchers::ContainsSubstring("experiment.replications"));
  CHECK_THAT(error_of(std::string(kSmall).replace(s.find("0.18, 0.4"), 9, "0.18")),
             Catch::Matchers::ContainsSubstring("model.theta"));
  CHECK_THAT(error_of(std::string(kSmall).replace(s.find("0.18, 0.4"), 9, "0.18, 1.4")),
             Catch::Matchers::ContainsSubstring("model.theta"));
  CHECK_THAT(error_of(std::string(kSmall).replace(s.find("sw_qmele,"), 9, "ols,")),
             Catch::Matchers::ContainsSubstring("experiment.estimators"));
  CHECK_THAT(error_of(std::string(kSmall).replace(s.find("laplace"), 7, "cauchy")),
             Catch::Matchers::ContainsSubstring("innovation.kind"));
  CHECK_THROWS_AS(load_scenario("/nonexistent/file.ini"), DataError);

  std::istringstream fit_only("[model]\np = 1\nq = 0\nr = 1\ns = 1\n");
  CHECK(parse_scenario(fit_only, false).theta0.dim() == 0);
}

TEST_CASE("CSV ingestion") {
  const auto dir = temp_dir("csv");
  const auto good = (dir / "good.csv").string();
  io::write_file(good, "date,price\n1,10.5\n2,11\n3,-2e-1\n");
  CHECK(io::read_csv_column(good, {true, "price"}) == std::vector<double>{10.5, 11.0, -0.2});
  CHECK(io::read_csv_column(good, {true, "1"}) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(io::read_csv_column(good, {true, "volume"}), DataError);

  const auto empty = (dir / "empty.csv").string();
  io::write_file(empty, "y\n");
  try {
    io::read_csv_column(empty, {});
    FAIL("no error");
  } catch (const DataError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("empty.csv"));
  }
  const auto bad = (dir / "bad.csv").string();
  io::write_file(bad, "y\n1\n2\nfoo\n");  // rows are file lines, header included
  try {
    io::read_csv_column(bad, {});
    FAIL("no error");
  } catch (const DataError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("row 4"));
  }
  CHECK_THROWS_AS(io::read_csv_column((dir / "missing.csv").string(), {}), DataError);

  CHECK(io::format_number(1.0 / 3.0) == "0.333333");
  CHECK(io::format_number(-0.0) == "0");
  CHECK(io::format_number(std::nan("")) == "NA");
}

TEST_CASE("aggregation equals a recomputation from the persisted replications") {
  auto cfg = parse(kSmall);
  const auto run = run_monte_carlo(cfg, 1);
  REQUIRE(run.records.size() == cfg.replications * cfg.estimators.size());
  const auto dir = temp_dir("agg");
  const auto path = (dir / "replications.csv").string();
  io::write_file(path, replications_csv(run.table.labels, run.records));

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  const auto header = split(line);
  const std::size_t m = run.table.labels.size();
  REQUIRE(header.size() == 5 + 2 * m);
  std::map<std::string, std::vector<std::vector<double>>> est, se;
  std::map<std::string, std::size_t> fails;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto cells = split(line);
    const std::string kind = cells[2];
    if (cells[3] != "ok") {
      ++fails[kind];
      continue;
    }
    std::vector<double> e, s;
    for (std::size_t j = 0; j < m; ++j) {
      e.push_back(std::stod(cells[4 + j]));
      s.push_back(std::stod(cells[4 + m + j]));
    }
    est[kind].push_back(e);
    se[kind].push_back(s);
  }
  CHECK(rows == run.records.size());

  for (const auto& row : run.table.rows) {
    const auto name = estimation::to_string(row.kind);
    const auto& e = est[name];
    CHECK(row.successes == e.size());
    CHECK(row.failures == fails[name]);
    CHECK(row.successes + row.failures == cfg.replications);
    for (std::size_t j = 0; j < m; ++j) {
      double mean = 0, ad = 0;
      for (std::size_t i = 0; i < e.size(); ++i) mean += e[i][j], ad += se[name][i][j];
      mean /= static_cast<double>(e.size());
      ad /= static_cast<double>(e.size());
      double ss = 0;
      for (const auto& v : e) ss += (v[j] - mean) * (v[j] - mean);
      const double sd = std::sqrt(ss / static_cast<double>(e.size() - 1));
      INFO(name << " " << run.table.labels[j]);
      // Values round-trip through 6 significant digits.
      CHECK(row.bias[j] == Approx(mean - run.table.theta0[j]).margin(5e-6));
      CHECK(row.sd[j] == Approx(sd).margin(5e-6));
      CHECK(row.ad[j] == Approx(ad).margin(5e-6));
      CHECK(row.sd[j] >= 0.0);
      CHECK(row.ad[j] >= 0.0);
    }
  }
}

TEST_CASE("serial and parallel runs give identical output") {
  auto cfg = parse(kSmall);
  cfg.replications = 5;
  cfg.estimators = {EstimatorKind::SelfWeightedQMELE, EstimatorKind::LocalQMELE};
  const auto serial = run_monte_carlo(cfg, 1);
  const auto parallel = run_monte_carlo(cfg, 3);
  CHECK(mc_table_csv(serial.table) == mc_table_csv(parallel.table));
  CHECK(mc_table_text(serial.table) == mc_table_text(parallel.table));
  CHECK(replications_csv(serial.table.labels, serial.records) ==
        replications_csv(parallel.table.labels, parallel.records));
  const auto again = run_monte_carlo(cfg, 2);
  CHECK(mc_table_csv(serial.table) == mc_table_csv(again.table));
}

TEST_CASE("replication records are reproducible one by one") {
  auto cfg = parse(kSmall);
  const auto run = run_monte_carlo(cfg, 1);
  const auto third = run_replication(cfg, 2);
  REQUIRE(third.size() == cfg.estimators.size());
  for (std::size_t k = 0; k < third.size(); ++k) {
    const auto& r = run.records[2 * cfg.estimators.size() + k];
    CHECK(r.seed == cfg.seed + 2);
    CHECK(third[k].kind == cfg.estimators[k]);
    CHECK(third[k].estimate == r.estimate);
  }
}

TEST_CASE("a single replication leaves SD undefined but reports bias") {
  auto cfg = parse(kSmall);
  cfg.replications = 1;
  cfg.estimators = {EstimatorKind::SelfWeightedQMELE};
  const auto run = run_monte_carlo(cfg, 1);
  const auto& row = run.table.row(EstimatorKind::SelfWeightedQMELE);
  REQUIRE(row.successes == 1);
  CHECK_FALSE(row.sd_defined());
  for (std::size_t j = 0; j < row.sd.size(); ++j) {
    CHECK(std::isnan(row.sd[j]));
    CHECK(std::isfinite(row.bias[j]));
  }
  CHECK_THAT(mc_table_text(run.table), Catch::Matchers::ContainsSubstring("SD undefined"));
  CHECK_THAT(mc_table_csv(run.table), Catch::Matchers::ContainsSubstring(",NA,"));
}

TEST_CASE("parameter scale follows the innovation moments") {
  const model::InnovationDist lap(model::DistKind::Laplace, model::Standardization::Raw);
  CHECK(parameter_scale(lap, EstimatorKind::SelfWeightedQMELE) == Approx(1.0));
  CHECK(parameter_scale(lap, EstimatorKind::LocalQMLE) == Approx(2.0));
  const model::InnovationDist nor(model::DistKind::Normal, model::Standardization::Raw);
  CHECK(parameter_scale(nor, EstimatorKind::LocalQMELE) == Approx(2.0 / std::numbers::pi));
  CHECK(parameter_scale(nor, EstimatorKind::SelfWeightedQMLE) == Approx(1.0));
}

TEST_CASE("Laplace design: local step improves on its initializer") {
  auto cfg = load_scenario(std::string(QMELE_CONFIG_DIR) + "/laplace.ini");
  cfg.estimators = {EstimatorKind::SelfWeightedQMELE, EstimatorKind::LocalQMELE};
  const auto run = run_monte_carlo(cfg, 0);
  const auto& sw = run.table.row(EstimatorKind::SelfWeightedQMELE);
  const auto& loc = run.table.row(EstimatorKind::LocalQMELE);
  CHECK(sw.failures == 0);
  CHECK(loc.failures == 0);
  for (std::size_t j = 0; j < 2; ++j) {  // mu and phi1
    const double mse_sw = sw.bias[j] * sw.bias[j] + sw.sd[j] * sw.sd[j];
    const double mse_loc = loc.bias[j] * loc.bias[j] + loc.sd[j] * loc.sd[j];
    INFO(run.table.labels[j]);
    CHECK(mse_loc <= mse_sw);
  }
  CHECK(sw.sd[1] == Approx(0.0317).epsilon(0.25));
}

TEST_CASE("normal design: Gaussian criterion is the more precise one") {
  auto cfg = load_scenario(std::string(QMELE_CONFIG_DIR) + "/normal.ini");
  cfg.estimators = {EstimatorKind::SelfWeightedQMELE, EstimatorKind::SelfWeightedQMLE};
  const auto run = run_monte_carlo(cfg, 0);
  const auto& qmele = run.table.row(EstimatorKind::SelfWeightedQMELE);
  const auto& qmle = run.table.row(EstimatorKind::SelfWeightedQMLE);
  CHECK(qmle.sd[1] < qmele.sd[1]);
}
