#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmele/diagnostics.hpp"
#include "qmele/errors.hpp"
#include "qmele/estimation.hpp"
#include "qmele/experiments.hpp"
#include "qmele/io.hpp"
#include "qmele/report.hpp"
#include "qmele/simulate.hpp"
#include "qmele/tails.hpp"

namespace {

using namespace qmele;

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream cell(item);
    cell.imbue(std::locale::classic());
    double v = 0.0;
    if (!(cell >> v) || !(cell >> std::ws).eof()) throw ConfigError(what + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

model::ModelOrders parse_orders(const std::string& text) {
  const auto v = parse_list(text, "--orders");
  if (v.size() != 4) throw ConfigError("--orders needs four entries p,q,r,s");
  model::ModelOrders o;
  std::size_t* fields[] = {&o.p, &o.q, &o.r, &o.s};
  for (std::size_t i = 0; i < 4; ++i) {
    if (v[i] < 0 || v[i] != std::floor(v[i])) throw ConfigError("--orders entries must be nonnegative integers");
    *fields[i] = static_cast<std::size_t>(v[i]);
  }
  return o;
}

model::InnovationDist make_dist(const std::string& kind, const std::string& standardization, double epsilon,
                                double tau) {
  const auto k = model::parse_dist_kind(kind);
  const auto s = model::parse_standardization(standardization);
  if (k == model::DistKind::NormalMixture) return model::InnovationDist::mixture(epsilon, tau, s);
  return model::InnovationDist(k, s);
}

std::vector<double> read_series(const std::string& path, bool no_header, const std::string& column) {
  io::CsvOptions opt;
  opt.header = !no_header;
  opt.column = column;
  return io::read_csv_column(path, opt);
}

std::string acf_csv(const diagnostics::AcfReport& acf, const diagnostics::AcfReport& pacf) {
  std::string out = "lag,acf,pacf,band\n";
  for (std::size_t i = 0; i < acf.lags.size(); ++i) {
    out += std::to_string(acf.lags[i]) + "," + io::format_number(acf.values[i]) + "," +
           io::format_number(pacf.values[i]) + "," + io::format_number(acf.band) + "\n";
  }
  return out;
}

std::string hill_csv(const tails::TailReport& report) {
  std::string out = "k,alpha_hat\n";
  for (std::size_t i = 0; i < report.k_values.size(); ++i) {
    out += std::to_string(report.k_values[i]) + "," + io::format_number(report.alpha_hat[i]) + "\n";
  }
  return out;
}

std::size_t clamp_lag(std::size_t requested, std::size_t n) { return std::min(requested, n - 1); }

// ---- fit --------------------------------------------------------------------

struct FitOptions {
  std::string input;
  bool no_header = false;
  std::string column;
  bool log_returns = false;
  std::string orders = "1,0,1,1";
  std::string config;
  std::string weights = "infinite_k9";
  double iota = 0.5;
  double c_quantile = 0.9;
  double g0 = 0.0;
  int restarts = 5;
  int max_iter = 3000;
  std::size_t acf_lags = 40;
  std::size_t hill_kmax = 0;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

int run_fit(const FitOptions& o, CLI::App& app) {
  model::ModelOrders orders = parse_orders(o.orders);
  estimation::FitConfig fc;
  fc.weight_spec.variant = tails::parse_weight_variant(o.weights);
  fc.weight_spec.iota = o.iota;
  fc.weight_spec.c_quantile = o.c_quantile;
  fc.optimizer.restarts = o.restarts;
  fc.optimizer.max_iter = o.max_iter;
  if (!o.config.empty()) {
    const auto sc = experiments::load_scenario(o.config, false);
    if (app.count("--orders") == 0) orders = sc.orders;
    if (app.count("--weights") == 0) fc.weight_spec.variant = sc.weight_spec.variant;
    if (app.count("--iota") == 0) fc.weight_spec.iota = sc.weight_spec.iota;
    if (app.count("--c-quantile") == 0) fc.weight_spec.c_quantile = sc.weight_spec.c_quantile;
    if (app.count("--restarts") == 0) fc.optimizer.restarts = sc.optimizer.restarts;
    if (app.count("--max-iter") == 0) fc.optimizer.max_iter = sc.optimizer.max_iter;
    if (app.count("--g0") == 0 && sc.g0_source == experiments::G0Source::Known) {
      fc.g0_mode = estimation::G0Mode::known(sc.dist.abs_mean_one_moments().density_at_zero);
    }
  }
  if (app.count("--g0") > 0) fc.g0_mode = estimation::G0Mode::known(o.g0);
  fc.seed = o.seed;

  std::vector<double> raw = read_series(o.input, o.no_header, o.column);
  const model::SeriesData data = o.log_returns ? model::log_return_transform(raw) : model::SeriesData(raw);

  const auto sw = estimation::fit_self_weighted(data, orders, fc, estimation::Criterion::QMELE);
  if (!sw.converged) throw NumericError("self-weighted fit failed: " + sw.failure);
  const auto local = estimation::local_qmele_step(sw, data, sw.g0);

  const std::vector<report::FitSection> sections{{"Self-weighted QMELE", &sw}, {"Local QMELE", &local}};
  io::write_file(join_path(o.out_dir, "fit_report.txt"), report::fit_text(sections, data.size()));
  io::write_file(join_path(o.out_dir, "fit_report.json"), report::fit_json(sections, data.size()).dump(2) + "\n");

  const auto f = model::filter(local.theta_hat, data, false);
  const model::Vector eta = f.eta();
  std::vector<double> eta_v(eta.data(), eta.data() + eta.size()), eta_sq(eta_v.size());
  std::string resid = "t,y,eps,h,eta\n";
  for (std::size_t t = 0; t < eta_v.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    eta_sq[t] = eta_v[t] * eta_v[t];
    resid += std::to_string(t + 1) + "," + io::format_number(data[t]) + "," + io::format_number(f.eps[i]) + "," +
             io::format_number(f.h[i]) + "," + io::format_number(eta_v[t]) + "\n";
  }
  io::write_file(join_path(o.out_dir, "residuals.csv"), resid);

  const std::size_t lags = clamp_lag(o.acf_lags, eta_v.size());
  io::write_file(join_path(o.out_dir, "acf_eta.csv"),
                 acf_csv(diagnostics::acf(eta_v, lags), diagnostics::pacf(eta_v, lags)));
  io::write_file(join_path(o.out_dir, "acf_eta2.csv"),
                 acf_csv(diagnostics::acf(eta_sq, lags), diagnostics::pacf(eta_sq, lags)));

  const std::size_t kmax = o.hill_kmax > 0 ? o.hill_kmax : std::max<std::size_t>(1, eta_sq.size() / 5);
  io::write_file(join_path(o.out_dir, "hill_eta2.csv"), hill_csv(tails::hill_sweep(eta_sq, 1, kmax)));

  std::cout << report::fit_text(sections, data.size());
  return kOk;
}

// ---- simulate -----------------------------------------------------------------

struct SimulateOptions {
  std::string config;
  std::string orders = "1,0,1,1";
  std::string theta;
  std::string dist = "laplace";
  std::string standardization = "raw";
  double epsilon = 0.0;
  double tau = 1.0;
  std::size_t n = 1000;
  std::size_t burn_in = model::kDefaultBurnIn;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string output = "simulated.csv";
};

int run_simulate(const SimulateOptions& o, CLI::App& app) {
  model::ParamVector theta;
  model::InnovationDist dist;
  std::size_t n = o.n, burn_in = o.burn_in;
  std::uint64_t seed = o.seed;
  if (!o.config.empty()) {
    const auto sc = experiments::load_scenario(o.config);
    theta = sc.theta0;
    dist = sc.dist;
    if (app.count("--n") == 0) n = sc.n;
    if (app.count("--burn-in") == 0) burn_in = sc.burn_in;
    if (app.count("--seed") == 0) seed = sc.seed;
  } else {
    if (o.theta.empty()) throw ConfigError("--theta or --config is required");
    const auto orders = parse_orders(o.orders);
    const auto values = parse_list(o.theta, "--theta");
    if (values.size() != orders.dim()) {
      throw ConfigError("--theta has " + std::to_string(values.size()) + " entries, orders need " +
                        std::to_string(orders.dim()));
    }
    theta = model::ParamVector(orders, values);
    dist = make_dist(o.dist, o.standardization, o.epsilon, o.tau);
  }
  model::SeriesData data;
  try {
    data = model::simulate(theta, dist, n, burn_in, seed);
  } catch (const NumericOverflow& e) {
    std::ostringstream echo;
    echo << e.what() << " [orders " << theta.orders().to_string() << ", theta";
    for (Eigen::Index i = 0; i < theta.values().size(); ++i) echo << (i ? "," : " ") << theta.values()[i];
    echo << ", " << dist.name() << ", n " << n << ", burn_in " << burn_in << ", seed " << seed << "]";
    throw NumericOverflow(echo.str(), e.time_index());
  }
  const auto path = join_path(o.out_dir, o.output);
  io::write_file(path, io::column_csv("y", data.values()));
  std::cout << "wrote " << data.size() << " observations to " << path << "\n";
  return kOk;
}

// ---- mc-table -------------------------------------------------------------------

struct McOptions {
  std::string config;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out_dir = ".";
};

int run_mc(const McOptions& o, CLI::App& app) {
  if (o.config.empty()) throw ConfigError("--config is required");
  auto sc = experiments::load_scenario(o.config);
  if (app.count("--replications") > 0) sc.replications = o.replications;
  if (app.count("--seed") > 0) sc.seed = o.seed;
  sc.validate();
  const auto run = experiments::run_monte_carlo(sc, o.threads);
  io::write_file(join_path(o.out_dir, "mc_table.csv"), experiments::mc_table_csv(run.table));
  io::write_file(join_path(o.out_dir, "mc_table.txt"), experiments::mc_table_text(run.table));
  io::write_file(join_path(o.out_dir, "replications.csv"), experiments::replications_csv(run.table.labels, run.records));
  std::cout << experiments::mc_table_text(run.table);
  return kOk;
}

// ---- hill / acf -------------------------------------------------------------------

struct SeriesOptions {
  std::string input;
  bool no_header = false;
  std::string column;
  std::size_t k_min = 1;
  std::size_t k_max = 0;
  std::size_t max_lag = 40;
  bool square = false;
  std::string out_dir = ".";
};

std::vector<double> load_transformed(const SeriesOptions& o) {
  auto v = read_series(o.input, o.no_header, o.column);
  if (o.square) {
    for (double& x : v) x *= x;
  }
  return v;
}

int run_hill(const SeriesOptions& o) {
  const auto v = load_transformed(o);
  if (o.k_max >= v.size()) {
    throw DomainError("k_max " + std::to_string(o.k_max) + " must be below the sample size " +
                      std::to_string(v.size()));
  }
  const auto report = tails::hill_sweep(v, o.k_min, o.k_max);
  io::write_file(join_path(o.out_dir, "hill.csv"), hill_csv(report));
  if (report.dropped_nonpositive > 0) {
    std::cout << "dropped " << report.dropped_nonpositive << " nonpositive values\n";
  }
  return kOk;
}

int run_acf(const SeriesOptions& o) {
  const auto v = load_transformed(o);
  io::write_file(join_path(o.out_dir, "acf.csv"),
                 acf_csv(diagnostics::acf(v, o.max_lag), diagnostics::pacf(v, o.max_lag)));
  return kOk;
}

// ---- region-scan ---------------------------------------------------------------------

struct RegionOptions {
  std::string criterion = "moment";
  double iota = 1.0;
  std::string dist = "laplace";
  std::string standardization = "raw";
  double epsilon = 0.0;
  double tau = 1.0;
  double alpha_max = 1.0;
  double beta_max = 1.0;
  std::size_t steps = 51;
  std::size_t draws = tails::kDefaultMcDraws;
  std::uint64_t seed = tails::kDefaultMcSeed;
  std::string out_dir = ".";
};

std::vector<double> grid(double upper, std::size_t steps) {
  if (steps < 2) throw ConfigError("--steps must be at least 2");
  if (!(upper > 0.0)) throw ConfigError("grid upper bound must be positive");
  std::vector<double> g(steps);
  for (std::size_t i = 0; i < steps; ++i) g[i] = upper * static_cast<double>(i) / static_cast<double>(steps - 1);
  return g;
}

int run_region(const RegionOptions& o) {
  tails::RegionCriterion criterion;
  if (o.criterion == "moment") {
    criterion = tails::RegionCriterion::Moment;
  } else if (o.criterion == "stationarity") {
    criterion = tails::RegionCriterion::Stationarity;
  } else {
    throw ConfigError("--criterion must be 'moment' or 'stationarity'");
  }
  const auto dist = make_dist(o.dist, o.standardization, o.epsilon, o.tau);
  const auto cells = tails::region_scan(grid(o.alpha_max, o.steps), grid(o.beta_max, o.steps), criterion, o.iota,
                                        dist, o.draws, o.seed);
  std::string out = "alpha1,beta1,holds\n";
  for (const auto& c : cells) {
    out += io::format_number(c.alpha1) + "," + io::format_number(c.beta1) + "," + (c.holds ? "1" : "0") + "\n";
  }
  io::write_file(join_path(o.out_dir, "region.csv"), out);
  return kOk;
}

// ---- efficiency -------------------------------------------------------------------------

struct EfficiencyOptions {
  std::string dist = "laplace";
  double epsilon = 0.0;
  double tau = 1.0;
  std::string out_dir;
};

int run_efficiency(const EfficiencyOptions& o) {
  const auto dist = make_dist(o.dist, "abs_mean_one", o.epsilon, o.tau);
  const auto r = diagnostics::efficiency_compare(dist);
  std::string csv = "distribution,eta2,eta4,kappa1,kappa2,preferred\n";
  csv += dist.name() + "," + io::format_number(r.eta2) + "," + io::format_number(r.eta4) + "," +
         io::format_number(r.kappa1) + "," + io::format_number(r.kappa2) + "," + diagnostics::to_string(r.preferred) +
         "\n";
  std::cout << csv;
  if (!o.out_dir.empty()) io::write_file(join_path(o.out_dir, "efficiency.csv"), csv);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-weighted and local QMELE for ARMA-GARCH models"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit an ARMA-GARCH model to a CSV series");
  fit_cmd->add_option("input", fit.input, "input CSV")->required();
  fit_cmd->add_flag("--no-header", fit.no_header, "first row holds data");
  fit_cmd->add_option("--column", fit.column, "column name or 1-based index");
  fit_cmd->add_flag("--log-returns-x100", fit.log_returns, "treat input as prices, fit 100 x log returns");
  fit_cmd->add_option("--orders", fit.orders, "p,q,r,s")->capture_default_str();
  fit_cmd->add_option("--config", fit.config, "INI file with [model] orders, [weights] and [fit]");
  fit_cmd->add_option("--weights", fit.weights, "infinite_k9 | finite_lag | infinite_iota")->capture_default_str();
  fit_cmd->add_option("--iota", fit.iota, "moment index for infinite_iota weights")->capture_default_str();
  fit_cmd->add_option("--c-quantile", fit.c_quantile, "weight threshold quantile of |y|")->capture_default_str();
  fit_cmd->add_option("--g0", fit.g0, "known innovation density at zero (default: kernel estimate)");
  fit_cmd->add_option("--restarts", fit.restarts)->capture_default_str();
  fit_cmd->add_option("--max-iter", fit.max_iter)->capture_default_str();
  fit_cmd->add_option("--acf-lags", fit.acf_lags)->capture_default_str();
  fit_cmd->add_option("--hill-kmax", fit.hill_kmax, "largest k in the Hill sweep (default n/5)");
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("--out-dir", fit.out_dir)->capture_default_str();

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "write a simulated ARMA-GARCH path");
  sim_cmd->add_option("--config", sim.config, "scenario INI file");
  sim_cmd->add_option("--orders", sim.orders, "p,q,r,s")->capture_default_str();
  sim_cmd->add_option("--theta", sim.theta, "comma-separated parameter vector");
  sim_cmd->add_option("--dist", sim.dist, "laplace | normal | t3 | mixture")->capture_default_str();
  sim_cmd->add_option("--standardization", sim.standardization, "raw | abs_mean_one | var_one")->capture_default_str();
  sim_cmd->add_option("--epsilon", sim.epsilon, "mixture weight");
  sim_cmd->add_option("--tau", sim.tau, "mixture scale");
  sim_cmd->add_option("--n", sim.n)->capture_default_str();
  sim_cmd->add_option("--burn-in", sim.burn_in)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir)->capture_default_str();
  sim_cmd->add_option("--output", sim.output, "file name inside --out-dir")->capture_default_str();

  McOptions mc;
  auto* mc_cmd = app.add_subcommand("mc-table", "Monte Carlo bias / SD / AD table for a scenario");
  mc_cmd->add_option("--config", mc.config, "scenario INI file")->required();
  mc_cmd->add_option("--replications", mc.replications, "override experiment.replications");
  mc_cmd->add_option("--seed", mc.seed, "override experiment.seed");
  mc_cmd->add_option("--threads", mc.threads, "worker threads (0 = all cores)")->capture_default_str();
  mc_cmd->add_option("--out-dir", mc.out_dir)->capture_default_str();

  SeriesOptions hill;
  auto* hill_cmd = app.add_subcommand("hill", "Hill tail-index sweep");
  hill_cmd->add_option("input", hill.input, "input CSV")->required();
  hill_cmd->add_flag("--no-header", hill.no_header);
  hill_cmd->add_option("--column", hill.column);
  hill_cmd->add_flag("--square", hill.square, "use squared values");
  hill_cmd->add_option("--k-min", hill.k_min)->capture_default_str();
  hill_cmd->add_option("--k-max", hill.k_max)->required();
  hill_cmd->add_option("--out-dir", hill.out_dir)->capture_default_str();

  SeriesOptions acf;
  auto* acf_cmd = app.add_subcommand("acf", "sample ACF and PACF");
  acf_cmd->add_option("input", acf.input, "input CSV")->required();
  acf_cmd->add_flag("--no-header", acf.no_header);
  acf_cmd->add_option("--column", acf.column);
  acf_cmd->add_flag("--square", acf.square, "use squared values");
  acf_cmd->add_option("--max-lag", acf.max_lag)->capture_default_str();
  acf_cmd->add_option("--out-dir", acf.out_dir)->capture_default_str();

  RegionOptions region;
  auto* region_cmd = app.add_subcommand("region-scan", "moment or stationarity region over an (alpha1, beta1) grid");
  region_cmd->add_option("--criterion", region.criterion, "moment | stationarity")->capture_default_str();
  region_cmd->add_option("--iota", region.iota)->capture_default_str();
  region_cmd->add_option("--dist", region.dist)->capture_default_str();
  region_cmd->add_option("--standardization", region.standardization)->capture_default_str();
  region_cmd->add_option("--epsilon", region.epsilon);
  region_cmd->add_option("--tau", region.tau);
  region_cmd->add_option("--alpha-max", region.alpha_max)->capture_default_str();
  region_cmd->add_option("--beta-max", region.beta_max)->capture_default_str();
  region_cmd->add_option("--steps", region.steps, "grid points per axis")->capture_default_str();
  region_cmd->add_option("--draws", region.draws)->capture_default_str();
  region_cmd->add_option("--seed", region.seed)->capture_default_str();
  region_cmd->add_option("--out-dir", region.out_dir)->capture_default_str();

  EfficiencyOptions eff;
  auto* eff_cmd = app.add_subcommand("efficiency", "asymptotic efficiency factors of QMLE and QMELE");
  eff_cmd->add_option("--dist", eff.dist, "laplace | normal | t3 | mixture")->capture_default_str();
  eff_cmd->add_option("--epsilon", eff.epsilon, "mixture weight");
  eff_cmd->add_option("--tau", eff.tau, "mixture scale");
  eff_cmd->add_option("--out-dir", eff.out_dir, "also write efficiency.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*fit_cmd) return run_fit(fit, *fit_cmd);
    if (*sim_cmd) return run_simulate(sim, *sim_cmd);
    if (*mc_cmd) return run_mc(mc, *mc_cmd);
    if (*hill_cmd) return run_hill(hill);
    if (*acf_cmd) return run_acf(acf);
    if (*region_cmd) return run_region(region);
    if (*eff_cmd) return run_efficiency(eff);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
