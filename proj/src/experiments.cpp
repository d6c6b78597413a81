#include "qmele/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qmele/io.hpp"
#include "qmele/simulate.hpp"

namespace qmele::experiments {

namespace pt = boost::property_tree;

namespace {

bool is_qmele(EstimatorKind kind) {
  return kind == EstimatorKind::SelfWeightedQMELE || kind == EstimatorKind::LocalQMELE;
}

bool wants(const ScenarioConfig& c, EstimatorKind kind) {
  return std::find(c.estimators.begin(), c.estimators.end(), kind) != c.estimators.end();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) {
      out.emplace_back();
      continue;
    }
    const auto b = item.find_last_not_of(" \t");
    out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

template <class T>
T get_field(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_child_optional(key);
  if (!node) return fallback;
  try {
    return node->get_value<T>();
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError("config field '" + key + "': cannot parse '" + node->data() + "'");
  }
}

std::size_t get_count(const pt::ptree& tree, const std::string& key, std::size_t fallback) {
  const auto v = get_field<long long>(tree, key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError("config field '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

double get_double(const pt::ptree& tree, const std::string& key, double fallback) {
  const auto node = tree.get_child_optional(key);
  if (!node) return fallback;
  double v = 0.0;
  std::istringstream ss(node->data());
  ss.imbue(std::locale::classic());
  if (!(ss >> v) || !(ss >> std::ws).eof() || !std::isfinite(v)) {
    throw ConfigError("config field '" + key + "': cannot parse '" + node->data() + "'");
  }
  return v;
}

template <class F>
auto wrap_field(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

void check_known_sections(const pt::ptree& tree) {
  static const std::vector<std::string> sections{"model", "innovation", "experiment", "weights", "fit"};
  for (const auto& [name, child] : tree) {
    if (std::find(sections.begin(), sections.end(), name) == sections.end()) {
      throw ConfigError("config section '" + name + "' is not recognized");
    }
  }
}

}  // namespace

double parameter_scale(const model::InnovationDist& dist, EstimatorKind kind) {
  const model::Moments m = dist.moments();
  return is_qmele(kind) ? m.abs_mean * m.abs_mean : m.second;
}

void ScenarioConfig::validate(bool require_theta) const {
  wrap_field("model", [&] {
    orders.validate(false);
    return 0;
  });
  const bool fit_only = !require_theta && theta0.dim() == 0;
  if (!fit_only) {
    if (theta0.dim() != orders.dim()) {
      throw ConfigError("config field 'model.theta' has " + std::to_string(theta0.dim()) +
                        " entries, orders need " + std::to_string(orders.dim()));
    }
    if (!theta0.is_valid()) throw ConfigError("config field 'model.theta' is outside the admissible region");
  }
  if (n < 10 * orders.dim()) throw ConfigError("config field 'experiment.n' is too small for the model orders");
  if (replications < 1) throw ConfigError("config field 'experiment.replications' must be at least 1");
  if (estimators.empty()) throw ConfigError("config field 'experiment.estimators' must not be empty");
  wrap_field("weights", [&] {
    weight_spec.validate();
    return 0;
  });
  if (optimizer.max_iter < 1) throw ConfigError("config field 'fit.max_iter' must be positive");
  if (optimizer.restarts < 0) throw ConfigError("config field 'fit.restarts' must be nonnegative");
}

ScenarioConfig parse_scenario(std::istream& in, bool require_theta) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  check_known_sections(tree);

  ScenarioConfig c;
  c.orders.p = get_count(tree, "model.p", 1);
  c.orders.q = get_count(tree, "model.q", 0);
  c.orders.r = get_count(tree, "model.r", 1);
  c.orders.s = get_count(tree, "model.s", 1);
  const auto theta_text = tree.get_optional<std::string>("model.theta");
  if (!theta_text && require_theta) throw ConfigError("config field 'model.theta' is required");
  std::vector<double> theta;
  for (const auto& item : split_list(theta_text.value_or(""))) {
    double v = 0.0;
    std::istringstream ss(item);
    ss.imbue(std::locale::classic());
    if (item.empty() || !(ss >> v) || !(ss >> std::ws).eof()) {
      throw ConfigError("config field 'model.theta': cannot parse '" + item + "'");
    }
    theta.push_back(v);
  }
  if (theta_text) {
    if (theta.size() != c.orders.dim()) {
      throw ConfigError("config field 'model.theta' has " + std::to_string(theta.size()) + " entries, orders need " +
                        std::to_string(c.orders.dim()));
    }
    c.theta0 = model::ParamVector(c.orders, theta);
  }

  const auto kind = wrap_field("innovation.kind", [&] {
    return model::parse_dist_kind(tree.get<std::string>("innovation.kind", "laplace"));
  });
  const auto standardization = wrap_field("innovation.standardization", [&] {
    return model::parse_standardization(tree.get<std::string>("innovation.standardization", "raw"));
  });
  if (kind == model::DistKind::NormalMixture) {
    const double eps = get_double(tree, "innovation.epsilon", 0.0);
    const double tau = get_double(tree, "innovation.tau", 1.0);
    c.dist = wrap_field("innovation.epsilon", [&] { return model::InnovationDist::mixture(eps, tau, standardization); });
  } else {
    c.dist = model::InnovationDist(kind, standardization);
  }

  c.n = get_count(tree, "experiment.n", c.n);
  c.replications = get_count(tree, "experiment.replications", c.replications);
  c.seed = get_field<std::uint64_t>(tree, "experiment.seed", c.seed);
  c.burn_in = get_count(tree, "experiment.burn_in", c.burn_in);
  if (const auto est = tree.get_optional<std::string>("experiment.estimators")) {
    c.estimators.clear();
    for (const auto& item : split_list(*est)) {
      const auto k = wrap_field("experiment.estimators", [&] { return estimation::parse_estimator_kind(item); });
      if (!wants(c, k)) c.estimators.push_back(k);
    }
  }

  c.weight_spec.variant = wrap_field("weights.variant", [&] {
    return tails::parse_weight_variant(tree.get<std::string>("weights.variant", "infinite_k9"));
  });
  c.weight_spec.c_quantile = get_double(tree, "weights.c_quantile", c.weight_spec.c_quantile);
  c.weight_spec.iota = get_double(tree, "weights.iota", c.weight_spec.iota);

  const std::string g0 = tree.get<std::string>("fit.g0", "known");
  if (g0 == "known") {
    c.g0_source = G0Source::Known;
  } else if (g0 == "kernel") {
    c.g0_source = G0Source::Kernel;
  } else {
    throw ConfigError("config field 'fit.g0': expected 'known' or 'kernel', got '" + g0 + "'");
  }
  c.optimizer.restarts = static_cast<int>(get_count(tree, "fit.restarts", static_cast<std::size_t>(c.optimizer.restarts)));
  c.optimizer.max_iter = static_cast<int>(get_count(tree, "fit.max_iter", static_cast<std::size_t>(c.optimizer.max_iter)));

  c.validate(require_theta);
  return c;
}

ScenarioConfig load_scenario(const std::string& path, bool require_theta) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  return parse_scenario(in, require_theta);
}

std::vector<ReplicationRecord> run_replication(const ScenarioConfig& config, std::size_t index) {
  const std::uint64_t seed = config.seed + index;
  std::vector<ReplicationRecord> out;
  const auto fail_all = [&](const std::string& why) {
    out.clear();
    for (auto k : config.estimators) out.push_back({index, seed, k, false, why, {}, {}});
    return out;
  };

  model::SeriesData data;
  try {
    data = model::simulate(config.theta0, config.dist, config.n, config.burn_in, seed);
  } catch (const NumericError& e) {
    return fail_all(std::string("simulation: ") + e.what());
  }

  estimation::FitConfig fc;
  fc.weight_spec = config.weight_spec;
  fc.optimizer = config.optimizer;
  fc.seed = seed;
  fc.g0_mode = config.g0_source == G0Source::Known
                   ? estimation::G0Mode::known(config.dist.abs_mean_one_moments().density_at_zero)
                   : estimation::G0Mode::kernel();

  const auto record = [&](EstimatorKind kind, const estimation::FitResult* fit, const std::string& why) {
    ReplicationRecord r{index, seed, kind, false, why, {}, {}};
    if (fit != nullptr && fit->converged) {
      const double scale = parameter_scale(config.dist, kind);
      const model::ParamVector& th = fit->theta_hat;
      r.estimate.assign(th.values().data(), th.values().data() + th.dim());
      r.std_error.assign(fit->std_errors.data(), fit->std_errors.data() + fit->std_errors.size());
      for (std::size_t i = th.delta_offset(); i < th.beta_index(1); ++i) {
        r.estimate[i] /= scale;
        r.std_error[i] /= scale;
      }
      r.ok = std::all_of(r.std_error.begin(), r.std_error.end(), [](double v) { return std::isfinite(v); });
      if (!r.ok) r.failure = "non-finite standard error";
    } else if (fit != nullptr && why.empty()) {
      r.failure = fit->failure.empty() ? "not converged" : fit->failure;
    }
    return r;
  };

  const auto run_pair = [&](estimation::Criterion criterion, EstimatorKind sw_kind, EstimatorKind local_kind) {
    if (!wants(config, sw_kind) && !wants(config, local_kind)) return;
    estimation::FitResult sw;
    std::string sw_error;
    try {
      sw = estimation::fit_self_weighted(data, config.orders, fc, criterion);
    } catch (const std::exception& e) {
      sw_error = e.what();
    }
    if (wants(config, sw_kind)) out.push_back(record(sw_kind, sw_error.empty() ? &sw : nullptr, sw_error));
    if (!wants(config, local_kind)) return;
    if (!sw_error.empty() || !sw.converged) {
      out.push_back(record(local_kind, nullptr, "initializer failed: " + (sw_error.empty() ? sw.failure : sw_error)));
      return;
    }
    try {
      const auto local = criterion == estimation::Criterion::QMELE ? estimation::local_qmele_step(sw, data, sw.g0)
                                                                   : estimation::local_qmle_step(sw, data);
      out.push_back(record(local_kind, &local, ""));
    } catch (const std::exception& e) {
      out.push_back(record(local_kind, nullptr, e.what()));
    }
  };
  run_pair(estimation::Criterion::QMELE, EstimatorKind::SelfWeightedQMELE, EstimatorKind::LocalQMELE);
  run_pair(estimation::Criterion::QMLE, EstimatorKind::SelfWeightedQMLE, EstimatorKind::LocalQMLE);

  // Report in the configured estimator order.
  std::vector<ReplicationRecord> ordered;
  for (auto k : config.estimators) {
    for (auto& r : out) {
      if (r.kind == k) ordered.push_back(std::move(r));
    }
  }
  return ordered;
}

const EstimatorSummary& McTable::row(EstimatorKind kind) const {
  for (const auto& r : rows) {
    if (r.kind == kind) return r;
  }
  throw DomainError("estimator " + estimation::to_string(kind) + " is not part of this table");
}

McTable aggregate(const ScenarioConfig& config, const std::vector<ReplicationRecord>& records) {
  McTable table;
  table.labels = config.theta0.labels();
  table.theta0.assign(config.theta0.values().data(), config.theta0.values().data() + config.theta0.dim());
  table.replications = config.replications;
  const std::size_t m = table.theta0.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (auto kind : config.estimators) {
    EstimatorSummary s;
    s.kind = kind;
    std::vector<double> sum(m, 0.0), se_sum(m, 0.0);
    for (const auto& r : records) {
      if (r.kind != kind) continue;
      if (!r.ok) {
        ++s.failures;
        continue;
      }
      ++s.successes;
      for (std::size_t i = 0; i < m; ++i) {
        sum[i] += r.estimate[i];
        se_sum[i] += r.std_error[i];
      }
    }
    const double k = static_cast<double>(s.successes);
    std::vector<double> mean(m, nan);
    s.bias.assign(m, nan);
    s.ad.assign(m, nan);
    s.sd.assign(m, nan);
    if (s.successes > 0) {
      for (std::size_t i = 0; i < m; ++i) {
        mean[i] = sum[i] / k;
        s.bias[i] = mean[i] - table.theta0[i];
        s.ad[i] = se_sum[i] / k;
      }
    }
    if (s.sd_defined()) {
      std::vector<double> ss(m, 0.0);
      for (const auto& r : records) {
        if (r.kind != kind || !r.ok) continue;
        for (std::size_t i = 0; i < m; ++i) ss[i] += (r.estimate[i] - mean[i]) * (r.estimate[i] - mean[i]);
      }
      for (std::size_t i = 0; i < m; ++i) s.sd[i] = std::sqrt(ss[i] / (k - 1.0));
    }
    table.rows.push_back(std::move(s));
  }
  return table;
}

McRun run_monte_carlo(const ScenarioConfig& config, unsigned threads) {
  config.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.replications));

  std::vector<std::vector<ReplicationRecord>> slots(config.replications);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config.replications) return;
      try {
        slots[i] = run_replication(config, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  McRun run;
  for (auto& slot : slots) {
    for (auto& r : slot) run.records.push_back(std::move(r));
  }
  run.table = aggregate(config, run.records);
  return run;
}

std::string mc_table_csv(const McTable& table) {
  std::string out = "estimator,parameter,theta0,bias,sd,ad,successes,failures\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
      out += estimation::to_string(row.kind) + "," + table.labels[i] + "," + io::format_number(table.theta0[i]) + "," +
             io::format_number(row.bias[i]) + "," + io::format_number(row.sd[i]) + "," +
             io::format_number(row.ad[i]) + "," + std::to_string(row.successes) + "," +
             std::to_string(row.failures) + "\n";
    }
  }
  return out;
}

std::string mc_table_text(const McTable& table) {
  std::ostringstream out;
  char buf[64];
  const auto cell = [&](double v) {
    if (std::isnan(v)) {
      std::snprintf(buf, sizeof buf, "%10s", "NA");
    } else {
      std::snprintf(buf, sizeof buf, "%10.4f", v);
    }
    return std::string(buf);
  };
  out << "replications: " << table.replications << "\n";
  for (const auto& row : table.rows) {
    out << "\n" << estimation::to_string(row.kind) << "  (successes " << row.successes << ", failures "
        << row.failures << ")\n";
    std::snprintf(buf, sizeof buf, "%-8s", "");
    out << buf;
    for (const auto& l : table.labels) {
      std::snprintf(buf, sizeof buf, "%10s", l.c_str());
      out << buf;
    }
    out << "\n";
    const auto line = [&](const char* name, const std::vector<double>& v) {
      std::snprintf(buf, sizeof buf, "%-8s", name);
      out << buf;
      for (double x : v) out << cell(x);
      out << "\n";
    };
    line("theta0", table.theta0);
    line("Bias", row.bias);
    line("SD", row.sd);
    line("AD", row.ad);
    if (!row.sd_defined()) out << "(SD undefined with fewer than two successful replications)\n";
  }
  return out.str();
}

std::string replications_csv(const std::vector<std::string>& labels, const std::vector<ReplicationRecord>& records) {
  std::string out = "replication,seed,estimator,status";
  for (const auto& l : labels) out += "," + l;
  for (const auto& l : labels) out += ",se_" + l;
  out += ",failure\n";
  for (const auto& r : records) {
    out += std::to_string(r.index) + "," + std::to_string(r.seed) + "," + estimation::to_string(r.kind) + "," +
           (r.ok ? "ok" : "failed");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      out += "," + (r.ok ? io::format_number(r.estimate[i]) : std::string("NA"));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      out += "," + (r.ok ? io::format_number(r.std_error[i]) : std::string("NA"));
    }
    std::string why = r.failure;
    std::replace(why.begin(), why.end(), ',', ';');
    std::replace(why.begin(), why.end(), '\n', ' ');
    out += "," + why + "\n";
  }
  return out;
}

}  // namespace qmele::experiments
