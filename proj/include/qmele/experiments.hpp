#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "qmele/estimation.hpp"
#include "qmele/innovation.hpp"
#include "qmele/model.hpp"
#include "qmele/simulate.hpp"
#include "qmele/weights.hpp"

namespace qmele::experiments {

using estimation::EstimatorKind;

/// G0 source in a scenario: the innovation law's own density at zero, or the kernel estimate.
enum class G0Source { Known, Kernel };

struct ScenarioConfig {
  model::ModelOrders orders{1, 0, 1, 1};
  model::ParamVector theta0;
  model::InnovationDist dist{model::DistKind::Laplace, model::Standardization::Raw};
  std::size_t n = 1000;
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  std::size_t burn_in = model::kDefaultBurnIn;
  std::vector<EstimatorKind> estimators{EstimatorKind::SelfWeightedQMELE, EstimatorKind::LocalQMELE};
  tails::WeightSpec weight_spec{};
  G0Source g0_source = G0Source::Known;
  estimation::OptimizerSettings optimizer{};

  /// Throws ConfigError naming the offending field. An empty theta0 is
  /// accepted only when `require_theta` is false.
  void validate(bool require_theta = true) const;
};

/// Parses the INI scenario format. Sections and keys:
///   [model]       p, q, r, s, theta (comma separated)
///   [innovation]  kind, standardization, epsilon, tau
///   [experiment]  n, replications, seed, burn_in, estimators (comma separated)
///   [weights]     variant, c_quantile, iota
///   [fit]         g0 (known|kernel), restarts, max_iter
/// With require_theta false a missing model.theta leaves theta0 empty (fit-only use).
ScenarioConfig parse_scenario(std::istream& in, bool require_theta = true);
ScenarioConfig load_scenario(const std::string& path, bool require_theta = true);

/// One estimator's outcome on one replication, in the simulation parametrization.
struct ReplicationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  EstimatorKind kind = EstimatorKind::SelfWeightedQMELE;
  bool ok = false;
  std::string failure;
  std::vector<double> estimate;
  std::vector<double> std_error;
};

/// Simulates path `index` with seed config.seed + index and fits every requested estimator.
std::vector<ReplicationRecord> run_replication(const ScenarioConfig& config, std::size_t index);

struct EstimatorSummary {
  EstimatorKind kind = EstimatorKind::SelfWeightedQMELE;
  std::vector<double> bias;  ///< mean(theta_hat) - theta0
  std::vector<double> sd;    ///< sample SD (divisor k-1); NaN when undefined
  std::vector<double> ad;    ///< mean estimated standard error
  std::size_t successes = 0;
  std::size_t failures = 0;
  bool sd_defined() const noexcept { return successes >= 2; }
};

struct McTable {
  std::vector<std::string> labels;
  std::vector<double> theta0;
  std::size_t replications = 0;
  std::vector<EstimatorSummary> rows;  ///< in config.estimators order

  const EstimatorSummary& row(EstimatorKind kind) const;
};

struct McRun {
  McTable table;
  std::vector<ReplicationRecord> records;  ///< replication-major, estimator order within
};

/// Folds records in replication-index order.
McTable aggregate(const ScenarioConfig& config, const std::vector<ReplicationRecord>& records);

/// Runs all replications on `threads` workers (0 = hardware concurrency).
/// The result does not depend on the thread count.
McRun run_monte_carlo(const ScenarioConfig& config, unsigned threads);

std::string mc_table_csv(const McTable& table);
std::string mc_table_text(const McTable& table);
std::string replications_csv(const std::vector<std::string>& labels, const std::vector<ReplicationRecord>& records);

/// Moments of the law used to convert fitted parameters back to the
/// simulation scale: (E|eta|)^2 for QMELE kinds, E eta^2 for QMLE kinds.
double parameter_scale(const model::InnovationDist& dist, EstimatorKind kind);

}  // namespace qmele::experiments
