#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qmele/innovation.hpp"

namespace qmele::tails {

/// Hill tail-index estimate from the k largest of `values`:
///   alpha(k) = k / sum_{j=1..k} (log v_(n-j+1) - log v_(n-k)),
/// with v_(1) <= ... <= v_(n) the ascending order statistics of the positive
/// entries. Nonpositive entries are dropped first.
double hill_estimator(std::span<const double> values, std::size_t k);

struct TailReport {
  std::vector<std::size_t> k_values;
  std::vector<double> alpha_hat;
  std::size_t dropped_nonpositive = 0;
};

/// Hill estimates for k = k_min..k_max.
TailReport hill_sweep(std::span<const double> values, std::size_t k_min, std::size_t k_max);

inline constexpr std::size_t kDefaultMcDraws = 1'000'000;
inline constexpr std::uint64_t kDefaultMcSeed = 20100806;

struct StationarityDecision {
  double lyapunov_estimate;  ///< E log(alpha1 eta^2 + beta1)
  double standard_error;     ///< Monte Carlo standard error; 0 when deterministic
  bool is_stationary;        ///< estimate significantly below 0 (3 standard errors)
};

/// GARCH(1,1) strict stationarity: E log(alpha1 eta^2 + beta1) < 0.
/// Throws UnsupportedOrder unless exactly one ARCH and one GARCH coefficient is given.
StationarityDecision strict_stationarity_check(std::span<const double> alpha, std::span<const double> beta,
                                               const model::InnovationDist& dist,
                                               std::size_t mc_draws = kDefaultMcDraws,
                                               std::uint64_t seed = kDefaultMcSeed);

struct MomentDecision {
  double moment_estimate;  ///< E (alpha1 eta^2 + beta1)^iota
  double standard_error;
  bool holds;  ///< estimate significantly below 1 (3 standard errors)
};

/// GARCH(1,1) fractional-moment condition E|eps_t|^{2 iota} < infinity,
/// checked as E[(alpha1 eta^2 + beta1)^iota] < 1.
MomentDecision moment_condition_check(double alpha1, double beta1, double iota, const model::InnovationDist& dist,
                                      std::size_t mc_draws = kDefaultMcDraws, std::uint64_t seed = kDefaultMcSeed);

/// Variants over a fixed set of eta^2 draws so a grid scan shares random numbers.
StationarityDecision stationarity_from_draws(double alpha1, double beta1, std::span<const double> eta_sq);
MomentDecision moment_from_draws(double alpha1, double beta1, double iota, std::span<const double> eta_sq);

enum class RegionCriterion { Moment, Stationarity };

struct RegionCell {
  double alpha1;
  double beta1;
  bool holds;
};

/// Evaluates the chosen criterion over the Cartesian grid alpha_grid x beta_grid
/// using one shared set of draws.
std::vector<RegionCell> region_scan(std::span<const double> alpha_grid, std::span<const double> beta_grid,
                                    RegionCriterion criterion, double iota, const model::InnovationDist& dist,
                                    std::size_t mc_draws, std::uint64_t seed);

}  // namespace qmele::tails
