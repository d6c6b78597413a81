#pragma once

#include <cstdint>
#include <vector>

#include "qmele/innovation.hpp"
#include "qmele/model.hpp"

namespace qmele::model {

inline constexpr std::size_t kDefaultBurnIn = 500;

/// A simulated path with the innovations that drove it, burn-in included.
struct SimulatedPath {
  std::vector<double> y;    ///< burn_in + n observations
  std::vector<double> eta;  ///< matching innovations
  std::size_t burn_in = 0;

  /// Last n observations as a series.
  SeriesData series() const;
  std::vector<double> observed_eta() const;
  std::vector<double> prehistory() const;
};

/// Generates burn_in + n observations from the ARMA-GARCH recursions, starting
/// from zero presample, and keeps everything. Deterministic in the seed.
SimulatedPath simulate_path(const ParamVector& theta, const InnovationDist& dist, std::size_t n,
                            std::size_t burn_in, std::uint64_t seed);

/// The last n observations of simulate_path.
SeriesData simulate(const ParamVector& theta, const InnovationDist& dist, std::size_t n,
                    std::size_t burn_in, std::uint64_t seed);

}  // namespace qmele::model
