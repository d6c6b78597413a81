#include "qmele/simulate.hpp"

#include <cmath>
#include <random>

namespace qmele::model {

SeriesData SimulatedPath::series() const {
  return SeriesData(std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(burn_in), y.end()));
}

std::vector<double> SimulatedPath::observed_eta() const {
  return {eta.begin() + static_cast<std::ptrdiff_t>(burn_in), eta.end()};
}

std::vector<double> SimulatedPath::prehistory() const {
  return {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(burn_in)};
}

SimulatedPath simulate_path(const ParamVector& theta, const InnovationDist& dist, std::size_t n,
                            std::size_t burn_in, std::uint64_t seed) {
  theta.validate();
  if (n == 0) throw DomainError("simulation length must be at least 1");

  const ModelOrders& o = theta.orders();
  const std::size_t total = burn_in + n;
  const double h_presample = theta.alpha0() / (1.0 - theta.beta_sum());

  SimulatedPath path;
  path.burn_in = burn_in;
  path.y.resize(total);
  path.eta.resize(total);
  std::vector<double> eps(total), h(total);

  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < total; ++t) {
    double v = theta.alpha0();
    for (std::size_t i = 1; i <= o.r && i <= t; ++i) v += theta.alpha(i) * eps[t - i] * eps[t - i];
    for (std::size_t j = 1; j <= o.s; ++j) v += theta.beta(j) * (j <= t ? h[t - j] : h_presample);
    h[t] = v;

    const double eta = dist.sample(rng);
    path.eta[t] = eta;
    eps[t] = eta * std::sqrt(v);

    double yt = theta.mu() + eps[t];
    for (std::size_t i = 1; i <= o.p && i <= t; ++i) yt += theta.phi(i) * path.y[t - i];
    for (std::size_t i = 1; i <= o.q && i <= t; ++i) yt += theta.psi(i) * eps[t - i];
    path.y[t] = yt;

    if (!std::isfinite(yt) || !std::isfinite(v) || v > kVolatilityCeiling) {
      throw NumericOverflow("simulated path diverged", t + 1);
    }
  }
  return path;
}

SeriesData simulate(const ParamVector& theta, const InnovationDist& dist, std::size_t n, std::size_t burn_in,
                    std::uint64_t seed) {
  return simulate_path(theta, dist, n, burn_in, seed).series();
}

}  // namespace qmele::model
