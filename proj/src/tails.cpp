#include "qmele/tails.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qmele/errors.hpp"

namespace qmele::tails {

namespace {

std::vector<double> positive_sorted(std::span<const double> values, std::size_t& dropped) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (x > 0.0) v.push_back(x);
  }
  dropped = values.size() - v.size();
  std::sort(v.begin(), v.end());
  return v;
}

double hill_sorted(const std::vector<double>& v, std::size_t k) {
  const std::size_t n = v.size();
  if (k < 1) throw DomainError("Hill estimator needs k >= 1");
  if (k >= n) {
    throw DomainError("Hill estimator needs k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  // 1-based order statistics v_(i) live at v[i-1].
  const double anchor = std::log(v[n - k - 1]);
  double sum = 0.0;
  for (std::size_t j = 1; j <= k; ++j) sum += std::log(v[n - j]) - anchor;
  if (!(sum > 0.0)) throw DegenerateSample("Hill estimator: the top order statistics are all equal");
  return static_cast<double>(k) / sum;
}

// Mean and standard error of f over the draws; single pass in fixed order.
template <typename F>
std::pair<double, double> mc_mean(std::span<const double> eta_sq, F f) {
  double mean = 0.0, m2 = 0.0;
  std::size_t count = 0;
  for (double e2 : eta_sq) {
    const double x = f(e2);
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  const double var = count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(count))};
}

std::vector<double> squared_draws(const model::InnovationDist& dist, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw DomainError("Monte Carlo checks need at least one draw");
  auto draws = dist.sample(count, seed);
  for (auto& x : draws) x *= x;
  return draws;
}

}  // namespace

double hill_estimator(std::span<const double> values, std::size_t k) {
  std::size_t dropped = 0;
  return hill_sorted(positive_sorted(values, dropped), k);
}

TailReport hill_sweep(std::span<const double> values, std::size_t k_min, std::size_t k_max) {
  if (k_min < 1 || k_max < k_min) throw DomainError("Hill sweep needs 1 <= k_min <= k_max");
  TailReport report;
  const auto v = positive_sorted(values, report.dropped_nonpositive);
  if (k_max >= v.size()) {
    throw DomainError("Hill sweep k_max=" + std::to_string(k_max) + " must be below the number of positive values (" +
                      std::to_string(v.size()) + ")");
  }
  for (std::size_t k = k_min; k <= k_max; ++k) {
    report.k_values.push_back(k);
    report.alpha_hat.push_back(hill_sorted(v, k));
  }
  return report;
}

StationarityDecision stationarity_from_draws(double alpha1, double beta1, std::span<const double> eta_sq) {
  if (alpha1 < 0.0 || beta1 < 0.0) throw DomainError("GARCH(1,1) coefficients must be nonnegative");
  if (alpha1 == 0.0) {
    const double v = std::log(beta1);
    return {v, 0.0, v < 0.0};
  }
  auto [mean, se] = mc_mean(eta_sq, [&](double e2) { return std::log(alpha1 * e2 + beta1); });
  return {mean, se, mean + 3.0 * se < 0.0};
}

MomentDecision moment_from_draws(double alpha1, double beta1, double iota, std::span<const double> eta_sq) {
  if (alpha1 < 0.0 || beta1 < 0.0) throw DomainError("GARCH(1,1) coefficients must be nonnegative");
  if (!(iota > 0.0)) throw DomainError("moment order iota must be positive");
  if (alpha1 == 0.0) {
    const double v = std::pow(beta1, iota);
    return {v, 0.0, v < 1.0};
  }
  auto [mean, se] = mc_mean(eta_sq, [&](double e2) { return std::pow(alpha1 * e2 + beta1, iota); });
  return {mean, se, mean + 3.0 * se < 1.0};
}

StationarityDecision strict_stationarity_check(std::span<const double> alpha, std::span<const double> beta,
                                               const model::InnovationDist& dist, std::size_t mc_draws,
                                               std::uint64_t seed) {
  if (alpha.size() != 1 || beta.size() != 1) {
    throw UnsupportedOrder("strict stationarity criterion is implemented for GARCH(1,1) only");
  }
  if (alpha[0] == 0.0) return stationarity_from_draws(0.0, beta[0], {});
  return stationarity_from_draws(alpha[0], beta[0], squared_draws(dist, mc_draws, seed));
}

MomentDecision moment_condition_check(double alpha1, double beta1, double iota, const model::InnovationDist& dist,
                                      std::size_t mc_draws, std::uint64_t seed) {
  if (alpha1 == 0.0) return moment_from_draws(0.0, beta1, iota, {});
  return moment_from_draws(alpha1, beta1, iota, squared_draws(dist, mc_draws, seed));
}

std::vector<RegionCell> region_scan(std::span<const double> alpha_grid, std::span<const double> beta_grid,
                                    RegionCriterion criterion, double iota, const model::InnovationDist& dist,
                                    std::size_t mc_draws, std::uint64_t seed) {
  const auto eta_sq = squared_draws(dist, mc_draws, seed);
  std::vector<RegionCell> cells;
  cells.reserve(alpha_grid.size() * beta_grid.size());
  for (double a : alpha_grid) {
    for (double b : beta_grid) {
      const bool holds = criterion == RegionCriterion::Moment ? moment_from_draws(a, b, iota, eta_sq).holds
                                                              : stationarity_from_draws(a, b, eta_sq).is_stationary;
      cells.push_back({a, b, holds});
    }
  }
  return cells;
}

}  // namespace qmele::tails
