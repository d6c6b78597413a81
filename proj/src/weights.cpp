#include "qmele/weights.hpp"

#include <algorithm>
#include <cmath>

namespace qmele::tails {

double WeightSpec::decay_exponent() const {
  return variant == WeightVariant::InfiniteIotaScaled ? 1.0 + 8.0 / iota : 9.0;
}

void WeightSpec::validate() const {
  if (!(c_quantile > 0.0 && c_quantile < 1.0)) throw DomainError("weight quantile must lie in (0, 1)");
  if (variant == WeightVariant::InfiniteIotaScaled && !(iota > 0.0)) {
    throw DomainError("iota must be positive for the iota-scaled weight");
  }
}

double abs_quantile(std::span<const double> y, double probability) {
  if (y.empty()) throw DomainError("quantile of an empty series");
  std::vector<double> a(y.size());
  std::transform(y.begin(), y.end(), a.begin(), [](double v) { return std::abs(v); });
  std::sort(a.begin(), a.end());
  // Nearest rank: smallest value with at least ceil(P n) observations at or below it.
  const auto rank = static_cast<std::size_t>(std::ceil(probability * static_cast<double>(a.size())));
  return a[std::clamp<std::size_t>(rank, 1, a.size()) - 1];
}

namespace {

std::vector<double> weights_impl(std::span<const double> y, std::span<const double> prehistory,
                                 const WeightSpec& spec, const model::ModelOrders& orders) {
  spec.validate();
  const double threshold = abs_quantile(y, spec.c_quantile);
  const double a = spec.decay_exponent();
  const std::size_t n = y.size();
  const std::size_t max_lag =
      spec.variant == WeightVariant::FiniteLag ? orders.p + orders.r : prehistory.size() + n;

  // Full timeline: prehistory then data. Only exceedances contribute.
  const std::size_t offset = prehistory.size();
  std::vector<std::size_t> exceed;
  std::vector<double> exceed_abs;
  const auto value_at = [&](std::size_t idx) { return idx < offset ? prehistory[idx] : y[idx - offset]; };
  for (std::size_t idx = 0; idx < offset + n; ++idx) {
    const double v = std::abs(value_at(idx));
    if (v > threshold) {
      exceed.push_back(idx);
      exceed_abs.push_back(v);
    }
  }

  std::vector<double> w(n, 1.0);
  if (!(threshold > 0.0)) {
    // Every nonzero value exceeds a zero threshold; guard the division.
    if (exceed.empty()) return w;
    throw DegenerateSample("weight threshold C is zero: at least the upper quantile of |y| is zero");
  }
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t now = offset + t;
    double sum = 0.0;
    for (std::size_t e = 0; e < exceed.size() && exceed[e] < now; ++e) {
      const std::size_t lag = now - exceed[e];
      if (lag > max_lag) continue;
      sum += std::pow(static_cast<double>(lag), -a) * exceed_abs[e];
    }
    const double base = std::max(1.0, sum / threshold);
    w[t] = 1.0 / (base * base * base * base);
  }
  return w;
}

}  // namespace

std::vector<double> compute_weights(const model::SeriesData& data, const WeightSpec& spec,
                                    const model::ModelOrders& orders) {
  if (data.size() == 0) throw DomainError("cannot weight an empty series");
  return weights_impl(data.values(), {}, spec, orders);
}

std::vector<double> compute_weights_with_history(const model::SeriesData& data,
                                                 std::span<const double> prehistory, const WeightSpec& spec,
                                                 const model::ModelOrders& orders) {
  if (data.size() == 0) throw DomainError("cannot weight an empty series");
  return weights_impl(data.values(), prehistory, spec, orders);
}

WeightVariant parse_weight_variant(const std::string& text) {
  if (text == "infinite_k9") return WeightVariant::InfiniteK9;
  if (text == "finite_lag") return WeightVariant::FiniteLag;
  if (text == "infinite_iota") return WeightVariant::InfiniteIotaScaled;
  throw DomainError("unknown weight variant '" + text + "' (infinite_k9, finite_lag, infinite_iota)");
}

std::string to_string(WeightVariant variant) {
  switch (variant) {
    case WeightVariant::InfiniteK9:
      return "infinite_k9";
    case WeightVariant::FiniteLag:
      return "finite_lag";
    case WeightVariant::InfiniteIotaScaled:
      return "infinite_iota";
  }
  return "?";
}

}  // namespace qmele::tails
