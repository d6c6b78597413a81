#pragma once

#include <span>
#include <string>
#include <vector>

#include "qmele/model.hpp"

namespace qmele::tails {

enum class WeightVariant {
  InfiniteK9,          ///< sum over all past lags, decay k^-9
  FiniteLag,           ///< lags 1..p+r only, decay k^-9 (AR-ARCH case)
  InfiniteIotaScaled,  ///< all past lags, decay k^-(1 + 8/iota)
};

struct WeightSpec {
  WeightVariant variant = WeightVariant::InfiniteK9;
  double iota = 0.5;
  double c_quantile = 0.90;

  /// Decay exponent a in k^-a.
  double decay_exponent() const;
  void validate() const;
};

/// Nearest-rank empirical quantile of |y_1|..|y_n|.
double abs_quantile(std::span<const double> y, double probability);

/// w_t = (max{1, C^-1 sum_k k^-a |y_{t-k}| I(|y_{t-k}| > C)})^-4 with the
/// threshold C taken as the c_quantile of |y|. Presample values are zero, so
/// the sum for w_t stops at lag t-1.
std::vector<double> compute_weights(const model::SeriesData& data, const WeightSpec& spec,
                                    const model::ModelOrders& orders);

/// Same weights, but observations before y_1 are taken from `prehistory`
/// (oldest first) instead of zero. C is still computed from data alone.
std::vector<double> compute_weights_with_history(const model::SeriesData& data,
                                                 std::span<const double> prehistory, const WeightSpec& spec,
                                                 const model::ModelOrders& orders);

WeightVariant parse_weight_variant(const std::string& text);
std::string to_string(WeightVariant variant);

}  // namespace qmele::tails
