#pragma once

#include <span>
#include <string>
#include <vector>

#include "qmele/estimation.hpp"
#include "qmele/innovation.hpp"

namespace qmele::diagnostics {

struct AcfReport {
  std::vector<std::size_t> lags;  ///< 0..max_lag
  std::vector<double> values;     ///< values[0] == 1
  double band = 0.0;              ///< 2 / sqrt(n)

  /// Number of lags >= 1 whose absolute value exceeds the band.
  std::size_t exceedances() const;
};

/// Sample autocorrelations with divisor n.
AcfReport acf(std::span<const double> values, std::size_t max_lag);

/// Partial autocorrelations by the Durbin-Levinson recursion on the sample ACF.
/// Lag 0 is reported as 1 for symmetry with acf().
AcfReport pacf(std::span<const double> values, std::size_t max_lag);

/// eta_t = eps_t / sqrt(h_t) at the fitted parameter.
std::vector<double> standardized_residuals(const estimation::FitResult& fit, const model::SeriesData& data);

enum class Preference { QMELE, QMLE, Tie };
std::string to_string(Preference preference);

struct EfficiencyReport {
  double kappa1;  ///< QMLE factor E eta^4 / (E eta^2)^2 - 1; +inf when E eta^4 is infinite
  double kappa2;  ///< QMELE factor 4 (E eta^2 - 1)
  double eta2;
  double eta4;
  bool eta4_infinite;
  Preference preferred;  ///< the estimator with the smaller factor
};

/// Closed-form asymptotic-efficiency factors of the self-weighted QMLE and
/// QMELE for an innovation law standardized to E|eta| = 1.
EfficiencyReport efficiency_compare(const model::InnovationDist& dist);

}  // namespace qmele::diagnostics
