#include "qmele/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qmele::diagnostics {

std::size_t AcfReport::exceedances() const {
  std::size_t count = 0;
  for (std::size_t i = 1; i < values.size(); ++i) count += std::abs(values[i]) > band ? 1 : 0;
  return count;
}

namespace {

void check_lag(std::span<const double> values, std::size_t max_lag) {
  if (max_lag < 1) throw DomainError("max_lag must be at least 1");
  if (values.size() <= max_lag) {
    throw DomainError("series of length " + std::to_string(values.size()) + " is too short for max_lag " +
                      std::to_string(max_lag));
  }
}

}  // namespace

AcfReport acf(std::span<const double> values, std::size_t max_lag) {
  check_lag(values, max_lag);
  const std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> centered(n);
  for (std::size_t t = 0; t < n; ++t) centered[t] = values[t] - mean;
  double c0 = 0.0;
  for (double v : centered) c0 += v * v;
  // Relative to the data scale so that a*v + b stays degenerate exactly when v is.
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  if (!(c0 > 1e-24 * scale * scale * static_cast<double>(n))) {
    throw DegenerateSample("autocorrelation of a constant series");
  }

  AcfReport report;
  report.band = 2.0 / std::sqrt(static_cast<double>(n));
  report.lags.push_back(0);
  report.values.push_back(1.0);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t t = k; t < n; ++t) ck += centered[t] * centered[t - k];
    report.lags.push_back(k);
    report.values.push_back(ck / c0);
  }
  return report;
}

AcfReport pacf(std::span<const double> values, std::size_t max_lag) {
  const AcfReport rho = acf(values, max_lag);
  AcfReport report;
  report.band = rho.band;
  report.lags = rho.lags;
  report.values.assign(max_lag + 1, 0.0);
  report.values[0] = 1.0;

  // phi[j] holds phi_{k,j} for the current order k.
  std::vector<double> phi(max_lag + 1, 0.0), prev(max_lag + 1, 0.0);
  double v = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = rho.values[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * rho.values[k - j];
    const double a = v > 0.0 ? num / v : 0.0;
    phi[k] = a;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - a * prev[k - j];
    v *= (1.0 - a * a);
    report.values[k] = a;
    prev = phi;
  }
  return report;
}

std::vector<double> standardized_residuals(const estimation::FitResult& fit, const model::SeriesData& data) {
  if (!fit.converged) throw DomainError("standardized residuals need a converged fit");
  const auto f = model::filter(fit.theta_hat, data, false);
  const model::Vector eta = f.eta();
  return {eta.data(), eta.data() + eta.size()};
}

std::string to_string(Preference preference) {
  switch (preference) {
    case Preference::QMELE:
      return "QMELE";
    case Preference::QMLE:
      return "QMLE";
    case Preference::Tie:
      return "Tie";
  }
  return "?";
}

EfficiencyReport efficiency_compare(const model::InnovationDist& dist) {
  if (dist.standardization() != model::Standardization::AbsMeanOne) {
    throw DomainError("efficiency comparison needs an innovation law standardized to E|eta| = 1");
  }
  const model::Moments mom = dist.moments();
  EfficiencyReport r{};
  r.eta2 = mom.second;
  r.eta4 = mom.fourth;
  if (dist.kind() == model::DistKind::NormalMixture) {
    // Mixture fourth-moment term in the E eta^4 / E eta^2 form that the
    // published mixture kappa_1 values are computed from:
    //   3 pi (1-e+e tau^4) / (2 (1-e+e tau)^2 (1-e+e tau^2)).
    const double e = dist.mixture_weight(), tau = dist.mixture_tau();
    const double base = 1.0 - e + e * tau;
    r.eta4 = 3.0 * std::numbers::pi * (1.0 - e + e * std::pow(tau, 4)) /
             (2.0 * base * base * (1.0 - e + e * tau * tau));
  }
  r.eta4_infinite = !std::isfinite(r.eta4);
  r.kappa2 = 4.0 * (r.eta2 - 1.0);
  r.kappa1 = r.eta4_infinite ? std::numeric_limits<double>::infinity() : r.eta4 / (r.eta2 * r.eta2) - 1.0;
  if (r.kappa1 < r.kappa2) {
    r.preferred = Preference::QMLE;
  } else if (r.kappa2 < r.kappa1) {
    r.preferred = Preference::QMELE;
  } else {
    r.preferred = Preference::Tie;
  }
  return r;
}

}  // namespace qmele::diagnostics
