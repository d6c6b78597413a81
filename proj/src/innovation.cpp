#include "qmele/innovation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qmele/errors.hpp"

namespace qmele::model {

namespace {

constexpr double kPi = std::numbers::pi;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);

}  // namespace

bool Moments::fourth_finite() const noexcept { return std::isfinite(fourth); }

InnovationDist::InnovationDist(DistKind kind, Standardization standardization)
    : kind_(kind), standardization_(standardization) {
  if (kind == DistKind::NormalMixture) {
    throw DomainError("use InnovationDist::mixture to build a normal mixture");
  }
}

InnovationDist InnovationDist::mixture(double weight, double tau, Standardization standardization) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw DomainError("mixture weight must lie in [0, 1]");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("mixture scale tau must be positive");
  InnovationDist d;
  d.kind_ = DistKind::NormalMixture;
  d.standardization_ = standardization;
  d.mix_weight_ = weight;
  d.mix_tau_ = tau;
  return d;
}

Moments InnovationDist::raw_moments() const {
  switch (kind_) {
    case DistKind::Laplace:
      return {1.0, 2.0, 24.0, 0.5};
    case DistKind::Normal:
      return {std::sqrt(2.0 / kPi), 1.0, 3.0, kInvSqrt2Pi};
    case DistKind::StudentT3:
      // E|t_3| = 2 sqrt(3) / pi, E t_3^2 = 3, density at 0 = 2 / (pi sqrt(3)).
      return {2.0 * std::sqrt(3.0) / kPi, 3.0, std::numeric_limits<double>::infinity(),
              2.0 / (kPi * std::sqrt(3.0))};
    case DistKind::NormalMixture: {
      const double e = mix_weight_, tau = mix_tau_;
      return {std::sqrt(2.0 / kPi) * (1.0 - e + e * tau), 1.0 - e + e * tau * tau,
              3.0 * (1.0 - e + e * tau * tau * tau * tau), kInvSqrt2Pi * (1.0 - e + e / tau)};
    }
  }
  return {};
}

double InnovationDist::scale() const {
  const Moments raw = raw_moments();
  switch (standardization_) {
    case Standardization::AbsMeanOne:
      return 1.0 / raw.abs_mean;
    case Standardization::VarOne:
      return 1.0 / std::sqrt(raw.second);
    case Standardization::Raw:
      return 1.0;
  }
  return 1.0;
}

namespace {

Moments rescale(const Moments& raw, double c) {
  return {c * raw.abs_mean, c * c * raw.second, c * c * c * c * raw.fourth, raw.density_at_zero / c};
}

}  // namespace

Moments InnovationDist::moments() const { return rescale(raw_moments(), scale()); }

Moments InnovationDist::abs_mean_one_moments() const {
  const Moments raw = raw_moments();
  return rescale(raw, 1.0 / raw.abs_mean);
}

double InnovationDist::sample_raw(std::mt19937_64& rng) const {
  switch (kind_) {
    case DistKind::Laplace: {
      std::exponential_distribution<double> expo(1.0);
      std::bernoulli_distribution sign(0.5);
      const double x = expo(rng);
      return sign(rng) ? x : -x;
    }
    case DistKind::Normal: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return normal(rng);
    }
    case DistKind::StudentT3: {
      std::student_t_distribution<double> t3(3.0);
      return t3(rng);
    }
    case DistKind::NormalMixture: {
      std::bernoulli_distribution wide(mix_weight_);
      std::normal_distribution<double> normal(0.0, 1.0);
      const bool from_wide = wide(rng);
      const double z = normal(rng);
      return from_wide ? mix_tau_ * z : z;
    }
  }
  return 0.0;
}

double InnovationDist::sample(std::mt19937_64& rng) const { return scale() * sample_raw(rng); }

std::vector<double> InnovationDist::sample(std::size_t count, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  const double c = scale();
  std::vector<double> out(count);
  for (auto& x : out) x = c * sample_raw(rng);
  return out;
}

std::string InnovationDist::name() const {
  std::ostringstream os;
  os << to_string(kind_);
  if (kind_ == DistKind::NormalMixture) os << "(eps=" << mix_weight_ << ", tau=" << mix_tau_ << ")";
  os << " [" << to_string(standardization_) << "]";
  return os.str();
}

DistKind parse_dist_kind(const std::string& text) {
  if (text == "laplace") return DistKind::Laplace;
  if (text == "normal") return DistKind::Normal;
  if (text == "t3" || text == "student_t3") return DistKind::StudentT3;
  if (text == "mixture" || text == "normal_mixture") return DistKind::NormalMixture;
  throw DomainError("unknown innovation distribution '" + text + "' (laplace, normal, t3, mixture)");
}

Standardization parse_standardization(const std::string& text) {
  if (text == "abs_mean_one") return Standardization::AbsMeanOne;
  if (text == "var_one") return Standardization::VarOne;
  if (text == "raw") return Standardization::Raw;
  throw DomainError("unknown standardization '" + text + "' (abs_mean_one, var_one, raw)");
}

std::string to_string(DistKind kind) {
  switch (kind) {
    case DistKind::Laplace:
      return "laplace";
    case DistKind::Normal:
      return "normal";
    case DistKind::StudentT3:
      return "t3";
    case DistKind::NormalMixture:
      return "mixture";
  }
  return "?";
}

std::string to_string(Standardization standardization) {
  switch (standardization) {
    case Standardization::AbsMeanOne:
      return "abs_mean_one";
    case Standardization::VarOne:
      return "var_one";
    case Standardization::Raw:
      return "raw";
  }
  return "?";
}

}  // namespace qmele::model
