#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qmele::model {

enum class DistKind { Laplace, Normal, StudentT3, NormalMixture };

/// How draws are rescaled before use.
enum class Standardization {
  AbsMeanOne,  ///< E|eta| = 1
  VarOne,      ///< E eta^2 = 1
  Raw,         ///< unscaled base law
};

/// Closed-form moments of a (possibly standardized) innovation law.
struct Moments {
  double abs_mean;         ///< E|eta|
  double second;           ///< E eta^2
  double fourth;           ///< E eta^4; +inf for t_3
  double density_at_zero;  ///< g(0)
  bool fourth_finite() const noexcept;
};

/// Innovation law: Laplace(0,1), N(0,1), Student t with 3 degrees of freedom,
/// or the two-component mixture (1-eps) phi(x) + (eps/tau) phi(x/tau).
class InnovationDist {
 public:
  InnovationDist() = default;
  InnovationDist(DistKind kind, Standardization standardization);
  static InnovationDist mixture(double weight, double tau, Standardization standardization);

  DistKind kind() const noexcept { return kind_; }
  Standardization standardization() const noexcept { return standardization_; }
  double mixture_weight() const noexcept { return mix_weight_; }
  double mixture_tau() const noexcept { return mix_tau_; }

  /// Moments of the unscaled base law.
  Moments raw_moments() const;
  /// Multiplier applied to base draws.
  double scale() const;
  /// Moments of the law actually sampled (after scaling).
  Moments moments() const;
  /// Moments of the same law rescaled to E|eta| = 1, whatever standardization is set.
  Moments abs_mean_one_moments() const;

  /// One standardized draw.
  double sample(std::mt19937_64& rng) const;
  std::vector<double> sample(std::size_t count, std::uint64_t seed) const;

  std::string name() const;

 private:
  double sample_raw(std::mt19937_64& rng) const;

  DistKind kind_ = DistKind::Laplace;
  Standardization standardization_ = Standardization::Raw;
  double mix_weight_ = 0.0;
  double mix_tau_ = 1.0;
};

DistKind parse_dist_kind(const std::string& text);
Standardization parse_standardization(const std::string& text);
std::string to_string(DistKind kind);
std::string to_string(Standardization standardization);

}  // namespace qmele::model
