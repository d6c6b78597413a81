#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qmele/model.hpp"
#include "qmele/weights.hpp"

namespace qmele::estimation {

using model::Matrix;
using model::ParamVector;
using model::SeriesData;
using model::Vector;

enum class Criterion {
  QMELE,  ///< log sqrt(h) + |eps| / sqrt(h)
  QMLE,   ///< log h + eps^2 / h
};

enum class EstimatorKind { SelfWeightedQMELE, LocalQMELE, SelfWeightedQMLE, LocalQMLE };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& text);

struct OptimizerSettings {
  int max_iter = 3000;                ///< per simplex run
  int restarts = 5;                   ///< perturbed starts in addition to the initializer
  double simplex_tolerance = 1e-7;    ///< simplex size at which a run counts as converged
  bool parameter_transform = true;    ///< search on unconstrained log/logistic coordinates
};

/// Source of g(0), the innovation density at zero.
struct G0Mode {
  enum class Kind { KernelAtZero, KnownDensity };
  Kind kind = Kind::KernelAtZero;
  double value = 0.0;  ///< used by KnownDensity

  static G0Mode kernel() { return {}; }
  static G0Mode known(double g0) { return {Kind::KnownDensity, g0}; }
};

struct FitConfig {
  tails::WeightSpec weight_spec{};
  OptimizerSettings optimizer{};
  G0Mode g0_mode{};
  std::uint64_t seed = 1;
  bool allow_constant_model = false;

  void validate() const;
};

struct FitResult {
  ParamVector theta_hat;
  double objective_value = 0.0;
  Matrix covariance;   ///< estimated sampling covariance of theta_hat
  Vector std_errors;   ///< square roots of the covariance diagonal
  bool converged = false;
  int iterations = 0;  ///< simplex iterations summed over runs (0 for one-step estimators)
  EstimatorKind estimator_kind = EstimatorKind::SelfWeightedQMELE;

  double g0 = 0.0;    ///< density at zero used in the covariance (QMELE kinds)
  double eta2 = 0.0;  ///< E eta^2 estimate used in the covariance
  double eta4 = 0.0;  ///< E eta^4 estimate (QMLE kinds)
  int step_halvings = 0;
  int runs_converged = 0;
  std::vector<double> weights;  ///< self-weights used (self-weighted kinds)
  std::string failure;          ///< why converged is false, if it is
};

// ---- objectives -----------------------------------------------------------

/// (1/n) sum_t w_t [log sqrt(h_t) + |eps_t| / sqrt(h_t)] on the zero-presample filter.
double qmele_objective(const ParamVector& theta, const SeriesData& data, std::span<const double> weights);

/// (1/n) sum_t w_t [log h_t + eps_t^2 / h_t] on the zero-presample filter.
double qmle_objective(const ParamVector& theta, const SeriesData& data, std::span<const double> weights);

// ---- global self-weighted fits ---------------------------------------------

/// Least-squares ARMA fit for gamma and a moment-matched delta inside the
/// constraint region. Used as the first simplex start.
ParamVector initial_estimate(const SeriesData& data, const model::ModelOrders& orders, Criterion criterion);

/// Minimizes the self-weighted criterion by restarted Nelder-Mead and fills
/// the matching sandwich covariance. A non-converged search is reported with
/// converged = false, never silently.
FitResult fit_self_weighted(const SeriesData& data, const model::ModelOrders& orders, const FitConfig& config,
                            Criterion criterion);

// ---- one-step local estimators ----------------------------------------------

/// sum_t { h_t^-1/2 d eps_t [I(eta_t>0) - I(eta_t<0)] + (2 h_t)^-1 d h_t (1 - |eta_t|) }.
/// Equals the gradient of n times the unweighted QMELE objective where it is smooth.
Vector t_star(const ParamVector& theta, const SeriesData& data);

/// sum_t { g0 / h_t d eps_t d eps_t' + 1 / (8 h_t^2) d h_t d h_t' }.
Matrix sigma_star(const ParamVector& theta, const SeriesData& data, double g0);

/// theta_init - [2 Sigma*]^-1 T*, with step halving back into the admissible region.
FitResult local_qmele_step(const FitResult& init, const SeriesData& data, double g0);

/// Gaussian score sum_t { eps_t / h_t d eps_t + (2 h_t)^-1 (1 - eps_t^2/h_t) d h_t }.
Vector qmle_score(const ParamVector& theta, const SeriesData& data);
/// sum_t { h_t^-1 d eps_t d eps_t' + (2 h_t^2)^-1 d h_t d h_t' }.
Matrix qmle_information(const ParamVector& theta, const SeriesData& data);
FitResult local_qmle_step(const FitResult& init, const SeriesData& data);

// ---- covariance estimators ----------------------------------------------------

/// (1/n) (1/4) S^-1 O S^-1 with
///   S = (1/n) sum { g0 w_t / h_t d eps d eps' + w_t / (8 h_t^2) d h d h' }
///   O = (1/n) sum { w_t^2 / h_t d eps d eps' + (eta2 - 1)/4 w_t^2 / h_t^2 d h d h' }.
Matrix covariance_self_weighted(const ParamVector& theta, const SeriesData& data, std::span<const double> weights,
                                double g0, double eta2);

/// covariance_self_weighted with unit weights.
Matrix covariance_local(const ParamVector& theta, const SeriesData& data, double g0, double eta2);

/// Gaussian-criterion sandwich (1/n) S^-1 O S^-1 with
///   S = (1/n) sum w_t { h_t^-1 d eps d eps' + (2 h_t^2)^-1 d h d h' }
///   O = (1/n) sum w_t^2 { eta2 / h_t d eps d eps' + (eta4 - eta2^2) / (4 h_t^2) d h d h' }.
Matrix covariance_qmle(const ParamVector& theta, const SeriesData& data, std::span<const double> weights,
                       double eta2, double eta4);

Vector standard_errors(const Matrix& covariance);

// ---- nuisance estimates --------------------------------------------------------

/// Gaussian-kernel density at zero, bandwidth 1.06 min(sd, IQR/1.34) n^-1/5;
/// or the supplied value in KnownDensity mode.
double estimate_g0(std::span<const double> residuals, const G0Mode& mode);

/// Mean of squared residuals.
double estimate_eta2(std::span<const double> residuals);

/// Floor that keeps (eta2 - 1)/4 nonnegative.
inline constexpr double kEta2Floor = 1.0 + 1e-6;

/// Condition-number ceiling for inverting information matrices.
inline constexpr double kConditionLimit = 1e12;

/// Inverse of a symmetric positive definite matrix through its eigendecomposition;
/// throws SingularInformation when the condition number exceeds kConditionLimit.
Matrix symmetric_inverse(const Matrix& a);

}  // namespace qmele::estimation
