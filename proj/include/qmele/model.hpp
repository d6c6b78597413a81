#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmele/errors.hpp"

namespace qmele::model {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// n x m derivative storage, one row per time point.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Orders of the ARMA(p,q) mean and GARCH(r,s) volatility equations.
struct ModelOrders {
  std::size_t p = 0;  ///< AR
  std::size_t q = 0;  ///< MA
  std::size_t r = 0;  ///< ARCH
  std::size_t s = 0;  ///< GARCH

  std::size_t gamma_size() const noexcept { return p + q + 1; }
  std::size_t delta_size() const noexcept { return r + s + 1; }
  /// Total parameter dimension m.
  std::size_t dim() const noexcept { return gamma_size() + delta_size(); }
  bool is_constant() const noexcept { return p + q + r + s == 0; }

  /// Throws DomainError for the all-zero orders unless allowed.
  void validate(bool allow_constant) const;

  std::string to_string() const;
  friend bool operator==(const ModelOrders&, const ModelOrders&) = default;
};

/// Parameter theta = (gamma', delta')' laid out as
/// (mu, phi_1..phi_p, psi_1..psi_q, alpha_0, alpha_1..alpha_r, beta_1..beta_s).
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(ModelOrders orders, Vector theta);
  ParamVector(ModelOrders orders, std::span<const double> theta);

  const ModelOrders& orders() const noexcept { return orders_; }
  const Vector& values() const noexcept { return theta_; }
  Vector& values() noexcept { return theta_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(theta_.size()); }

  double mu() const { return theta_[0]; }
  double phi(std::size_t i) const { return theta_[static_cast<Eigen::Index>(i)]; }  // 1-based
  double psi(std::size_t i) const { return theta_[static_cast<Eigen::Index>(orders_.p + i)]; }
  double alpha0() const { return theta_[static_cast<Eigen::Index>(delta_offset())]; }
  double alpha(std::size_t i) const { return theta_[static_cast<Eigen::Index>(delta_offset() + i)]; }
  double beta(std::size_t j) const {
    return theta_[static_cast<Eigen::Index>(delta_offset() + orders_.r + j)];
  }

  std::size_t delta_offset() const noexcept { return orders_.gamma_size(); }
  std::size_t alpha_index(std::size_t i) const noexcept { return delta_offset() + i; }
  std::size_t beta_index(std::size_t j) const noexcept { return delta_offset() + orders_.r + j; }

  double beta_sum() const;
  double alpha_sum() const;  ///< sum of alpha_1..alpha_r

  /// alpha_0 > 0, alpha_i >= 0, beta_j >= 0, sum beta < 1, all finite.
  bool is_valid() const noexcept;
  void validate() const;

  /// Short parameter labels, e.g. "mu", "phi1", "alpha0", "beta1".
  std::vector<std::string> labels() const;

 private:
  ModelOrders orders_{};
  Vector theta_;
};

/// Observed series y_1..y_n. Presample values y_i, eps_i (i <= 0) are zero.
class SeriesData {
 public:
  SeriesData() = default;
  explicit SeriesData(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

struct FilterOutput {
  Vector eps;      ///< residuals eps_t(gamma)
  Vector h;        ///< conditional volatility h_t(theta)
  RowMatrix deps;  ///< d eps_t / d theta; delta columns identically zero
  RowMatrix dh;    ///< d h_t / d theta

  bool has_derivatives() const noexcept { return deps.rows() > 0; }
  /// eta_t = eps_t / sqrt(h_t).
  Vector eta() const;
};

/// Ceiling on h_t; exceeding it aborts the recursion.
inline constexpr double kVolatilityCeiling = 1e300;

/// Runs the residual and volatility recursions with the zero presample for y
/// and eps. Presample volatility is the zero-innovation fixed point
/// alpha_0 / (1 - sum beta), and its derivatives are carried exactly.
FilterOutput filter(const ParamVector& theta, const SeriesData& data, bool with_derivatives = true);

/// Objective-path variant: fills eps and h only, no allocation beyond the outputs.
/// Returns false instead of throwing on overflow.
bool filter_values(const ParamVector& theta, std::span<const double> y, std::span<double> eps,
                   std::span<double> h) noexcept;

/// y_t = 100 (log p_t - log p_{t-1}).
SeriesData log_return_transform(std::span<const double> prices);

}  // namespace qmele::model
