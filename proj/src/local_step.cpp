#include <cmath>

#include "qmele/estimation.hpp"

namespace qmele::estimation {

namespace {

double sign_term(double eta) { return (eta > 0.0 ? 1.0 : 0.0) - (eta < 0.0 ? 1.0 : 0.0); }

// Halves `step` until theta - step is admissible.
ParamVector damped_update(const ParamVector& theta, Vector step, int& halvings) {
  constexpr int kMaxHalvings = 30;
  halvings = 0;
  while (true) {
    ParamVector next(theta.orders(), Vector(theta.values() - step));
    if (next.is_valid()) return next;
    if (halvings == kMaxHalvings) {
      throw NumericError("one-step update stays outside the admissible region after 30 step halvings");
    }
    step *= 0.5;
    ++halvings;
  }
}

}  // namespace

Vector t_star(const ParamVector& theta, const SeriesData& data) {
  const auto f = model::filter(theta, data);
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(theta.dim()));
  for (Eigen::Index t = 0; t < f.h.size(); ++t) {
    const double sh = std::sqrt(f.h[t]);
    const double eta = f.eps[t] / sh;
    acc += (sign_term(eta) / sh) * f.deps.row(t).transpose();
    acc += ((1.0 - std::abs(eta)) / (2.0 * f.h[t])) * f.dh.row(t).transpose();
  }
  return acc;
}

Matrix sigma_star(const ParamVector& theta, const SeriesData& data, double g0) {
  if (!(g0 > 0.0)) throw DomainError("g(0) must be positive");
  const auto f = model::filter(theta, data);
  const auto m = static_cast<Eigen::Index>(theta.dim());
  Matrix acc = Matrix::Zero(m, m);
  for (Eigen::Index t = 0; t < f.h.size(); ++t) {
    const double h = f.h[t];
    acc.selfadjointView<Eigen::Lower>().rankUpdate(f.deps.row(t).transpose(), g0 / h);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(f.dh.row(t).transpose(), 1.0 / (8.0 * h * h));
  }
  return acc.selfadjointView<Eigen::Lower>();
}

FitResult local_qmele_step(const FitResult& init, const SeriesData& data, double g0) {
  if (!init.converged) throw DomainError("local QMELE step needs a converged initial estimate");
  const ParamVector& theta0 = init.theta_hat;
  const Vector score = t_star(theta0, data);
  const Matrix info = sigma_star(theta0, data, g0);
  const Vector step = 0.5 * symmetric_inverse(info) * score;

  FitResult out;
  out.estimator_kind = EstimatorKind::LocalQMELE;
  out.theta_hat = damped_update(theta0, step, out.step_halvings);
  const std::vector<double> ones(data.size(), 1.0);
  out.objective_value = qmele_objective(out.theta_hat, data, ones);
  out.g0 = g0;
  out.eta2 = init.eta2;
  out.covariance = covariance_local(out.theta_hat, data, g0, init.eta2);
  out.std_errors = standard_errors(out.covariance);
  out.converged = out.std_errors.allFinite();
  return out;
}

Vector qmle_score(const ParamVector& theta, const SeriesData& data) {
  const auto f = model::filter(theta, data);
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(theta.dim()));
  for (Eigen::Index t = 0; t < f.h.size(); ++t) {
    const double h = f.h[t];
    const double e = f.eps[t];
    acc += (e / h) * f.deps.row(t).transpose();
    acc += ((1.0 - e * e / h) / (2.0 * h)) * f.dh.row(t).transpose();
  }
  return acc;
}

Matrix qmle_information(const ParamVector& theta, const SeriesData& data) {
  const auto f = model::filter(theta, data);
  const auto m = static_cast<Eigen::Index>(theta.dim());
  Matrix acc = Matrix::Zero(m, m);
  for (Eigen::Index t = 0; t < f.h.size(); ++t) {
    const double h = f.h[t];
    acc.selfadjointView<Eigen::Lower>().rankUpdate(f.deps.row(t).transpose(), 1.0 / h);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(f.dh.row(t).transpose(), 1.0 / (2.0 * h * h));
  }
  return acc.selfadjointView<Eigen::Lower>();
}

FitResult local_qmle_step(const FitResult& init, const SeriesData& data) {
  if (!init.converged) throw DomainError("local QMLE step needs a converged initial estimate");
  const ParamVector& theta0 = init.theta_hat;
  const Vector step = symmetric_inverse(qmle_information(theta0, data)) * qmle_score(theta0, data);

  FitResult out;
  out.estimator_kind = EstimatorKind::LocalQMLE;
  out.theta_hat = damped_update(theta0, step, out.step_halvings);
  const std::vector<double> ones(data.size(), 1.0);
  out.objective_value = qmle_objective(out.theta_hat, data, ones);
  out.eta2 = init.eta2;
  out.eta4 = init.eta4;
  out.covariance = covariance_qmle(out.theta_hat, data, ones, init.eta2, init.eta4);
  out.std_errors = standard_errors(out.covariance);
  out.converged = out.std_errors.allFinite();
  return out;
}

}  // namespace qmele::estimation
