#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qmele/estimation.hpp"

namespace qmele::estimation {

Matrix symmetric_inverse(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DomainError("symmetric_inverse needs a nonempty square matrix");
  if (!a.allFinite()) throw SingularInformation("information matrix has non-finite entries");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw SingularInformation("eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  if (!(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > kConditionLimit) {
    std::ostringstream os;
    os << "information matrix is singular or ill-conditioned (eigenvalues in [" << lmin << ", " << lmax << "])";
    throw SingularInformation(os.str());
  }
  const Matrix& v = eig.eigenvectors();
  return v * lambda.cwiseInverse().asDiagonal() * v.transpose();
}

Vector standard_errors(const Matrix& covariance) { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }

namespace {

void check_weights(const SeriesData& data, std::span<const double> weights) {
  if (weights.size() != data.size()) {
    throw DomainError("weights have length " + std::to_string(weights.size()) + ", series has " +
                      std::to_string(data.size()));
  }
}

// Accumulates sum_t a_t d eps_t d eps_t' + b_t d h_t d h_t' via rank-one updates.
template <typename EpsCoef, typename HCoef>
Matrix outer_sum(const model::FilterOutput& f, EpsCoef eps_coef, HCoef h_coef) {
  const Eigen::Index n = f.h.size();
  const Eigen::Index m = f.deps.cols();
  Matrix acc = Matrix::Zero(m, m);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double ce = eps_coef(t);
    const double ch = h_coef(t);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(f.deps.row(t).transpose(), ce);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(f.dh.row(t).transpose(), ch);
  }
  return acc.selfadjointView<Eigen::Lower>();
}

}  // namespace

Matrix covariance_self_weighted(const ParamVector& theta, const SeriesData& data, std::span<const double> weights,
                                double g0, double eta2) {
  check_weights(data, weights);
  if (!(g0 > 0.0)) throw DomainError("g(0) must be positive");
  if (!(eta2 >= 1.0)) throw DomainError("E eta^2 estimate must be at least 1 under E|eta| = 1");
  const auto f = model::filter(theta, data);
  const double n = static_cast<double>(data.size());
  const auto w = [&](Eigen::Index t) { return weights[static_cast<std::size_t>(t)]; };
  const auto h = [&](Eigen::Index t) { return f.h[t]; };

  const Matrix sigma = outer_sum(
      f, [&](Eigen::Index t) { return g0 * w(t) / h(t); },
      [&](Eigen::Index t) { return w(t) / (8.0 * h(t) * h(t)); }) / n;
  const Matrix omega = outer_sum(
      f, [&](Eigen::Index t) { return w(t) * w(t) / h(t); },
      [&](Eigen::Index t) { return 0.25 * (eta2 - 1.0) * w(t) * w(t) / (h(t) * h(t)); }) / n;
  const Matrix inv = symmetric_inverse(sigma);
  Matrix cov = 0.25 * inv * omega * inv / n;
  return 0.5 * (cov + cov.transpose());
}

Matrix covariance_local(const ParamVector& theta, const SeriesData& data, double g0, double eta2) {
  const std::vector<double> ones(data.size(), 1.0);
  return covariance_self_weighted(theta, data, ones, g0, eta2);
}

Matrix covariance_qmle(const ParamVector& theta, const SeriesData& data, std::span<const double> weights, double eta2,
                       double eta4) {
  check_weights(data, weights);
  if (!(eta2 > 0.0)) throw DomainError("E eta^2 estimate must be positive");
  const auto f = model::filter(theta, data);
  const double n = static_cast<double>(data.size());
  const double excess = std::max(eta4 - eta2 * eta2, 0.0);
  const auto w = [&](Eigen::Index t) { return weights[static_cast<std::size_t>(t)]; };
  const auto h = [&](Eigen::Index t) { return f.h[t]; };

  const Matrix sigma = outer_sum(
      f, [&](Eigen::Index t) { return w(t) / h(t); },
      [&](Eigen::Index t) { return w(t) / (2.0 * h(t) * h(t)); }) / n;
  const Matrix omega = outer_sum(
      f, [&](Eigen::Index t) { return eta2 * w(t) * w(t) / h(t); },
      [&](Eigen::Index t) { return 0.25 * excess * w(t) * w(t) / (h(t) * h(t)); }) / n;
  const Matrix inv = symmetric_inverse(sigma);
  Matrix cov = inv * omega * inv / n;
  return 0.5 * (cov + cov.transpose());
}

double estimate_eta2(std::span<const double> residuals) {
  if (residuals.empty()) throw DomainError("E eta^2 estimate needs at least one residual");
  double sum = 0.0;
  for (double r : residuals) sum += r * r;
  return sum / static_cast<double>(residuals.size());
}

namespace {

// Linear-interpolation sample quantile of sorted data.
double sorted_quantile(const std::vector<double>& s, double prob) {
  const double pos = prob * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

double estimate_g0(std::span<const double> residuals, const G0Mode& mode) {
  if (mode.kind == G0Mode::Kind::KnownDensity) {
    if (!(mode.value > 0.0)) throw DomainError("known g(0) must be positive");
    return mode.value;
  }
  if (residuals.empty()) throw DomainError("kernel estimate of g(0) needs residuals");
  const auto n = static_cast<double>(residuals.size());
  double mean = 0.0;
  for (double r : residuals) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : residuals) ss += (r - mean) * (r - mean);
  const double sd = residuals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

  std::vector<double> sorted(residuals.begin(), residuals.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw DegenerateSample("kernel estimate of g(0): residuals have zero spread");

  const double bandwidth = 1.06 * spread * std::pow(n, -0.2);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (double r : residuals) {
    const double u = r / bandwidth;
    acc += norm * std::exp(-0.5 * u * u);
  }
  return acc / (n * bandwidth);
}

}  // namespace qmele::estimation
