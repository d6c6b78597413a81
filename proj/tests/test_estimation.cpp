#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "qmele/estimation.hpp"
#include "qmele/simulate.hpp"

using namespace qmele;
using namespace qmele::estimation;
using model::DistKind;
using model::InnovationDist;
using model::ModelOrders;
using model::Standardization;
using Catch::Approx;

namespace {

const ModelOrders kConst{0, 0, 0, 0};
const ModelOrders kGarch{1, 0, 1, 1};

ParamVector make(ModelOrders o, std::vector<double> v) { return ParamVector(o, v); }

SeriesData laplace_path(std::size_t n, std::uint64_t seed, std::vector<double> th = {0.0, 0.5, 0.1, 0.18, 0.4}) {
  return model::simulate(make(kGarch, th), InnovationDist(DistKind::Laplace, Standardization::AbsMeanOne), n, 500,
                         seed);
}

// Unweighted QMELE objective written out by hand on top of the filter.
double plain_objective(const ParamVector& th, const SeriesData& d) {
  const auto f = model::filter(th, d, false);
  double s = 0.0;
  for (Eigen::Index t = 0; t < f.h.size(); ++t) s += 0.5 * std::log(f.h[t]) + std::abs(f.eps[t]) / std::sqrt(f.h[t]);
  return s / static_cast<double>(d.size());
}

// Sandwich assembled entry by entry.
Matrix brute_sandwich(const ParamVector& th, const SeriesData& d, const std::vector<double>& w, double g0,
                      double eta2) {
  const auto f = model::filter(th, d, true);
  const auto m = static_cast<Eigen::Index>(th.dim());
  const double n = static_cast<double>(d.size());
  Matrix s = Matrix::Zero(m, m), o = Matrix::Zero(m, m);
  for (Eigen::Index t = 0; t < f.h.size(); ++t) {
    const double h = f.h[t], wt = w[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double ee = f.deps(t, i) * f.deps(t, j);
        const double hh = f.dh(t, i) * f.dh(t, j);
        s(i, j) += g0 * wt / h * ee + wt / (8 * h * h) * hh;
        o(i, j) += wt * wt / h * ee + (eta2 - 1) / 4 * wt * wt / (h * h) * hh;
      }
    }
  }
  s /= n;
  o /= n;
  const Matrix si = s.fullPivLu().inverse();
  return 0.25 * si * o * si / n;
}

bool is_psd(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("objective hand evaluations") {
  const std::vector<double> one(2, 1.0);
  const SeriesData zeros(std::vector<double>{0.0, 0.0});
  CHECK(qmele_objective(make(kConst, {0.0, 1.0}), zeros, one) == 0.0);
  CHECK(qmle_objective(make(kConst, {0.0, 1.0}), zeros, one) == 0.0);

  const SeriesData pm(std::vector<double>{2.0, -2.0});
  CHECK(qmele_objective(make(kConst, {0.0, 4.0}), pm, one) == Approx(std::log(2.0) + 1.0).epsilon(1e-14));
  CHECK(qmle_objective(make(kConst, {0.0, 4.0}), pm, one) == Approx(std::log(4.0) + 1.0).epsilon(1e-14));
  CHECK(qmele_objective(make(kConst, {0.0, 4.0}), pm, one) == Approx(1.693147).margin(5e-7));
  CHECK(qmle_objective(make(kConst, {0.0, 4.0}), pm, one) == Approx(2.386294).margin(5e-7));
}

TEST_CASE("objective scales linearly in the weights") {
  const auto d = laplace_path(300, 4);
  const auto w = tails::compute_weights(d, tails::WeightSpec{}, kGarch);
  std::vector<double> w3(w);
  for (auto& v : w3) v *= 3.0;
  const auto th = make(kGarch, {0.01, 0.4, 0.2, 0.1, 0.5});
  CHECK(qmele_objective(th, d, w3) == Approx(3.0 * qmele_objective(th, d, w)).epsilon(1e-13));
  CHECK(qmle_objective(th, d, w3) == Approx(3.0 * qmle_objective(th, d, w)).epsilon(1e-13));
}

TEST_CASE("Gaussian criterion for the constant model is minimized at mean y^2") {
  const auto y = InnovationDist(DistKind::Normal, Standardization::Raw).sample(400, 9);
  const SeriesData d(y);
  const std::vector<double> w(y.size(), 1.0);
  double m2 = 0.0;
  for (double v : y) m2 += v * v;
  m2 /= static_cast<double>(y.size());
  const double at = qmle_objective(make(kConst, {0.0, m2}), d, w);
  for (double r : {0.9, 0.99, 0.999, 1.001, 1.01, 1.1}) CHECK(qmle_objective(make(kConst, {0.0, m2 * r}), d, w) > at);

  FitConfig cfg;
  cfg.allow_constant_model = true;
  cfg.weight_spec.variant = tails::WeightVariant::FiniteLag;  // no lags, so w = 1
  const auto fit = fit_self_weighted(d, kConst, cfg, Criterion::QMLE);
  REQUIRE(fit.converged);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  CHECK(fit.theta_hat.mu() == Approx(mean).margin(1e-5));
  CHECK(fit.theta_hat.alpha0() == Approx(m2 - mean * mean).epsilon(1e-5));
}

TEST_CASE("self-weighted LAD for a pure AR(1) matches pair enumeration") {
  // With r = s = 0 the QMELE gamma-step is weighted LAD of y_t on (1, y_{t-1}),
  // whose optimum passes through two observations.
  const ModelOrders ar{1, 0, 0, 0};
  std::mt19937_64 rng(12);
  std::student_t_distribution<double> t3(3.0);
  std::vector<double> y(60);
  double prev = 0.0;
  for (auto& v : y) prev = v = 0.3 + 0.6 * prev + t3(rng);
  const SeriesData d(y);
  const auto w = tails::compute_weights(d, tails::WeightSpec{}, ar);

  auto lad = [&](double mu, double phi) {
    double s = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) s += w[t] * std::abs(y[t] - mu - phi * (t ? y[t - 1] : 0.0));
    return s;
  };
  double best = std::numeric_limits<double>::infinity(), bmu = 0, bphi = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      const double xi = i ? y[i - 1] : 0.0, xj = j ? y[j - 1] : 0.0;
      if (xi == xj) continue;
      const double phi = (y[i] - y[j]) / (xi - xj), mu = y[i] - phi * xi;
      const double v = lad(mu, phi);
      if (v < best) best = v, bmu = mu, bphi = phi;
    }
  }
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  const double sd_oracle = best / wsum;  // argmin of log sd + S / (wsum sd)

  FitConfig cfg;
  const auto fit = fit_self_weighted(d, ar, cfg, Criterion::QMELE);
  REQUIRE(fit.converged);
  CHECK(lad(fit.theta_hat.mu(), fit.theta_hat.phi(1)) <= best * (1 + 1e-8));
  CHECK(fit.theta_hat.mu() == Approx(bmu).margin(1e-6));
  CHECK(fit.theta_hat.phi(1) == Approx(bphi).margin(1e-6));
  CHECK(std::sqrt(fit.theta_hat.alpha0()) == Approx(sd_oracle).epsilon(1e-6));
}

TEST_CASE("T* hand evaluations") {
  const auto th = make(kConst, {0.0, 1.0});
  const auto t1 = t_star(th, SeriesData(std::vector<double>{2.0, -2.0}));
  CHECK(t1[0] == 0.0);
  CHECK(t1[1] == Approx(-1.0).epsilon(1e-15));
  const auto t2 = t_star(th, SeriesData(std::vector<double>{1.0, -1.0}));
  CHECK(t2[0] == 0.0);
  CHECK(t2[1] == 0.0);
}

TEST_CASE("T* equals n times the gradient of the unweighted objective") {
  // The score carries the sign that makes theta - (2 Sigma*)^-1 T* a descent step.
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto d = laplace_path(400, 17);
  const double n = static_cast<double>(d.size());
  auto same_signs = [&](const ParamVector& a, const ParamVector& b) {
    const auto ea = model::filter(a, d, false).eps, eb = model::filter(b, d, false).eps;
    for (Eigen::Index t = 0; t < ea.size(); ++t) {
      if ((ea[t] > 0) != (eb[t] > 0)) return false;
    }
    return true;
  };
  int checked = 0;
  for (int attempt = 0; attempt < 200 && checked < 20; ++attempt) {
    const auto th = make(kGarch, {0.2 * u(rng) - 0.1, 0.2 + 0.6 * u(rng), 0.05 + 0.3 * u(rng), 0.05 + 0.4 * u(rng),
                                  0.1 + 0.5 * u(rng)});
    Vector fd(th.dim());
    bool smooth = true;
    for (std::size_t i = 0; i < th.dim() && smooth; ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(th.values()[i]));
      auto up = th, dn = th;
      up.values()[i] += step;
      dn.values()[i] -= step;
      smooth = same_signs(up, dn);
      fd[i] = n * (plain_objective(up, d) - plain_objective(dn, d)) / (2 * step);
    }
    if (!smooth) continue;  // a residual changes sign inside the stencil
    ++checked;
    const auto ts = t_star(th, d);
    INFO("attempt " << attempt);
    CHECK((ts - fd).norm() <= 1e-5 * fd.norm());
  }
  CHECK(checked == 20);
}

TEST_CASE("Sigma* hand evaluation, symmetry and linearity in g0") {
  const auto s = sigma_star(make(kConst, {0.0, 1.0}), SeriesData(std::vector<double>{2.0, -2.0}), 0.5);
  CHECK(s(0, 0) == Approx(1.0).epsilon(1e-15));
  CHECK(s(1, 1) == Approx(0.25).epsilon(1e-15));
  CHECK(s(0, 1) == 0.0);
  CHECK(s(1, 0) == 0.0);

  const auto d = laplace_path(300, 5);
  const auto th = make(kGarch, {0.02, 0.45, 0.12, 0.2, 0.35});
  const auto a = sigma_star(th, d, 0.4), b = sigma_star(th, d, 0.8), z = sigma_star(th, d, 1e-300);
  CHECK((a - a.transpose()).norm() == 0.0);
  CHECK(is_psd(a));
  // Doubling g0 adds exactly one more copy of the eps part.
  CHECK(((b - a) - (a - z)).norm() <= 1e-10 * a.norm());
  const auto f = model::filter(th, d, true);
  Matrix ee = Matrix::Zero(5, 5);
  for (Eigen::Index t = 0; t < f.h.size(); ++t) ee += f.deps.row(t).transpose() * f.deps.row(t) / f.h[t];
  CHECK((b - a - 0.4 * ee).norm() <= 1e-10 * a.norm());
  CHECK_THROWS_AS(sigma_star(th, d, 0.0), DomainError);
}

TEST_CASE("sandwich covariance matches an independent evaluation") {
  const auto d = laplace_path(250, 8);
  const auto th = make(kGarch, {0.01, 0.5, 0.1, 0.2, 0.4});
  const auto w = tails::compute_weights(d, tails::WeightSpec{}, kGarch);
  const auto c = covariance_self_weighted(th, d, w, 0.5, 2.1);
  const auto b = brute_sandwich(th, d, w, 0.5, 2.1);
  CHECK((c - b).norm() <= 1e-9 * b.norm());
  CHECK((c - c.transpose()).norm() <= 1e-14 * c.norm());
  CHECK(is_psd(c));

  const std::vector<double> ones(d.size(), 1.0);
  const auto loc = covariance_local(th, d, 0.5, 2.1);
  CHECK((loc - covariance_self_weighted(th, d, ones, 0.5, 2.1)).norm() == 0.0);
  CHECK(is_psd(loc));

  // eta2 = 1 drops the h-score part of the middle matrix.
  const auto f = model::filter(th, d, true);
  const double n = static_cast<double>(d.size());
  Matrix s = Matrix::Zero(5, 5), o = Matrix::Zero(5, 5);
  for (Eigen::Index t = 0; t < f.h.size(); ++t) {
    const double wt = w[static_cast<std::size_t>(t)], h = f.h[t];
    const Vector de = f.deps.row(t).transpose(), dh = f.dh.row(t).transpose();
    s += 0.5 * wt / h * de * de.transpose() + wt / (8 * h * h) * dh * dh.transpose();
    o += wt * wt / h * de * de.transpose();
  }
  s /= n;
  o /= n;
  const Matrix si = s.inverse();
  const Matrix expect = 0.25 * si * o * si / n;
  CHECK((covariance_self_weighted(th, d, w, 0.5, 1.0) - expect).norm() <= 1e-9 * expect.norm());
}

TEST_CASE("Gaussian sandwich matches an independent evaluation") {
  const auto d = laplace_path(250, 10);
  const auto th = make(kGarch, {0.0, 0.5, 0.1, 0.2, 0.4});
  const auto w = tails::compute_weights(d, tails::WeightSpec{}, kGarch);
  const auto f = model::filter(th, d, true);
  const double n = static_cast<double>(d.size()), e2 = 1.9, e4 = 9.5;
  Matrix s = Matrix::Zero(5, 5), o = Matrix::Zero(5, 5);
  for (Eigen::Index t = 0; t < f.h.size(); ++t) {
    const double wt = w[static_cast<std::size_t>(t)], h = f.h[t];
    const Vector de = f.deps.row(t).transpose(), dh = f.dh.row(t).transpose();
    s += wt * (de * de.transpose() / h + dh * dh.transpose() / (2 * h * h));
    o += wt * wt * (e2 / h * de * de.transpose() + (e4 - e2 * e2) / (4 * h * h) * dh * dh.transpose());
  }
  s /= n;
  o /= n;
  const Matrix si = s.inverse();
  const Matrix expect = si * o * si / n;
  const auto c = covariance_qmle(th, d, w, e2, e4);
  CHECK((c - expect).norm() <= 1e-9 * expect.norm());
  CHECK(standard_errors(c)[2] == Approx(std::sqrt(c(2, 2))));
}

TEST_CASE("one-step estimator is a fixed point where T* vanishes") {
  FitResult init;
  init.theta_hat = make(kConst, {0.0, 1.0});
  init.converged = true;
  init.eta2 = 1.0;
  const SeriesData d(std::vector<double>{1.0, -1.0, 1.0, -1.0});
  REQUIRE(t_star(init.theta_hat, d).norm() == 0.0);
  const auto r = local_qmele_step(init, d, 0.5);
  CHECK(r.theta_hat.values() == init.theta_hat.values());
  CHECK(r.step_halvings == 0);
  CHECK(r.estimator_kind == EstimatorKind::LocalQMELE);
}

TEST_CASE("one-step estimator moves toward the minimizer") {
  const auto d = laplace_path(1000, 21);
  FitConfig cfg;
  cfg.g0_mode = G0Mode::known(0.5);
  const auto sw = fit_self_weighted(d, kGarch, cfg, Criterion::QMELE);
  REQUIRE(sw.converged);
  const auto loc = local_qmele_step(sw, d, 0.5);
  CHECK(loc.converged);
  CHECK(loc.theta_hat.is_valid());
  const Vector diff = loc.theta_hat.values() - sw.theta_hat.values();
  CHECK(diff.norm() < 5 * sw.std_errors.norm());
  CHECK(loc.g0 == 0.5);
  CHECK(loc.std_errors.size() == 5);
}

TEST_CASE("fits recover the simulation parameter within 5 standard errors") {
  const Vector th0 = make(kGarch, {0.0, 0.5, 0.1, 0.18, 0.4}).values();
  FitConfig cfg;
  cfg.g0_mode = G0Mode::known(0.5);
  int inside = 0, total = 0;
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const auto d = laplace_path(1000, seed);
    const auto fit = fit_self_weighted(d, kGarch, cfg, Criterion::QMELE);
    ++total;
    if (!fit.converged) continue;
    bool ok = true;
    for (Eigen::Index i = 0; i < th0.size(); ++i) {
      ok = ok && std::abs(fit.theta_hat.values()[i] - th0[i]) <= 5 * fit.std_errors[i];
    }
    inside += ok ? 1 : 0;
  }
  CHECK(inside >= 0.95 * total);
}

TEST_CASE("fit guards") {
  const SeriesData tiny(std::vector<double>{0.1, -0.2, 0.3, 0.05, -0.4});
  CHECK_THROWS_AS(fit_self_weighted(tiny, kGarch, FitConfig{}, Criterion::QMELE), InsufficientData);
  FitConfig bad;
  bad.optimizer.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = FitConfig{};
  bad.optimizer.simplex_tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(fit_self_weighted(laplace_path(200, 1), kConst, FitConfig{}, Criterion::QMELE), DomainError);
}

TEST_CASE("nuisance estimates") {
  const std::vector<double> r{0.3, -1.2};
  CHECK(estimate_g0(r, G0Mode::known(0.5)) == 0.5);
  CHECK_THROWS_AS(estimate_g0(std::vector<double>{}, G0Mode::kernel()), DomainError);

  const auto lap = InnovationDist(DistKind::Laplace, Standardization::AbsMeanOne).sample(100000, 41);
  const double gl = estimate_g0(lap, G0Mode::kernel());
  CHECK(gl >= 0.45);
  CHECK(gl <= 0.55);
  const auto nor = InnovationDist(DistKind::Normal, Standardization::Raw).sample(100000, 42);
  const double gn = estimate_g0(nor, G0Mode::kernel());
  CHECK(gn >= 0.37);
  CHECK(gn <= 0.43);

  CHECK(estimate_eta2(std::vector<double>(7, 1.0)) == 1.0);
  CHECK(estimate_eta2(std::vector<double>{1.0, -3.0}) == 5.0);
  CHECK_THROWS_AS(estimate_eta2(std::vector<double>{}), DomainError);
  const auto big = InnovationDist(DistKind::Laplace, Standardization::AbsMeanOne).sample(1000000, 43);
  CHECK(std::abs(estimate_eta2(big) - 2.0) <= 0.02);
}

TEST_CASE("symmetric inverse rejects ill-conditioned matrices") {
  Matrix a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  CHECK((symmetric_inverse(a) * a - Matrix::Identity(2, 2)).norm() <= 1e-14);
  Matrix s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(symmetric_inverse(s), SingularInformation);
  // A constant-volatility model fitted to all-zero data has no eps information.
  CHECK_THROWS_AS(covariance_local(make(kConst, {0.0, 1.0}), SeriesData(std::vector<double>(30, 0.0)), 0.0 + 1e-300, 1.0),
                  SingularInformation);
}

TEST_CASE("estimator kind names round-trip") {
  for (auto k : {EstimatorKind::SelfWeightedQMELE, EstimatorKind::LocalQMELE, EstimatorKind::SelfWeightedQMLE,
                 EstimatorKind::LocalQMLE}) {
    CHECK(parse_estimator_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_estimator_kind("ols"), DomainError);
}
