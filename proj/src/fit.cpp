#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "qmele/estimation.hpp"

namespace qmele::estimation {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::SelfWeightedQMELE:
      return "sw_qmele";
    case EstimatorKind::LocalQMELE:
      return "local_qmele";
    case EstimatorKind::SelfWeightedQMLE:
      return "sw_qmle";
    case EstimatorKind::LocalQMLE:
      return "local_qmle";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& text) {
  if (text == "sw_qmele") return EstimatorKind::SelfWeightedQMELE;
  if (text == "local_qmele") return EstimatorKind::LocalQMELE;
  if (text == "sw_qmle") return EstimatorKind::SelfWeightedQMLE;
  if (text == "local_qmle") return EstimatorKind::LocalQMLE;
  throw DomainError("unknown estimator '" + text + "' (sw_qmele, local_qmele, sw_qmle, local_qmle)");
}

void FitConfig::validate() const {
  weight_spec.validate();
  if (optimizer.max_iter < 1) throw DomainError("optimizer max_iter must be at least 1");
  if (optimizer.restarts < 0) throw DomainError("optimizer restarts must be nonnegative");
  if (!(optimizer.simplex_tolerance > 0.0)) throw DomainError("simplex tolerance must be positive");
  if (g0_mode.kind == G0Mode::Kind::KnownDensity && !(g0_mode.value > 0.0)) {
    throw DomainError("known g(0) must be positive");
  }
}

// ---- objectives ---------------------------------------------------------------

namespace {

template <Criterion C>
double loss(double eps, double h) {
  if constexpr (C == Criterion::QMELE) {
    const double sh = std::sqrt(h);
    return std::log(sh) + std::abs(eps) / sh;
  } else {
    return std::log(h) + eps * eps / h;
  }
}

// Reusable evaluation state for one (data, weights) pair.
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const SeriesData& data, std::span<const double> weights, Criterion criterion)
      : y_(data.values()), w_(weights), criterion_(criterion), eps_(data.size()), h_(data.size()) {
    if (weights.size() != data.size()) {
      throw DomainError("weights have length " + std::to_string(weights.size()) + ", series has " +
                        std::to_string(data.size()));
    }
  }

  /// NaN when the recursions overflow.
  double operator()(const ParamVector& theta) {
    if (!model::filter_values(theta, y_, eps_, h_)) return std::numeric_limits<double>::quiet_NaN();
    return criterion_ == Criterion::QMELE ? sum<Criterion::QMELE>() : sum<Criterion::QMLE>();
  }

 private:
  template <Criterion C>
  double sum() const {
    double acc = 0.0;
    for (std::size_t t = 0; t < y_.size(); ++t) acc += w_[t] * loss<C>(eps_[t], h_[t]);
    return acc / static_cast<double>(y_.size());
  }

  std::span<const double> y_;
  std::span<const double> w_;
  Criterion criterion_;
  std::vector<double> eps_, h_;
};

double evaluate_checked(const ParamVector& theta, const SeriesData& data, std::span<const double> weights,
                        Criterion criterion) {
  theta.validate();
  if (data.size() == 0) throw DomainError("objective of an empty series");
  ObjectiveEvaluator eval(data, weights, criterion);
  const double v = eval(theta);
  if (std::isnan(v)) model::filter(theta, data, false);  // rethrows with the offending t
  return v;
}

}  // namespace

double qmele_objective(const ParamVector& theta, const SeriesData& data, std::span<const double> weights) {
  return evaluate_checked(theta, data, weights, Criterion::QMELE);
}

double qmle_objective(const ParamVector& theta, const SeriesData& data, std::span<const double> weights) {
  return evaluate_checked(theta, data, weights, Criterion::QMLE);
}

// ---- initializer --------------------------------------------------------------------

namespace {

// OLS of y_t on (1, y_{t-1..t-p}, e_{t-1..t-q}) over t >= start (0-based).
std::optional<Vector> ols_arma(std::span<const double> y, std::span<const double> e, std::size_t p, std::size_t q,
                               std::size_t start) {
  const std::size_t n = y.size();
  if (start >= n || n - start < 2 * (p + q + 1)) return std::nullopt;
  const auto rows = static_cast<Eigen::Index>(n - start);
  const auto cols = static_cast<Eigen::Index>(1 + p + q);
  Matrix x(rows, cols);
  Vector target(rows);
  for (std::size_t t = start; t < n; ++t) {
    const auto r = static_cast<Eigen::Index>(t - start);
    target[r] = y[t];
    x(r, 0) = 1.0;
    for (std::size_t i = 1; i <= p; ++i) x(r, static_cast<Eigen::Index>(i)) = y[t - i];
    for (std::size_t i = 1; i <= q; ++i) x(r, static_cast<Eigen::Index>(p + i)) = e[t - i];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < cols) return std::nullopt;
  Vector beta = qr.solve(target);
  if (!beta.allFinite()) return std::nullopt;
  return beta;
}

// Hannan-Rissanen: long autoregression for proxy innovations, then one OLS pass.
Vector least_squares_gamma(std::span<const double> y, std::size_t p, std::size_t q) {
  const std::size_t n = y.size();
  Vector gamma = Vector::Zero(static_cast<Eigen::Index>(1 + p + q));
  double mean = 0.0;
  for (double v : y) mean += v;
  gamma[0] = mean / static_cast<double>(n);

  std::vector<double> proxy(n, 0.0);
  std::size_t start = p;
  if (q > 0) {
    const std::size_t long_order = std::max<std::size_t>(p + q, std::min<std::size_t>(10, n / 10));
    const auto ar = ols_arma(y, proxy, long_order, 0, long_order);
    if (!ar) return gamma;
    for (std::size_t t = long_order; t < n; ++t) {
      double fit = (*ar)[0];
      for (std::size_t i = 1; i <= long_order; ++i) fit += (*ar)[static_cast<Eigen::Index>(i)] * y[t - i];
      proxy[t] = y[t] - fit;
    }
    start = long_order + q;
  }
  const auto coef = ols_arma(y, proxy, p, q, start);
  if (!coef) return gamma;
  gamma = *coef;
  // Keep the start invertible and the AR part inside the unit interval.
  for (std::size_t i = 1; i <= p; ++i) gamma[static_cast<Eigen::Index>(i)] = std::clamp(gamma[static_cast<Eigen::Index>(i)], -0.95, 0.95);
  for (std::size_t i = 1; i <= q; ++i) {
    gamma[static_cast<Eigen::Index>(p + i)] = std::clamp(gamma[static_cast<Eigen::Index>(p + i)], -0.9, 0.9);
  }
  return gamma;
}

}  // namespace

ParamVector initial_estimate(const SeriesData& data, const model::ModelOrders& orders, Criterion criterion) {
  const auto y = data.values();
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(orders.dim()));
  theta.head(static_cast<Eigen::Index>(orders.gamma_size())) = least_squares_gamma(y, orders.p, orders.q);

  // Residuals under gamma with a flat volatility.
  Vector probe = theta;
  probe[static_cast<Eigen::Index>(orders.gamma_size())] = 1.0;
  const ParamVector flat(model::ModelOrders{orders.p, orders.q, 0, 0},
                         Vector(probe.head(static_cast<Eigen::Index>(orders.gamma_size() + 1))));
  std::vector<double> eps(y.size()), h(y.size());
  double proxy = 0.0;
  if (model::filter_values(flat, y, eps, h)) {
    double abs_sum = 0.0, sq_sum = 0.0;
    for (double e : eps) {
      abs_sum += std::abs(e);
      sq_sum += e * e;
    }
    const double n = static_cast<double>(eps.size());
    proxy = criterion == Criterion::QMELE ? (abs_sum / n) * (abs_sum / n) : sq_sum / n;
  }
  if (!(proxy > 0.0) || !std::isfinite(proxy)) proxy = 1.0;

  const auto off = static_cast<Eigen::Index>(orders.gamma_size());
  theta[off] = 0.5 * proxy;
  for (std::size_t i = 1; i <= orders.r; ++i) theta[off + static_cast<Eigen::Index>(i)] = 0.05;
  for (std::size_t j = 1; j <= orders.s; ++j) {
    theta[off + static_cast<Eigen::Index>(orders.r + j)] = 0.5 / static_cast<double>(orders.s);
  }
  return {orders, theta};
}

// ---- simplex search -------------------------------------------------------------

namespace {

constexpr double kPenalty = 1e100;

// Unconstrained coordinates: gamma as is, log alpha_0, log alpha_i, and a
// multinomial-logistic map for beta that keeps each beta_j > 0 and sum < 1.
class Transform {
 public:
  Transform(model::ModelOrders orders, bool enabled) : orders_(orders), enabled_(enabled) {}

  ParamVector to_theta(const Vector& z) const {
    if (!enabled_) return {orders_, z};
    Vector theta = z;
    const auto g = static_cast<Eigen::Index>(orders_.gamma_size());
    const auto a = static_cast<Eigen::Index>(orders_.r + 1);
    const auto s = static_cast<Eigen::Index>(orders_.s);
    theta.segment(g, a) = z.segment(g, a).array().exp();
    if (s > 0) {
      const Vector e = z.tail(s).array().exp();
      theta.tail(s) = e / (1.0 + e.sum());
    }
    return {orders_, theta};
  }

  Vector to_z(const ParamVector& param) const {
    Vector z = param.values();
    if (!enabled_) return z;
    const auto g = static_cast<Eigen::Index>(orders_.gamma_size());
    const auto a = static_cast<Eigen::Index>(orders_.r + 1);
    const auto s = static_cast<Eigen::Index>(orders_.s);
    for (Eigen::Index i = g; i < g + a; ++i) z[i] = std::log(std::max(z[i], 1e-6));
    if (s > 0) {
      Vector b = z.tail(s).cwiseMax(1e-6);
      if (b.sum() > 0.999) b *= 0.999 / b.sum();
      z.tail(s) = (b.array() / (1.0 - b.sum())).log();
    }
    return z;
  }

  Vector initial_steps() const {
    Vector step = Vector::Constant(static_cast<Eigen::Index>(orders_.dim()), enabled_ ? 0.3 : 0.05);
    step.head(static_cast<Eigen::Index>(orders_.gamma_size())).setConstant(0.1);
    return step;
  }

  Vector perturbation_scale() const {
    Vector sd = Vector::Constant(static_cast<Eigen::Index>(orders_.dim()), enabled_ ? 0.5 : 0.05);
    sd.head(static_cast<Eigen::Index>(orders_.gamma_size())).setConstant(0.1);
    return sd;
  }

 private:
  model::ModelOrders orders_;
  bool enabled_;
};

struct SearchContext {
  const Transform* transform;
  ObjectiveEvaluator* evaluator;
};

double gsl_objective(const gsl_vector* x, void* params) {
  auto* ctx = static_cast<SearchContext*>(params);
  Vector z(static_cast<Eigen::Index>(x->size));
  for (std::size_t i = 0; i < x->size; ++i) z[static_cast<Eigen::Index>(i)] = gsl_vector_get(x, i);
  const ParamVector theta = ctx->transform->to_theta(z);
  if (!theta.is_valid()) return kPenalty;
  const double v = (*ctx->evaluator)(theta);
  return std::isfinite(v) ? v : kPenalty;
}

struct GslVectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct GslMinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* s) const { gsl_multimin_fminimizer_free(s); }
};
using GslVector = std::unique_ptr<gsl_vector, GslVectorDeleter>;
using GslMinimizer = std::unique_ptr<gsl_multimin_fminimizer, GslMinimizerDeleter>;

GslVector to_gsl(const Vector& v) {
  GslVector out(gsl_vector_alloc(static_cast<std::size_t>(v.size())));
  for (Eigen::Index i = 0; i < v.size(); ++i) gsl_vector_set(out.get(), static_cast<std::size_t>(i), v[i]);
  return out;
}

struct RunResult {
  Vector z;
  double value;
  int iterations;
  bool converged;
};

RunResult nelder_mead(SearchContext& ctx, const Vector& start, const Vector& steps, const OptimizerSettings& opt) {
  const auto dim = static_cast<std::size_t>(start.size());
  gsl_multimin_function fn{&gsl_objective, dim, &ctx};
  auto x = to_gsl(start);
  auto ss = to_gsl(steps);
  GslMinimizer s(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim));
  if (gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), ss.get()) != GSL_SUCCESS) {
    return {start, kPenalty, 0, false};
  }
  int iter = 0;
  bool converged = false;
  while (iter < opt.max_iter) {
    ++iter;
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opt.simplex_tolerance) == GSL_SUCCESS) {
      converged = true;
      break;
    }
  }
  Vector z(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) z[static_cast<Eigen::Index>(i)] = gsl_vector_get(s->x, i);
  return {z, s->fval, iter, converged && s->fval < kPenalty};
}

}  // namespace

FitResult fit_self_weighted(const SeriesData& data, const model::ModelOrders& orders, const FitConfig& config,
                            Criterion criterion) {
  config.validate();
  orders.validate(config.allow_constant_model);
  const std::size_t m = orders.dim();
  if (data.size() < 10 * m) {
    throw InsufficientData("series of length " + std::to_string(data.size()) + " is too short for " +
                           std::to_string(m) + " parameters (need at least " + std::to_string(10 * m) + ")");
  }
  gsl_set_error_handler_off();

  FitResult result;
  result.estimator_kind =
      criterion == Criterion::QMELE ? EstimatorKind::SelfWeightedQMELE : EstimatorKind::SelfWeightedQMLE;
  result.weights = tails::compute_weights(data, config.weight_spec, orders);

  ObjectiveEvaluator evaluator(data, result.weights, criterion);
  const Transform transform(orders, config.optimizer.parameter_transform);
  SearchContext ctx{&transform, &evaluator};
  const Vector steps = transform.initial_steps();
  const Vector spread = transform.perturbation_scale();

  const Vector z0 = transform.to_z(initial_estimate(data, orders, criterion));
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  RunResult best{z0, kPenalty, 0, false};
  for (int run = 0; run <= config.optimizer.restarts; ++run) {
    Vector start = z0;
    if (run > 0) {
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += spread[i] * normal(rng);
    }
    const RunResult r = nelder_mead(ctx, start, steps, config.optimizer);
    result.iterations += r.iterations;
    result.runs_converged += r.converged ? 1 : 0;
    if (r.value < best.value) best = r;
  }
  // Restart from the incumbent with a fresh simplex to escape a collapsed one.
  const RunResult polish = nelder_mead(ctx, best.z, steps * 0.1, config.optimizer);
  result.iterations += polish.iterations;
  // Near a kink of the absolute-value criterion the polish simplex can cycle
  // without shrinking; a negligible gain then keeps the incumbent's status.
  if (polish.value < best.value) {
    const bool negligible = best.value - polish.value <= 1e-9 * (1.0 + std::abs(best.value));
    best = RunResult{polish.z, polish.value, polish.iterations, polish.converged || (best.converged && negligible)};
  }

  result.theta_hat = transform.to_theta(best.z);
  result.objective_value = best.value;
  result.converged = best.converged && result.theta_hat.is_valid();
  if (!result.converged) {
    result.failure = "simplex search did not reach the size tolerance within max_iter";
    return result;
  }

  const auto f = model::filter(result.theta_hat, data, false);
  const Vector eta = f.eta();
  const std::span<const double> eta_span(eta.data(), static_cast<std::size_t>(eta.size()));
  result.eta2 = estimate_eta2(eta_span);
  try {
    if (criterion == Criterion::QMELE) {
      result.g0 = estimate_g0(eta_span, config.g0_mode);
      result.eta2 = std::max(result.eta2, kEta2Floor);
      result.covariance = covariance_self_weighted(result.theta_hat, data, result.weights, result.g0, result.eta2);
    } else {
      double fourth = 0.0;
      for (double e : eta) fourth += e * e * e * e;
      result.eta4 = fourth / static_cast<double>(eta.size());
      result.covariance = covariance_qmle(result.theta_hat, data, result.weights, result.eta2, result.eta4);
    }
  } catch (const NumericError& e) {
    result.converged = false;
    result.failure = e.what();
    return result;
  }
  result.std_errors = standard_errors(result.covariance);
  result.converged = result.std_errors.allFinite();
  return result;
}

}  // namespace qmele::estimation
