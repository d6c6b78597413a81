#include "qmele/model.hpp"

#include <cmath>
#include <sstream>

namespace qmele::model {

void ModelOrders::validate(bool allow_constant) const {
  if (is_constant() && !allow_constant) {
    throw DomainError("model orders are all zero; a pure-constant model must be requested explicitly");
  }
}

std::string ModelOrders::to_string() const {
  std::ostringstream os;
  os << "(p=" << p << ", q=" << q << ", r=" << r << ", s=" << s << ")";
  return os.str();
}

ParamVector::ParamVector(ModelOrders orders, Vector theta) : orders_(orders), theta_(std::move(theta)) {
  if (static_cast<std::size_t>(theta_.size()) != orders_.dim()) {
    throw DomainError("parameter vector has length " + std::to_string(theta_.size()) + ", orders " +
                      orders_.to_string() + " need " + std::to_string(orders_.dim()));
  }
}

ParamVector::ParamVector(ModelOrders orders, std::span<const double> theta)
    : ParamVector(orders, Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()))) {}

double ParamVector::beta_sum() const {
  double sum = 0.0;
  for (std::size_t j = 1; j <= orders_.s; ++j) sum += beta(j);
  return sum;
}

double ParamVector::alpha_sum() const {
  double sum = 0.0;
  for (std::size_t i = 1; i <= orders_.r; ++i) sum += alpha(i);
  return sum;
}

bool ParamVector::is_valid() const noexcept {
  if (static_cast<std::size_t>(theta_.size()) != orders_.dim()) return false;
  if (!theta_.allFinite()) return false;
  if (!(alpha0() > 0.0)) return false;
  for (std::size_t i = 1; i <= orders_.r; ++i) {
    if (alpha(i) < 0.0) return false;
  }
  for (std::size_t j = 1; j <= orders_.s; ++j) {
    if (beta(j) < 0.0) return false;
  }
  return beta_sum() < 1.0;
}

void ParamVector::validate() const {
  if (is_valid()) return;
  std::ostringstream os;
  os << "parameter outside the admissible region: theta = (";
  for (Eigen::Index i = 0; i < theta_.size(); ++i) os << (i ? ", " : "") << theta_[i];
  os << "); need alpha0 > 0, alpha_i >= 0, beta_j >= 0, sum beta < 1";
  throw DomainError(os.str());
}

std::vector<std::string> ParamVector::labels() const {
  std::vector<std::string> out{"mu"};
  for (std::size_t i = 1; i <= orders_.p; ++i) out.push_back("phi" + std::to_string(i));
  for (std::size_t i = 1; i <= orders_.q; ++i) out.push_back("psi" + std::to_string(i));
  out.push_back("alpha0");
  for (std::size_t i = 1; i <= orders_.r; ++i) out.push_back("alpha" + std::to_string(i));
  for (std::size_t j = 1; j <= orders_.s; ++j) out.push_back("beta" + std::to_string(j));
  return out;
}

SeriesData::SeriesData(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("series is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DomainError("series value at index " + std::to_string(i + 1) + " is not finite");
    }
  }
}

Vector FilterOutput::eta() const { return eps.array() / h.array().sqrt(); }

namespace {

// Coefficients unpacked once so the inner loops index plain arrays.
struct Coefficients {
  double mu;
  std::vector<double> phi, psi, alpha, beta;
  double alpha0;
  double h_presample;

  explicit Coefficients(const ParamVector& theta) : mu(theta.mu()), alpha0(theta.alpha0()) {
    const auto& o = theta.orders();
    for (std::size_t i = 1; i <= o.p; ++i) phi.push_back(theta.phi(i));
    for (std::size_t i = 1; i <= o.q; ++i) psi.push_back(theta.psi(i));
    for (std::size_t i = 1; i <= o.r; ++i) alpha.push_back(theta.alpha(i));
    for (std::size_t j = 1; j <= o.s; ++j) beta.push_back(theta.beta(j));
    h_presample = alpha0 / (1.0 - theta.beta_sum());
  }
};

}  // namespace

bool filter_values(const ParamVector& theta, std::span<const double> y, std::span<double> eps,
                   std::span<double> h) noexcept {
  const Coefficients c(theta);
  const std::size_t n = y.size();
  for (std::size_t t = 0; t < n; ++t) {
    double e = y[t] - c.mu;
    for (std::size_t i = 0; i < c.phi.size() && i < t; ++i) e -= c.phi[i] * y[t - 1 - i];
    for (std::size_t i = 0; i < c.psi.size() && i < t; ++i) e -= c.psi[i] * eps[t - 1 - i];
    eps[t] = e;

    double v = c.alpha0;
    for (std::size_t i = 0; i < c.alpha.size() && i < t; ++i) v += c.alpha[i] * eps[t - 1 - i] * eps[t - 1 - i];
    for (std::size_t j = 0; j < c.beta.size(); ++j) v += c.beta[j] * (j < t ? h[t - 1 - j] : c.h_presample);
    h[t] = v;
    if (!std::isfinite(e) || !std::isfinite(v) || v > kVolatilityCeiling) return false;
  }
  return true;
}

FilterOutput filter(const ParamVector& theta, const SeriesData& data, bool with_derivatives) {
  theta.validate();
  if (data.size() == 0) throw DomainError("cannot filter an empty series");

  const ModelOrders& o = theta.orders();
  const Coefficients c(theta);
  const std::size_t n = data.size();
  const std::size_t m = o.dim();
  const auto y = data.values();

  FilterOutput out;
  out.eps.resize(static_cast<Eigen::Index>(n));
  out.h.resize(static_cast<Eigen::Index>(n));
  if (with_derivatives) {
    out.deps = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    out.dh = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  }

  // Presample volatility derivative: d/dalpha0 and d/dbeta_j of alpha0/(1-sum beta).
  std::vector<double> dh_pre(m, 0.0);
  const double one_minus_b = 1.0 - theta.beta_sum();
  dh_pre[theta.delta_offset()] = 1.0 / one_minus_b;
  for (std::size_t j = 1; j <= o.s; ++j) dh_pre[theta.beta_index(j)] = c.alpha0 / (one_minus_b * one_minus_b);

  const std::size_t g = o.gamma_size();
  const auto eps = [&](std::size_t t) { return out.eps[static_cast<Eigen::Index>(t)]; };
  const auto hv = [&](std::size_t t) { return out.h[static_cast<Eigen::Index>(t)]; };

  for (std::size_t t = 0; t < n; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    double e = y[t] - c.mu;
    for (std::size_t i = 0; i < o.p && i < t; ++i) e -= c.phi[i] * y[t - 1 - i];
    for (std::size_t i = 0; i < o.q && i < t; ++i) e -= c.psi[i] * eps(t - 1 - i);
    out.eps[ti] = e;

    double v = c.alpha0;
    for (std::size_t i = 0; i < o.r && i < t; ++i) v += c.alpha[i] * eps(t - 1 - i) * eps(t - 1 - i);
    for (std::size_t j = 0; j < o.s; ++j) v += c.beta[j] * (j < t ? hv(t - 1 - j) : c.h_presample);
    out.h[ti] = v;

    if (!std::isfinite(e)) throw NumericOverflow("residual recursion produced a non-finite value", t + 1);
    if (!std::isfinite(v) || v > kVolatilityCeiling) {
      throw NumericOverflow("volatility recursion exceeded the overflow ceiling", t + 1);
    }
    if (!with_derivatives) continue;

    auto de = out.deps.row(ti);
    de[0] = -1.0;
    for (std::size_t i = 0; i < o.p; ++i) de[static_cast<Eigen::Index>(1 + i)] = i < t ? -y[t - 1 - i] : 0.0;
    for (std::size_t i = 0; i < o.q; ++i) de[static_cast<Eigen::Index>(1 + o.p + i)] = i < t ? -eps(t - 1 - i) : 0.0;
    for (std::size_t j = 0; j < o.q && j < t; ++j) {
      const auto lag = static_cast<Eigen::Index>(t - 1 - j);
      de.head(static_cast<Eigen::Index>(g)) -= c.psi[j] * out.deps.row(lag).head(static_cast<Eigen::Index>(g));
    }

    auto dv = out.dh.row(ti);
    dv[static_cast<Eigen::Index>(theta.delta_offset())] = 1.0;
    for (std::size_t i = 0; i < o.r; ++i) {
      dv[static_cast<Eigen::Index>(theta.alpha_index(i + 1))] = i < t ? eps(t - 1 - i) * eps(t - 1 - i) : 0.0;
    }
    for (std::size_t j = 0; j < o.s; ++j) {
      dv[static_cast<Eigen::Index>(theta.beta_index(j + 1))] = j < t ? hv(t - 1 - j) : c.h_presample;
    }
    for (std::size_t i = 0; i < o.r && i < t; ++i) {
      const auto lag = static_cast<Eigen::Index>(t - 1 - i);
      dv.head(static_cast<Eigen::Index>(g)) +=
          2.0 * c.alpha[i] * eps(t - 1 - i) * out.deps.row(lag).head(static_cast<Eigen::Index>(g));
    }
    for (std::size_t j = 0; j < o.s; ++j) {
      if (j < t) {
        dv += c.beta[j] * out.dh.row(static_cast<Eigen::Index>(t - 1 - j));
      } else {
        for (std::size_t k = 0; k < m; ++k) dv[static_cast<Eigen::Index>(k)] += c.beta[j] * dh_pre[k];
      }
    }
  }
  return out;
}

SeriesData log_return_transform(std::span<const double> prices) {
  if (prices.size() < 2) throw DomainError("log-return transform needs at least two prices");
  std::vector<double> out;
  out.reserve(prices.size() - 1);
  for (std::size_t t = 0; t < prices.size(); ++t) {
    if (!(prices[t] > 0.0) || !std::isfinite(prices[t])) {
      throw DomainError("price at index " + std::to_string(t + 1) + " is not strictly positive");
    }
    if (t > 0) out.push_back(100.0 * (std::log(prices[t]) - std::log(prices[t - 1])));
  }
  return SeriesData(std::move(out));
}

}  // namespace qmele::model
