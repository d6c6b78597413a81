#include "qmele/report.hpp"

#include <cstdio>
#include <sstream>

namespace qmele::report {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sig(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string fit_text(const std::vector<FitSection>& sections, std::size_t n) {
  std::ostringstream out;
  out << "observations: " << n << "\n";
  for (const auto& [title, fit] : sections) {
    out << "\n" << title << "\n";
    if (!fit->converged) {
      out << "  not converged: " << (fit->failure.empty() ? "unknown reason" : fit->failure) << "\n";
      if (fit->theta_hat.dim() == 0) continue;
    }
    const auto labels = fit->theta_hat.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      const std::string se = i < static_cast<std::size_t>(fit->std_errors.size()) ? fixed(fit->std_errors[idx]) : "NA";
      char line[128];
      std::snprintf(line, sizeof line, "  %-8s %10s  (%s)\n", labels[i].c_str(),
                    fixed(fit->theta_hat.values()[idx]).c_str(), se.c_str());
      out << line;
    }
    out << "  objective " << sig(fit->objective_value) << "\n";
    if (fit->g0 > 0.0) out << "  g0        " << sig(fit->g0) << "\n";
    out << "  eta2      " << sig(fit->eta2) << "\n";
    if (fit->eta4 > 0.0) out << "  eta4      " << sig(fit->eta4) << "\n";
    if (fit->iterations > 0) out << "  simplex iterations " << fit->iterations << "\n";
    if (fit->step_halvings > 0) out << "  step halvings " << fit->step_halvings << "\n";
  }
  return out.str();
}

nlohmann::ordered_json fit_json(const std::vector<FitSection>& sections, std::size_t n) {
  nlohmann::ordered_json doc;
  doc["observations"] = n;
  doc["fits"] = nlohmann::ordered_json::array();
  for (const auto& [title, fit] : sections) {
    nlohmann::ordered_json j;
    j["estimator"] = estimation::to_string(fit->estimator_kind);
    j["title"] = title;
    j["converged"] = fit->converged;
    if (!fit->failure.empty()) j["failure"] = fit->failure;
    const auto labels = fit->theta_hat.labels();
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      nlohmann::ordered_json p;
      p["name"] = labels[i];
      p["estimate"] = fit->theta_hat.values()[idx];
      if (idx < fit->std_errors.size()) p["std_error"] = fit->std_errors[idx];
      params.push_back(p);
    }
    j["parameters"] = params;
    j["objective"] = fit->objective_value;
    j["g0"] = fit->g0;
    j["eta2"] = fit->eta2;
    if (fit->eta4 > 0.0) j["eta4"] = fit->eta4;
    j["iterations"] = fit->iterations;
    j["step_halvings"] = fit->step_halvings;
    doc["fits"].push_back(j);
  }
  return doc;
}

}  // namespace qmele::report
