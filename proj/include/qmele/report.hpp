#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmele/estimation.hpp"

namespace qmele::report {

struct FitSection {
  std::string title;
  const estimation::FitResult* fit;
};

/// Aligned text: one line per parameter with the standard error in parentheses,
/// followed by objective, g0 and eta2 estimates.
std::string fit_text(const std::vector<FitSection>& sections, std::size_t n);

nlohmann::ordered_json fit_json(const std::vector<FitSection>& sections, std::size_t n);

}  // namespace qmele::report
