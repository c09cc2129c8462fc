#pragma once

#include "qoie/numerics/parameter.hpp"

#include <functional>
#include <string>

namespace qoie::numerics {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Builds the scalar loss in a fresh graph; must be deterministic.
using LossFunction = std::function<Tensor(Graph&)>;

// Compares reverse-mode gradients against central differences with step h
// over every entry of every parameter. Relative error per entry is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Parameter values are restored on return.
GradCheckResult finite_difference_check(const LossFunction& f, ParameterSet& params, double h = 1e-5);

}  // namespace qoie::numerics
