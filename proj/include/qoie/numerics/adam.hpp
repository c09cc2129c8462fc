#pragma once

#include "qoie/numerics/parameter.hpp"

#include <cstdint>
#include <vector>

namespace qoie::numerics {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments mirror the parameter set they were created for.
struct AdamState {
  AdamState(const ParameterSet& params, AdamOptions options);

  std::int64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  AdamOptions options;
};

// Bias-corrected Adam update, in place, using Parameter::grad.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace qoie::numerics
