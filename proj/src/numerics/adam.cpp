#include "qoie/numerics/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace qoie::numerics {

AdamState::AdamState(const ParameterSet& params, AdamOptions opts) : options(opts) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void adam_step(ParameterSet& params, AdamState& state) {
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state was built for a different parameter set");
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * p.grad;
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= o.lr * (state.m[i].array() / correction1) /
                       ((state.v[i].array() / correction2).sqrt() + o.eps);
  }
}

}  // namespace qoie::numerics
