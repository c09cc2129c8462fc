#include "qoie/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qoie::numerics {

GradCheckResult finite_difference_check(const LossFunction& f, ParameterSet& params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_check: h must be positive");

  params.zero_grad();
  {
    Graph graph;
    Tensor loss = f(graph);
    backward(loss);
    graph.accumulate_gradients(params);
  }

  auto evaluate = [&f]() {
    Graph graph(false);
    return f(graph).item();
  };

  GradCheckResult result;
  for (auto& p : params) {
    double* data = p->value.data();
    for (Index i = 0; i < p->value.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = evaluate();
      data[i] = saved - h;
      const double down = evaluate();
      data[i] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.entries_checked;
      if (err > result.max_relative_error || result.worst_index < 0) {
        result.max_relative_error = err;
        result.worst_parameter = p->name;
        result.worst_index = i;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace qoie::numerics
