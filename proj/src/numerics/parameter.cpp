#include "qoie/numerics/parameter.hpp"

#include <stdexcept>

namespace qoie::numerics {

Parameter& ParameterSet::add(std::string name, Matrix init) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw std::out_of_range("unknown parameter: " + std::string(name));
  return *p;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.setZero(p->value.rows(), p->value.cols());
}

Tensor Graph::bind(const Parameter& p) {
  for (const auto& [param, leaf] : bound_) {
    if (param == &p) return leaf;
  }
  Tensor leaf = Tensor::bound(p.value);
  if (!track_gradients_) leaf.node().requires_grad = false;
  bound_.emplace_back(&p, leaf);
  return leaf;
}

void Graph::accumulate_gradients(ParameterSet& params) const {
  for (auto& p : params) {
    for (const auto& [param, leaf] : bound_) {
      if (param == p.get() && leaf.has_grad()) p->grad += leaf.grad();
    }
  }
}

}  // namespace qoie::numerics
