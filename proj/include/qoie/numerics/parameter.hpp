#pragma once

#include "qoie/numerics/tensor.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qoie {
class Rng;
}

namespace qoie::numerics {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Ordered, named collection of trainable tensors. Insertion order is the
// checkpoint order and the optimizer's iteration order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  // Throws std::invalid_argument on a duplicate name.
  Parameter& add(std::string name, Matrix init);

  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  std::size_t scalar_count() const;

  // The explicit reset between optimizer applications.
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// One forward/backward graph. Binding the same parameter twice returns the
// same leaf tensor, so tied weights stay a single tensor within a graph.
// Each graph owns its leaves' gradients; several graphs over the same
// ParameterSet can be built and differentiated concurrently.
class Graph {
 public:
  explicit Graph(bool track_gradients = true) : track_gradients_(track_gradients) {}

  Tensor bind(const Parameter& p);

  // Adds every bound leaf's gradient into the matching Parameter::grad of
  // `params`.
  void accumulate_gradients(ParameterSet& params) const;

  bool tracking() const { return track_gradients_; }

  // Source of dropout masks; null (the default) disables dropout.
  void set_dropout_rng(Rng* rng) { dropout_rng_ = rng; }
  Rng* dropout_rng() const { return dropout_rng_; }

 private:
  bool track_gradients_;
  Rng* dropout_rng_ = nullptr;
  std::vector<std::pair<const Parameter*, Tensor>> bound_;
};

}  // namespace qoie::numerics
