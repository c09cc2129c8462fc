#include "qoie/numerics/tensor.hpp"

#include <stdexcept>
#include <unordered_set>

namespace qoie::numerics {

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::variable(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor Tensor::bound(const Matrix& storage) {
  auto node = std::make_shared<Node>();
  node->external = &storage;
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return requires_grad ? variable(std::move(m)) : constant(std::move(m));
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw std::invalid_argument("Tensor::item: tensor is not 1x1");
  return value()(0, 0);
}

namespace {

// Post-order over nodes that require grad; iterative to survive deep graphs.
std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next_parent] = stack.back();
    if (next_parent < node->parents.size()) {
      Node* parent = node->parents[next_parent++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: undefined tensor");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw std::invalid_argument("backward: loss must be a 1x1 scalar tensor");
  }
  if (!loss.requires_grad()) return;

  const std::vector<Node*> order = topological_order(&loss.node());
  for (Node* node : order) node->grad.resize(0, 0);
  loss.node().grad_accumulator()(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
  }
}

}  // namespace qoie::numerics
