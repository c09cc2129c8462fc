#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

namespace qoie::numerics {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// Graph node. Every tensor in this library is rank 2; vectors are 1×n rows
// and scalars are 1×1.
struct Node {
  Matrix value;
  // Set for leaves bound to parameter storage; the node then reads through it.
  const Matrix* external = nullptr;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(Node&)> backward;

  const Matrix& val() const { return external != nullptr ? *external : value; }

  // Zero-initialized on first use.
  Matrix& grad_accumulator() {
    if (grad.size() == 0) grad = Matrix::Zero(val().rows(), val().cols());
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Matrix value);
  static Tensor variable(Matrix value);
  // Leaf that reads `storage` in place and collects its own gradient.
  static Tensor bound(const Matrix& storage);
  static Tensor scalar(double value, bool requires_grad = false);

  const Matrix& value() const { return node_->val(); }
  // Empty matrix until a backward pass reaches this tensor.
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  bool requires_grad() const { return node_->requires_grad; }

  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double item() const;

  bool defined() const { return node_ != nullptr; }
  bool same_as(const Tensor& other) const { return node_ == other.node_; }

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Reverse-mode sweep from a 1×1 loss. Gradients of every node reachable from
// `loss` are reset before propagation, so calling it twice overwrites rather
// than accumulates. Throws std::invalid_argument for a non-scalar loss.
void backward(const Tensor& loss);

}  // namespace qoie::numerics
