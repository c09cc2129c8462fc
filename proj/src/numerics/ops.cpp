#include "qoie/numerics/ops.hpp"

#include "qoie/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qoie::numerics {

namespace {

std::string shape_of(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " +
                                shape_of(b));
  }
}

// Creates the result node. Parents that do not require grad are still kept so
// that the graph stays alive, but gradient is only pushed into those that do.
Tensor make_result(Matrix value, std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool any = false;
  for (const auto& p : parents) any = any || p->requires_grad;
  node->requires_grad = any;
  if (any) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return make_result(a.value() + b.value(), {a.node_ptr(), b.node_ptr()}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (parent(self, i).requires_grad) parent(self, i).grad_accumulator() += self.grad;
    }
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " +
                                shape_of(row));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), {a.node_ptr(), row.node_ptr()}, [](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).grad_accumulator() += self.grad;
    if (parent(self, 1).requires_grad) {
      parent(self, 1).grad_accumulator() += self.grad.colwise().sum();
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  return make_result(std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& y = parent(self, 1);
    if (x.requires_grad) x.grad_accumulator() += self.grad.cwiseProduct(y.val());
    if (y.requires_grad) y.grad_accumulator() += self.grad.cwiseProduct(x.val());
  });
}

Tensor scale(const Tensor& a, double factor) {
  return make_result(a.value() * factor, {a.node_ptr()}, [factor](Node& self) {
    parent(self, 0).grad_accumulator() += self.grad * factor;
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_of(a) + " * " +
                                shape_of(b));
  }
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& y = parent(self, 1);
    if (x.requires_grad) x.grad_accumulator().noalias() += self.grad * y.val().transpose();
    if (y.requires_grad) y.grad_accumulator().noalias() += x.val().transpose() * self.grad;
  });
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_transposed: width mismatch " + shape_of(a) + " vs " +
                                shape_of(b));
  }
  Matrix out = a.value() * b.value().transpose();
  return make_result(std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& y = parent(self, 1);
    if (x.requires_grad) x.grad_accumulator().noalias() += self.grad * y.val();
    if (y.requires_grad) y.grad_accumulator().noalias() += self.grad.transpose() * x.val();
  });
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return make_result(std::move(out), {a.node_ptr()}, [](Node& self) {
    Node& x = parent(self, 0);
    x.grad_accumulator() += (x.val().array() > 0.0).select(self.grad, 0.0);
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_result(std::move(out), {a.node_ptr()}, [](Node& self) {
    parent(self, 0).grad_accumulator().array() += self.grad(0, 0);
  });
}

Tensor softmax_rows(const Tensor& a) {
  const Matrix& in = a.value();
  Matrix out(in.rows(), in.cols());
  for (Index r = 0; r < in.rows(); ++r) {
    const double peak = in.row(r).maxCoeff();
    // std::exp, not Eigen's vectorized exp: the latter clamps -inf, and masked
    // keys must get exactly zero weight.
    out.row(r) = (in.row(r).array() - peak).unaryExpr([](double x) { return std::exp(x); });
    out.row(r) /= out.row(r).sum();
  }
  auto node = make_result(std::move(out), {a.node_ptr()}, {});
  if (node.requires_grad()) {
    node.node().backward = [](Node& self) {
      const Matrix& y = self.value;
      Matrix& gx = parent(self, 0).grad_accumulator();
      for (Index r = 0; r < y.rows(); ++r) {
        const double dot = self.grad.row(r).dot(y.row(r));
        gx.row(r).array() += y.row(r).array() * (self.grad.row(r).array() - dot);
      }
    };
  }
  return node;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const Index width = x.cols();
  if (gain.rows() != 1 || gain.cols() != width || bias.rows() != 1 || bias.cols() != width) {
    throw std::invalid_argument("layer_norm_rows: gain/bias must be 1x" + std::to_string(width));
  }
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm_rows: eps must be positive");

  const Matrix& in = x.value();
  Matrix normalized(in.rows(), width);
  Eigen::VectorXd inv_std(in.rows());
  for (Index r = 0; r < in.rows(); ++r) {
    const double mean = in.row(r).mean();
    const auto centered = in.row(r).array() - mean;
    const double var = centered.square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = centered * inv_std(r);
  }
  Matrix out = (normalized.array().rowwise() * gain.value().row(0).array()).rowwise() +
               bias.value().row(0).array();

  return make_result(
      std::move(out), {x.node_ptr(), gain.node_ptr(), bias.node_ptr()},
      [normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& self) {
        Node& xn = parent(self, 0);
        Node& gn = parent(self, 1);
        Node& bn = parent(self, 2);
        if (gn.requires_grad) {
          gn.grad_accumulator() += self.grad.cwiseProduct(normalized).colwise().sum();
        }
        if (bn.requires_grad) bn.grad_accumulator() += self.grad.colwise().sum();
        if (xn.requires_grad) {
          Matrix& gx = xn.grad_accumulator();
          const auto g = gn.val().row(0).array();
          for (Index r = 0; r < self.grad.rows(); ++r) {
            const Eigen::ArrayXd dxhat = (self.grad.row(r).array() * g).transpose();
            const Eigen::ArrayXd xhat = normalized.row(r).array().transpose();
            const double mean_d = dxhat.mean();
            const double mean_dx = (dxhat * xhat).mean();
            gx.row(r).array() += (inv_std(r) * (dxhat - mean_d - xhat * mean_dx)).transpose();
          }
        }
      });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  const Matrix& tab = table.value();
  Matrix out(static_cast<Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tab.rows()) {
      throw std::out_of_range("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(tab.rows()) + " rows");
    }
    out.row(static_cast<Index>(i)) = tab.row(ids[i]);
  }
  std::vector<int> kept(ids.begin(), ids.end());
  return make_result(std::move(out), {table.node_ptr()}, [kept = std::move(kept)](Node& self) {
    Matrix& g = parent(self, 0).grad_accumulator();
    for (std::size_t i = 0; i < kept.size(); ++i) g.row(kept[i]) += self.grad.row(static_cast<Index>(i));
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index width = 0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    width += p.cols();
    parents.push_back(p.node_ptr());
  }
  Matrix out(rows, width);
  Index offset = 0;
  for (const Tensor& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  return make_result(std::move(out), std::move(parents), [](Node& self) {
    Index off = 0;
    for (auto& p : self.parents) {
      const Index w = p->val().cols();
      if (p->requires_grad) p->grad_accumulator() += self.grad.middleCols(off, w);
      off += w;
    }
  });
}

Tensor slice_cols(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::out_of_range("slice_cols: range outside tensor of width " + std::to_string(a.cols()));
  }
  Matrix out = a.value().middleCols(start, count);
  return make_result(std::move(out), {a.node_ptr()}, [start, count](Node& self) {
    parent(self, 0).grad_accumulator().middleCols(start, count) += self.grad;
  });
}

Tensor mask_add(const Tensor& a, const Mask& allowed) {
  if (allowed.rows() != a.rows() || allowed.cols() != a.cols()) {
    throw std::invalid_argument("mask_add: mask shape does not match scores " + shape_of(a));
  }
  for (Index r = 0; r < allowed.rows(); ++r) {
    if (!allowed.row(r).any()) {
      throw std::invalid_argument("mask_add: query row " + std::to_string(r) +
                                  " has every key forbidden");
    }
  }
  Matrix out = allowed.select(a.value(), -std::numeric_limits<double>::infinity());
  return make_result(std::move(out), {a.node_ptr()}, [allowed](Node& self) {
    parent(self, 0).grad_accumulator() += allowed.select(self.grad, 0.0);
  });
}

namespace {

void check_loss_inputs(const Tensor& scores, std::span<const int> gold,
                       std::span<const double> weights, const char* op) {
  if (static_cast<Index>(gold.size()) != scores.rows() || gold.size() != weights.size()) {
    throw std::invalid_argument(std::string(op) + ": gold/weights length must equal row count " +
                                std::to_string(scores.rows()));
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (weights[i] == 0.0) continue;
    if (gold[i] < 0 || gold[i] >= scores.cols()) {
      throw std::out_of_range(std::string(op) + ": gold id " + std::to_string(gold[i]) +
                              " outside [0, " + std::to_string(scores.cols()) + ")");
    }
  }
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, std::span<const int> gold,
                     std::span<const double> weights) {
  check_loss_inputs(logits, gold, weights, "cross_entropy");
  const Matrix& z = logits.value();
  Matrix probs = Matrix::Zero(z.rows(), z.cols());
  double total = 0.0;
  for (Index r = 0; r < z.rows(); ++r) {
    if (weights[r] == 0.0) continue;
    const double peak = z.row(r).maxCoeff();
    probs.row(r) = (z.row(r).array() - peak).unaryExpr([](double x) { return std::exp(x); });
    const double norm = probs.row(r).sum();
    probs.row(r) /= norm;
    total += weights[r] * (std::log(norm) + peak - z(r, gold[r]));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<int> g(gold.begin(), gold.end());
  std::vector<double> w(weights.begin(), weights.end());
  return make_result(std::move(out), {logits.node_ptr()},
                     [probs = std::move(probs), g = std::move(g), w = std::move(w)](Node& self) {
                       Matrix& gz = parent(self, 0).grad_accumulator();
                       const double up = self.grad(0, 0);
                       for (Index r = 0; r < probs.rows(); ++r) {
                         if (w[r] == 0.0) continue;
                         gz.row(r) += up * w[r] * probs.row(r);
                         gz(r, g[r]) -= up * w[r];
                       }
                     });
}

Tensor nll_of_probabilities(const Tensor& probs, std::span<const int> gold,
                            std::span<const double> weights) {
  check_loss_inputs(probs, gold, weights, "nll_of_probabilities");
  static constexpr double kFloor = 1e-300;
  const Matrix& p = probs.value();
  double total = 0.0;
  for (Index r = 0; r < p.rows(); ++r) {
    if (weights[r] == 0.0) continue;
    total -= weights[r] * std::log(std::max(p(r, gold[r]), kFloor));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<int> g(gold.begin(), gold.end());
  std::vector<double> w(weights.begin(), weights.end());
  return make_result(std::move(out), {probs.node_ptr()},
                     [g = std::move(g), w = std::move(w)](Node& self) {
                       Node& pn = parent(self, 0);
                       Matrix& gp = pn.grad_accumulator();
                       const double up = self.grad(0, 0);
                       for (Index r = 0; r < gp.rows(); ++r) {
                         if (w[r] == 0.0) continue;
                         gp(r, g[r]) -= up * w[r] / std::max(pn.val()(r, g[r]), kFloor);
                       }
                     });
}

Tensor dropout(const Tensor& a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  if (rate == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix keep(a.rows(), a.cols());
  for (Index i = 0; i < keep.size(); ++i) keep.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  Matrix out = a.value().cwiseProduct(keep);
  return make_result(std::move(out), {a.node_ptr()}, [keep = std::move(keep)](Node& self) {
    parent(self, 0).grad_accumulator() += self.grad.cwiseProduct(keep);
  });
}

}  // namespace qoie::numerics
