#include "qoie/blocks.hpp"

#include "qoie/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qoie::blocks {

using numerics::Index;

void BlockConfig::validate() const {
  if (d_model <= 0 || heads <= 0) throw std::invalid_argument("d_model and heads must be positive");
  if (d_model % heads != 0) {
    throw std::invalid_argument("d_model (" + std::to_string(d_model) +
                                ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
  if (d_ff < d_model) throw std::invalid_argument("d_ff must be at least d_model");
  if (!(ln_eps > 0.0)) throw std::invalid_argument("layer-norm eps must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
}

namespace {

Matrix xavier(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

AttentionWeights make_attention(ParameterSet& params, const std::string& prefix, int q_in, int kv_in,
                                int d_model, int heads, Rng& rng) {
  if (d_model % heads != 0) throw std::invalid_argument("d_model must be divisible by heads");
  AttentionWeights w;
  w.wq = &params.add(prefix + ".wq", xavier(q_in, d_model, rng));
  w.wk = &params.add(prefix + ".wk", xavier(kv_in, d_model, rng));
  w.wv = &params.add(prefix + ".wv", xavier(kv_in, d_model, rng));
  w.wo = &params.add(prefix + ".wo", xavier(d_model, d_model, rng));
  w.heads = heads;
  return w;
}

LayerNormWeights make_layer_norm(ParameterSet& params, const std::string& prefix, int width) {
  return {&params.add(prefix + ".gain", Matrix::Ones(1, width)),
          &params.add(prefix + ".bias", Matrix::Zero(1, width))};
}

FeedForwardWeights make_feed_forward(ParameterSet& params, const std::string& prefix, int d_model,
                                     int d_ff, Rng& rng) {
  FeedForwardWeights f;
  f.w1 = &params.add(prefix + ".w1", xavier(d_model, d_ff, rng));
  f.b1 = &params.add(prefix + ".b1", Matrix::Zero(1, d_ff));
  f.w2 = &params.add(prefix + ".w2", xavier(d_ff, d_model, rng));
  f.b2 = &params.add(prefix + ".b2", Matrix::Zero(1, d_model));
  return f;
}

Matrix position_embedding(int n, int d) {
  if (n < 1) throw std::invalid_argument("position_embedding: length must be >= 1");
  if (d <= 0 || d % 2 != 0) throw std::invalid_argument("position_embedding: width must be even");
  Matrix table(n, d);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d / 2; ++i) {
      const double angle = pos / std::pow(10000.0, (2.0 * i) / d);
      table(pos, 2 * i) = std::sin(angle);
      table(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return table;
}

Mask causal_mask(int length) {
  if (length < 1) throw std::invalid_argument("causal_mask: length must be >= 1");
  Mask m(length, length);
  for (int i = 0; i < length; ++i) {
    for (int j = 0; j < length; ++j) m(i, j) = j <= i;
  }
  return m;
}

Mask key_padding_mask(int query_count, std::span<const std::uint8_t> key_valid) {
  Mask m(query_count, static_cast<Index>(key_valid.size()));
  for (int i = 0; i < query_count; ++i) {
    for (std::size_t j = 0; j < key_valid.size(); ++j) m(i, static_cast<Index>(j)) = key_valid[j] != 0;
  }
  return m;
}

Tensor multi_head_attention(Graph& graph, const Tensor& q, const Tensor& k, const Tensor& v,
                            const Mask* mask, const AttentionWeights& w) {
  if (k.rows() != v.rows() || k.cols() != v.cols()) {
    throw std::invalid_argument("multi_head_attention: keys and values must share shape");
  }
  const Tensor wq = graph.bind(*w.wq);
  const Tensor wk = graph.bind(*w.wk);
  const Tensor wv = graph.bind(*w.wv);
  const Tensor wo = graph.bind(*w.wo);

  const Tensor qp = numerics::matmul(q, wq);
  const Tensor kp = numerics::matmul(k, wk);
  const Tensor vp = numerics::matmul(v, wv);

  const Index d_model = wo.rows();
  const Index d_head = d_model / w.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));

  std::vector<Tensor> heads;
  heads.reserve(static_cast<std::size_t>(w.heads));
  for (int h = 0; h < w.heads; ++h) {
    const Tensor qh = numerics::slice_cols(qp, h * d_head, d_head);
    const Tensor kh = numerics::slice_cols(kp, h * d_head, d_head);
    const Tensor vh = numerics::slice_cols(vp, h * d_head, d_head);
    Tensor scores = numerics::scale(numerics::matmul_transposed(qh, kh), scale);
    if (mask != nullptr) scores = numerics::mask_add(scores, *mask);
    heads.push_back(numerics::matmul(numerics::softmax_rows(scores), vh));
  }
  const Tensor joined = w.heads == 1 ? heads.front() : numerics::concat_cols(heads);
  return numerics::matmul(joined, wo);
}

Tensor mh_block(Graph& graph, const Tensor& q, const Tensor& k, const Tensor& v, const Mask* mask,
                const AttentionWeights& w, const LayerNormWeights& ln, const BlockConfig& cfg) {
  if (q.cols() != w.wo->value.cols()) {
    throw std::invalid_argument("mh_block: query width " + std::to_string(q.cols()) +
                                " differs from d_model " + std::to_string(w.wo->value.cols()) +
                                "; the residual needs them equal");
  }
  Tensor attended = multi_head_attention(graph, q, k, v, mask, w);
  if (Rng* rng = graph.dropout_rng(); rng != nullptr && cfg.dropout > 0.0) {
    attended = numerics::dropout(attended, cfg.dropout, *rng);
  }
  return numerics::layer_norm_rows(numerics::add(q, attended), graph.bind(*ln.gain),
                                   graph.bind(*ln.bias), cfg.ln_eps);
}

Tensor ffn_block(Graph& graph, const Tensor& x, const FeedForwardWeights& ffn,
                 const LayerNormWeights& ln, const BlockConfig& cfg) {
  const Tensor hidden =
      numerics::relu(numerics::add_row(numerics::matmul(x, graph.bind(*ffn.w1)), graph.bind(*ffn.b1)));
  Tensor out = numerics::add_row(numerics::matmul(hidden, graph.bind(*ffn.w2)), graph.bind(*ffn.b2));
  if (Rng* rng = graph.dropout_rng(); rng != nullptr && cfg.dropout > 0.0) {
    out = numerics::dropout(out, cfg.dropout, *rng);
  }
  return numerics::layer_norm_rows(numerics::add(x, out), graph.bind(*ln.gain), graph.bind(*ln.bias),
                                   cfg.ln_eps);
}

}  // namespace qoie::blocks
