#pragma once

#include "qoie/numerics/ops.hpp"
#include "qoie/numerics/parameter.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace qoie {
class Rng;
}

namespace qoie::blocks {

using numerics::Graph;
using numerics::Mask;
using numerics::Matrix;
using numerics::Parameter;
using numerics::ParameterSet;
using numerics::Tensor;

struct BlockConfig {
  int d_model = 64;
  int heads = 4;
  int d_ff = 256;
  double ln_eps = 1e-5;
  double dropout = 0.0;

  // Throws std::invalid_argument when d_model % heads != 0 or d_ff < d_model.
  void validate() const;
};

// Projections of one multi-head attention layer. Keys and values share the
// input width `kv_in`; queries may come from a different width.
struct AttentionWeights {
  Parameter* wq = nullptr;  // q_in × d_model
  Parameter* wk = nullptr;  // kv_in × d_model
  Parameter* wv = nullptr;  // kv_in × d_model
  Parameter* wo = nullptr;  // d_model × d_model
  int heads = 1;
};

struct LayerNormWeights {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;
};

struct FeedForwardWeights {
  Parameter* w1 = nullptr;  // d_model × d_ff
  Parameter* b1 = nullptr;
  Parameter* w2 = nullptr;  // d_ff × d_model
  Parameter* b2 = nullptr;
};

// Registers `<prefix>.wq` ... `<prefix>.wo` with Xavier-uniform initialization.
AttentionWeights make_attention(ParameterSet& params, const std::string& prefix, int q_in, int kv_in,
                                int d_model, int heads, Rng& rng);
// `<prefix>.gain` = 1, `<prefix>.bias` = 0.
LayerNormWeights make_layer_norm(ParameterSet& params, const std::string& prefix, int width);
// `<prefix>.w1`, `.b1`, `.w2`, `.b2`; biases start at zero.
FeedForwardWeights make_feed_forward(ParameterSet& params, const std::string& prefix, int d_model,
                                     int d_ff, Rng& rng);

// Sinusoidal table: (pos, 2i) = sin(pos / 10000^(2i/d)), (pos, 2i+1) = cos(...).
// Throws std::invalid_argument for n < 1 or odd d.
Matrix position_embedding(int n, int d);

// (i, j) allowed iff j <= i.
Mask causal_mask(int length);

// Every query row may attend to exactly the keys flagged valid.
Mask key_padding_mask(int query_count, std::span<const std::uint8_t> key_valid);

// Scaled dot-product attention per head (scale 1/sqrt(d_head)), heads
// concatenated, then projected by W_O. `mask` may be null (everything allowed).
Tensor multi_head_attention(Graph& graph, const Tensor& q, const Tensor& k, const Tensor& v,
                            const Mask* mask, const AttentionWeights& w);

// LayerNorm(Q + MultiHeadAttention(Q, K, V)). Dropout on the attention output
// applies only when the graph carries a dropout RNG and cfg.dropout > 0.
Tensor mh_block(Graph& graph, const Tensor& q, const Tensor& k, const Tensor& v, const Mask* mask,
                const AttentionWeights& w, const LayerNormWeights& ln, const BlockConfig& cfg);

// LayerNorm(X + max(0, X W1 + b1) W2 + b2).
Tensor ffn_block(Graph& graph, const Tensor& x, const FeedForwardWeights& ffn,
                 const LayerNormWeights& ln, const BlockConfig& cfg);

}  // namespace qoie::blocks
