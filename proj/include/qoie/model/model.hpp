#pragma once

#include "qoie/blocks.hpp"
#include "qoie/model/config.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qoie::model {

using numerics::Graph;
using numerics::Matrix;
using numerics::Parameter;
using numerics::ParameterSet;
using numerics::Tensor;

struct EncoderLayer {
  blocks::AttentionWeights self_attn;
  blocks::LayerNormWeights ln1;
  blocks::FeedForwardWeights ffn;
  blocks::LayerNormWeights ln2;
};

// Shared by the tagging decoder (cross = passage-to-question attention) and
// the correction decoder (cross = answer-to-memory attention).
struct DecoderLayer {
  blocks::AttentionWeights self_attn;
  blocks::LayerNormWeights ln1;
  blocks::AttentionWeights cross_attn;  // unset in tagging layers without a question
  blocks::LayerNormWeights ln2;
  blocks::FeedForwardWeights ffn;
  blocks::LayerNormWeights ln3;
};

struct TagOutput {
  Tensor hidden;  // h_t, m × d_model
  Tensor logits;  // h_t · W_t
  Tensor probs;   // T, row-wise softmax of logits
};

// Padded id sequence plus its validity flags (1 = real token).
struct Sequence {
  std::span<const int> ids;
  std::span<const std::uint8_t> valid;
};

struct ForwardResult {
  Tensor question_hidden;  // undefined when the question is not used
  Tensor passage_hidden;
  TagOutput tags;
  Tensor logits;  // correction logits, one row per prefix position
};

// Question encoder, passage encoder, tagging decoder and correction decoder.
// One embedding matrix feeds both encoders and the correction decoder and is
// reused (transposed) as the output projection.
class Model {
 public:
  Model(ModelConfig config, int vocab_size, int tag_count);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }
  int tag_count() const { return tag_count_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  const Parameter& embedding() const { return *embedding_; }
  const Parameter& tag_projection() const { return *tag_projection_; }

  // embedding(ids)·sqrt(d_model) + positions, then self-attention/FFN layers
  // with padded keys masked. Throws std::out_of_range for an id outside the
  // vocabulary.
  Tensor encode(Graph& graph, Sequence input, const std::vector<EncoderLayer>& stack) const;
  Tensor encode_question(Graph& graph, Sequence question) const;
  Tensor encode_passage(Graph& graph, Sequence passage) const;

  // `question_hidden` is ignored when the config disables the question.
  TagOutput tag_decode(Graph& graph, const Tensor& passage_hidden, const Tensor& question_hidden,
                       std::span<const std::uint8_t> passage_valid,
                       std::span<const std::uint8_t> question_valid) const;

  // Attends over [h_t | T]; `prefix` starts with BOS. Returns l × vocab.
  Tensor correction_forward(Graph& graph, std::span<const int> prefix, const TagOutput& tags,
                            std::span<const std::uint8_t> passage_valid) const;

  ForwardResult forward(Graph& graph, Sequence question, Sequence passage,
                        std::span<const int> prefix) const;

  // Argmax decoding from BOS until EOS or max_decode_len steps; returns the
  // tokens strictly between BOS and EOS.
  std::vector<int> greedy_decode(std::span<const int> question, std::span<const int> passage) const;

  // Argmax tag id per passage position.
  std::vector<int> predict_tags(std::span<const int> question, std::span<const int> passage) const;

 private:
  Matrix positions(int n) const;
  Tensor embed(Graph& graph, std::span<const int> ids) const;

  ModelConfig config_;
  blocks::BlockConfig block_;
  int vocab_size_;
  int tag_count_;
  ParameterSet params_;
  Parameter* embedding_ = nullptr;
  Parameter* tag_projection_ = nullptr;
  std::vector<EncoderLayer> question_encoder_;
  std::vector<EncoderLayer> passage_encoder_;
  std::vector<DecoderLayer> tagging_decoder_;
  std::vector<DecoderLayer> correction_decoder_;
  Matrix position_table_;
};

// Mean of -log T[i, gold_i] over positions with mask != 0. `denominator`
// overrides the count (used to average over a whole batch built from
// per-example graphs); 0 means the local count. Throws std::out_of_range for
// a gold id outside the tag alphabet.
Tensor tagging_loss(const Tensor& probs, std::span<const int> gold, std::span<const std::uint8_t> mask,
                    double denominator = 0.0);

// Mean token cross-entropy of logits against gold next tokens.
Tensor correction_loss(const Tensor& logits, std::span<const int> gold,
                       std::span<const std::uint8_t> mask, double denominator = 0.0);

// lambda · tag + correct.
Tensor joint_loss(const Tensor& tag, const Tensor& correct, double lambda);

// BOS followed by gold[0 .. n-2]: the teacher-forcing input for `gold`.
std::vector<int> shift_right(std::span<const int> gold);

}  // namespace qoie::model
