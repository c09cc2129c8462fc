#include "qoie/model/model.hpp"

#include "qoie/rng.hpp"
#include "qoie/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qoie::model {

namespace {

constexpr int kPositionCache = 256;

EncoderLayer make_encoder_layer(ParameterSet& params, const std::string& prefix,
                                const blocks::BlockConfig& b, Rng& rng) {
  EncoderLayer layer;
  layer.self_attn = blocks::make_attention(params, prefix + ".attn", b.d_model, b.d_model, b.d_model,
                                           b.heads, rng);
  layer.ln1 = blocks::make_layer_norm(params, prefix + ".ln1", b.d_model);
  layer.ffn = blocks::make_feed_forward(params, prefix + ".ffn", b.d_model, b.d_ff, rng);
  layer.ln2 = blocks::make_layer_norm(params, prefix + ".ln2", b.d_model);
  return layer;
}

DecoderLayer make_decoder_layer(ParameterSet& params, const std::string& prefix,
                                const blocks::BlockConfig& b, const char* cross_name, int cross_in,
                                Rng& rng) {
  DecoderLayer layer;
  layer.self_attn = blocks::make_attention(params, prefix + ".self_attn", b.d_model, b.d_model,
                                           b.d_model, b.heads, rng);
  layer.ln1 = blocks::make_layer_norm(params, prefix + ".ln1", b.d_model);
  if (cross_in > 0) {
    layer.cross_attn = blocks::make_attention(params, prefix + "." + cross_name, b.d_model, cross_in,
                                              b.d_model, b.heads, rng);
    layer.ln2 = blocks::make_layer_norm(params, prefix + ".ln2", b.d_model);
  }
  layer.ffn = blocks::make_feed_forward(params, prefix + ".ffn", b.d_model, b.d_ff, rng);
  layer.ln3 = blocks::make_layer_norm(params, prefix + ".ln3", b.d_model);
  return layer;
}

std::vector<std::uint8_t> all_valid(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

}  // namespace

Model::Model(ModelConfig config, int vocab_size, int tag_count)
    : config_(std::move(config)), block_(config_.block()), vocab_size_(vocab_size),
      tag_count_(tag_count) {
  config_.validate();
  if (vocab_size_ <= tokenizer::kSpecialCount) {
    throw std::invalid_argument("model vocabulary must exceed the special tokens");
  }
  if (tag_count_ < 2) throw std::invalid_argument("tag alphabet needs at least two tags");

  Rng rng(config_.seed, 0x9e3779b97f4a7c15ULL);
  const int d = config_.d_model;
  const double limit = std::sqrt(3.0 / d);
  Matrix table(vocab_size_, d);
  for (numerics::Index i = 0; i < table.size(); ++i) table.data()[i] = rng.uniform(-limit, limit);
  embedding_ = &params_.add("embedding.shared", std::move(table));

  if (config_.use_question) {
    for (int i = 0; i < config_.n_e; ++i) {
      question_encoder_.push_back(
          make_encoder_layer(params_, "enc_q.layer" + std::to_string(i), block_, rng));
    }
  }
  for (int i = 0; i < config_.n_e; ++i) {
    passage_encoder_.push_back(make_encoder_layer(params_, "enc_p.layer" + std::to_string(i), block_, rng));
  }
  for (int i = 0; i < config_.n_t; ++i) {
    tagging_decoder_.push_back(make_decoder_layer(params_, "tag_dec.layer" + std::to_string(i), block_,
                                                  "cross_attn", config_.use_question ? d : 0, rng));
  }
  const double t_limit = std::sqrt(6.0 / (d + tag_count_));
  Matrix wt(d, tag_count_);
  for (numerics::Index i = 0; i < wt.size(); ++i) wt.data()[i] = rng.uniform(-t_limit, t_limit);
  tag_projection_ = &params_.add("tag_dec.w_t", std::move(wt));

  for (int i = 0; i < config_.n_c; ++i) {
    correction_decoder_.push_back(make_decoder_layer(params_, "corr_dec.layer" + std::to_string(i),
                                                     block_, "memory_attn", d + tag_count_, rng));
  }
  position_table_ = blocks::position_embedding(kPositionCache, d);
}

Matrix Model::positions(int n) const {
  if (n <= position_table_.rows()) return position_table_.topRows(n);
  return blocks::position_embedding(n, config_.d_model);
}

Tensor Model::embed(Graph& graph, std::span<const int> ids) const {
  for (int id : ids) {
    if (id < 0 || id >= vocab_size_) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(vocab_size_));
    }
  }
  const Tensor rows = numerics::gather_rows(graph.bind(*embedding_), ids);
  const Tensor scaled = numerics::scale(rows, std::sqrt(static_cast<double>(config_.d_model)));
  return numerics::add(scaled, Tensor::constant(positions(static_cast<int>(ids.size()))));
}

Tensor Model::encode(Graph& graph, Sequence input, const std::vector<EncoderLayer>& stack) const {
  if (input.ids.empty()) throw std::invalid_argument("encode: empty sequence");
  if (input.valid.size() != input.ids.size()) throw std::invalid_argument("encode: mask length mismatch");
  Tensor h = embed(graph, input.ids);
  const auto n = static_cast<int>(input.ids.size());
  const numerics::Mask mask = blocks::key_padding_mask(n, input.valid);
  for (const EncoderLayer& layer : stack) {
    h = blocks::mh_block(graph, h, h, h, &mask, layer.self_attn, layer.ln1, block_);
    h = blocks::ffn_block(graph, h, layer.ffn, layer.ln2, block_);
  }
  return h;
}

Tensor Model::encode_question(Graph& graph, Sequence question) const {
  return encode(graph, question, question_encoder_);
}

Tensor Model::encode_passage(Graph& graph, Sequence passage) const {
  return encode(graph, passage, passage_encoder_);
}

TagOutput Model::tag_decode(Graph& graph, const Tensor& passage_hidden, const Tensor& question_hidden,
                            std::span<const std::uint8_t> passage_valid,
                            std::span<const std::uint8_t> question_valid) const {
  const auto m = static_cast<int>(passage_hidden.rows());
  const numerics::Mask self_mask = blocks::key_padding_mask(m, passage_valid);
  numerics::Mask cross_mask;
  if (config_.use_question) cross_mask = blocks::key_padding_mask(m, question_valid);

  Tensor h = passage_hidden;
  for (const DecoderLayer& layer : tagging_decoder_) {
    h = blocks::mh_block(graph, h, h, h, &self_mask, layer.self_attn, layer.ln1, block_);
    if (config_.use_question) {
      h = blocks::mh_block(graph, h, question_hidden, question_hidden, &cross_mask, layer.cross_attn,
                           layer.ln2, block_);
    }
    h = blocks::ffn_block(graph, h, layer.ffn, layer.ln3, block_);
  }
  TagOutput out;
  out.hidden = h;
  out.logits = numerics::matmul(h, graph.bind(*tag_projection_));
  out.probs = numerics::softmax_rows(out.logits);
  return out;
}

Tensor Model::correction_forward(Graph& graph, std::span<const int> prefix, const TagOutput& tags,
                                 std::span<const std::uint8_t> passage_valid) const {
  if (prefix.empty()) throw std::invalid_argument("correction_forward: empty prefix");
  const Tensor parts[] = {tags.hidden, tags.probs};
  const Tensor memory = numerics::concat_cols(parts);
  const auto l = static_cast<int>(prefix.size());
  const numerics::Mask causal = blocks::causal_mask(l);
  const numerics::Mask memory_mask = blocks::key_padding_mask(l, passage_valid);

  Tensor h = embed(graph, prefix);
  for (const DecoderLayer& layer : correction_decoder_) {
    h = blocks::mh_block(graph, h, h, h, &causal, layer.self_attn, layer.ln1, block_);
    h = blocks::mh_block(graph, h, memory, memory, &memory_mask, layer.cross_attn, layer.ln2, block_);
    h = blocks::ffn_block(graph, h, layer.ffn, layer.ln3, block_);
  }
  return numerics::matmul_transposed(h, graph.bind(*embedding_));
}

ForwardResult Model::forward(Graph& graph, Sequence question, Sequence passage,
                             std::span<const int> prefix) const {
  ForwardResult out;
  if (config_.use_question) out.question_hidden = encode_question(graph, question);
  out.passage_hidden = encode_passage(graph, passage);
  out.tags = tag_decode(graph, out.passage_hidden, out.question_hidden, passage.valid, question.valid);
  if (!prefix.empty()) out.logits = correction_forward(graph, prefix, out.tags, passage.valid);
  return out;
}

std::vector<int> Model::greedy_decode(std::span<const int> question, std::span<const int> passage) const {
  Graph graph(false);
  const auto q_valid = all_valid(question.size());
  const auto p_valid = all_valid(passage.size());
  Tensor q_hidden;
  if (config_.use_question) q_hidden = encode_question(graph, {question, q_valid});
  const Tensor p_hidden = encode_passage(graph, {passage, p_valid});
  const TagOutput tags = tag_decode(graph, p_hidden, q_hidden, p_valid, q_valid);

  std::vector<int> prefix{tokenizer::kBos};
  std::vector<int> out;
  for (int step = 0; step < config_.max_decode_len; ++step) {
    const Tensor logits = correction_forward(graph, prefix, tags, p_valid);
    numerics::Index next = 0;
    logits.value().row(logits.rows() - 1).maxCoeff(&next);
    if (next == tokenizer::kEos) break;
    out.push_back(static_cast<int>(next));
    prefix.push_back(static_cast<int>(next));
  }
  return out;
}

std::vector<int> Model::predict_tags(std::span<const int> question, std::span<const int> passage) const {
  Graph graph(false);
  const auto q_valid = all_valid(question.size());
  const auto p_valid = all_valid(passage.size());
  const ForwardResult fwd = forward(graph, {question, q_valid}, {passage, p_valid}, {});
  std::vector<int> out(passage.size());
  for (numerics::Index r = 0; r < fwd.tags.probs.rows(); ++r) {
    numerics::Index best = 0;
    fwd.tags.probs.value().row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

namespace {

std::vector<double> mask_weights(std::span<const std::uint8_t> mask, double denominator,
                                 const char* op) {
  double count = 0.0;
  for (auto m : mask) count += m != 0 ? 1.0 : 0.0;
  const double denom = denominator > 0.0 ? denominator : count;
  if (denom <= 0.0) throw std::invalid_argument(std::string(op) + ": no unmasked positions");
  std::vector<double> w(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) w[i] = mask[i] != 0 ? 1.0 / denom : 0.0;
  return w;
}

}  // namespace

Tensor tagging_loss(const Tensor& probs, std::span<const int> gold, std::span<const std::uint8_t> mask,
                    double denominator) {
  if (mask.size() != gold.size()) throw std::invalid_argument("tagging_loss: mask/gold length mismatch");
  const auto w = mask_weights(mask, denominator, "tagging_loss");
  return numerics::nll_of_probabilities(probs, gold, w);
}

Tensor correction_loss(const Tensor& logits, std::span<const int> gold,
                       std::span<const std::uint8_t> mask, double denominator) {
  if (mask.size() != gold.size()) {
    throw std::invalid_argument("correction_loss: mask/gold length mismatch");
  }
  const auto w = mask_weights(mask, denominator, "correction_loss");
  return numerics::cross_entropy(logits, gold, w);
}

Tensor joint_loss(const Tensor& tag, const Tensor& correct, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("joint_loss: lambda must be >= 0");
  return numerics::add(numerics::scale(tag, lambda), correct);
}

std::vector<int> shift_right(std::span<const int> gold) {
  std::vector<int> out{tokenizer::kBos};
  if (!gold.empty()) out.insert(out.end(), gold.begin(), gold.end() - 1);
  return out;
}

}  // namespace qoie::model
