#pragma once

#include "qoie/model/model.hpp"
#include "qoie/numerics/gradcheck.hpp"
#include "qoie/rng.hpp"
#include "qoie/tokenizer.hpp"

#include <vector>

namespace qoie::testing {

// d=16, 2 heads, one layer per stack, vocabulary 20, 9 tags (K=2).
inline model::ModelConfig tiny_config(std::uint64_t seed = 1) {
  model::ModelConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.n_e = c.n_t = c.n_c = 1;
  c.k_args = 2;
  c.seed = seed;
  return c;
}

inline constexpr int kTinyVocab = 20;
inline constexpr int kTinyTags = 9;

// Non-special token ids.
inline std::vector<int> random_ids(Rng& rng, int n, int vocab = kTinyVocab) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(tokenizer::kSpecialCount +
                  static_cast<int>(rng.below(static_cast<std::uint32_t>(vocab - tokenizer::kSpecialCount))));
  }
  return out;
}

inline std::vector<int> random_tags(Rng& rng, int n, int tags = kTinyTags) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) out.push_back(static_cast<int>(rng.below(static_cast<std::uint32_t>(tags))));
  return out;
}

// Joint-loss gradient check over every parameter of the tiny model with
// m=6 passage, n=4 question and l=5 answer tokens.
inline numerics::GradCheckResult tiny_joint_gradcheck(std::uint64_t seed = 1) {
  model::Model net(tiny_config(seed), kTinyVocab, kTinyTags);
  Rng rng(seed, 99);
  const auto question = random_ids(rng, 4);
  const auto passage = random_ids(rng, 6);
  auto answer = random_ids(rng, 4);
  answer.push_back(tokenizer::kEos);
  const auto tags = random_tags(rng, 6);
  const std::vector<std::uint8_t> q_valid(4, 1), p_valid(6, 1), a_valid(5, 1);
  const std::vector<int> prefix = model::shift_right(answer);
  auto f = [&](numerics::Graph& g) {
    const auto fwd = net.forward(g, {question, q_valid}, {passage, p_valid}, prefix);
    return model::joint_loss(model::tagging_loss(fwd.tags.probs, tags, p_valid),
                             model::correction_loss(fwd.logits, answer, a_valid), net.config().lambda);
  };
  return numerics::finite_difference_check(f, net.params(), 1e-5);
}

}  // namespace qoie::testing
