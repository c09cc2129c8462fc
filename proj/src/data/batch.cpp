#include "qoie/data.hpp"

#include "qoie/eval.hpp"

#include <algorithm>

namespace qoie::data {

int PaddedIds::length(int r) const {
  const auto m = mask_row(r);
  return static_cast<int>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

PaddedIds PaddedIds::pack(const std::vector<std::vector<int>>& sequences, int pad_id) {
  PaddedIds out;
  out.rows = static_cast<int>(sequences.size());
  for (const auto& s : sequences) out.cols = std::max(out.cols, static_cast<int>(s.size()));
  const auto total = static_cast<std::size_t>(out.rows) * static_cast<std::size_t>(out.cols);
  out.ids.assign(total, pad_id);
  out.mask.assign(total, 0);
  for (int r = 0; r < out.rows; ++r) {
    const auto& s = sequences[static_cast<std::size_t>(r)];
    const auto base = static_cast<std::size_t>(r) * static_cast<std::size_t>(out.cols);
    std::copy(s.begin(), s.end(), out.ids.begin() + static_cast<std::ptrdiff_t>(base));
    std::fill_n(out.mask.begin() + static_cast<std::ptrdiff_t>(base), s.size(), std::uint8_t{1});
  }
  return out;
}

EncodedExample encode_example(const Example& example, const tokenizer::BpeModel& bpe,
                              const tagscheme::TagVocab& vocab, int k_args, tagscheme::AlignStats* stats) {
  const tagscheme::AlignedExample aligned = tagscheme::align(example.answer, example.passage, k_args, stats);
  std::vector<tagscheme::SemanticTag> word_tags;
  word_tags.reserve(aligned.tags.size());
  for (const auto& t : aligned.tags) word_tags.push_back(vocab.project(t));

  EncodedExample out;
  out.question = bpe.encode(example.question).ids;
  const tokenizer::SubwordSequence passage = bpe.encode(example.passage);
  out.passage = passage.ids;
  for (const auto& t : tokenizer::project_tags(word_tags, passage)) out.tags.push_back(vocab.id(t));

  out.answer_words = eval::serialize_answer(example.answer);
  out.answer = bpe.encode(out.answer_words).ids;
  out.answer.push_back(tokenizer::kEos);
  return out;
}

std::vector<EncodedExample> encode_corpus(const std::vector<Example>& examples, const tokenizer::BpeModel& bpe,
                                          const tagscheme::TagVocab& vocab, int k_args,
                                          tagscheme::AlignStats* stats) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(encode_example(e, bpe, vocab, k_args, stats));
  return out;
}

std::vector<Batch> batchify(const std::vector<EncodedExample>& encoded, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batchify: batch_size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < encoded.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(encoded.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<std::vector<int>> q, p, t, a;
    Batch b;
    for (std::size_t i = start; i < stop; ++i) {
      q.push_back(encoded[i].question);
      p.push_back(encoded[i].passage);
      t.push_back(encoded[i].tags);
      a.push_back(encoded[i].answer);
      b.example_index.push_back(i);
    }
    b.question = PaddedIds::pack(q, tokenizer::kPad);
    b.passage = PaddedIds::pack(p, tokenizer::kPad);
    b.tags = PaddedIds::pack(t, -1);
    b.answer = PaddedIds::pack(a, tokenizer::kPad);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace qoie::data
