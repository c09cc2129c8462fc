#pragma once

#include "qoie/tagscheme.hpp"
#include "qoie/tokenizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoie::data {

using tagscheme::AnswerTuple;
using tagscheme::Words;

struct Example {
  Words question;
  Words passage;
  AnswerTuple answer;

  friend bool operator==(const Example&, const Example&) = default;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Whitespace tokenization with ASCII lowercasing.
Words split_words(const std::string& text);
std::string join_words(const Words& words);

// {"question": str, "passage": str,
//  "answer": {"subject": str, "predicate": str, "arguments": [str, ...]}}
Example example_from_json(const nlohmann::json& j);
nlohmann::json example_to_json(const Example& e);
nlohmann::json answer_to_json(const AnswerTuple& a);
AnswerTuple answer_from_json(const nlohmann::json& j);

// Throws DataError naming the 1-based line of the first malformed record,
// including an empty "arguments" array.
std::vector<Example> load_jsonl(const std::filesystem::path& path);
std::vector<Example> parse_jsonl(std::istream& in);
void write_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples);

enum class Profile { Basic, Insertion, Ambiguous };

// "basic" | "insertion" | "ambiguous"; throws std::invalid_argument otherwise.
Profile parse_profile(const std::string& name);
std::string profile_name(Profile p);

// Templated synthetic corpus, reproducible from the seed on any platform.
//   basic      answers are exact passage sub-spans
//   insertion  every answer carries a function word absent from the passage
//   ambiguous  consecutive pairs share a passage but ask about different facts
std::vector<Example> gen_synthetic(std::uint64_t seed, int count, Profile profile);

struct CorpusSplit {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
};

// Seeded shuffle, then 8:1:1.
CorpusSplit split_811(const std::vector<Example>& examples, std::uint64_t seed);

// Rows of equal length, right-padded with PAD (or -1 for labels).
struct PaddedIds {
  int rows = 0;
  int cols = 0;
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;

  std::span<const int> row(int r) const { return {ids.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const std::uint8_t> mask_row(int r) const {
    return {mask.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  int length(int r) const;

  static PaddedIds pack(const std::vector<std::vector<int>>& sequences, int pad_id);
};

// Unpadded model inputs for one example.
struct EncodedExample {
  std::vector<int> question;
  std::vector<int> passage;
  std::vector<int> tags;    // subword tag ids, one per passage subword
  std::vector<int> answer;  // serialized gold answer followed by EOS
  Words answer_words;       // serialized gold answer, word level
};

struct Batch {
  PaddedIds question;
  PaddedIds passage;
  PaddedIds tags;
  PaddedIds answer;
  std::vector<std::size_t> example_index;

  int size() const { return passage.rows; }
};

// Aligns at word level, encodes with BPE, projects tags onto subwords, and
// serializes the answer with <split> and a trailing EOS.
EncodedExample encode_example(const Example& example, const tokenizer::BpeModel& bpe,
                              const tagscheme::TagVocab& vocab, int k_args,
                              tagscheme::AlignStats* stats = nullptr);

std::vector<EncodedExample> encode_corpus(const std::vector<Example>& examples,
                                          const tokenizer::BpeModel& bpe,
                                          const tagscheme::TagVocab& vocab, int k_args,
                                          tagscheme::AlignStats* stats = nullptr);

// Consecutive groups of `batch_size` in corpus order; the last may be short.
std::vector<Batch> batchify(const std::vector<EncodedExample>& encoded, int batch_size);

}  // namespace qoie::data
