#pragma once

#include "qoie/tagscheme.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace qoie::eval {

using tagscheme::AnswerTuple;
using tagscheme::Words;

inline constexpr const char* kSplitToken = "<split>";

// subject <split> predicate <split> arg_1 <split> ... <split> arg_k.
// Empty fields keep their delimiters.
Words serialize_answer(const AnswerTuple& answer);

// First segment is the subject, the second the predicate, the rest
// arguments. With fewer than two delimiters the missing fields come back
// empty and `*malformed` (when given) is incremented.
AnswerTuple parse_answer(const Words& words, std::size_t* malformed = nullptr);

struct BleuResult {
  double score = 0.0;
  std::vector<double> precisions;  // p_1 .. p_max_n
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
};

// Corpus-level BLEU with one reference per candidate: clipped n-gram counts
// summed over the corpus, unsmoothed geometric mean, brevity penalty
// exp(1 - r/c) when c < r. A precision with no candidate n-grams is 0.
// Throws std::invalid_argument for an empty corpus, unequal counts, or
// max_n < 1.
BleuResult bleu(const std::vector<Words>& candidates, const std::vector<Words>& references, int max_n);

struct BleuReport {
  BleuResult answer;     // BLEU-4 over serialized answers
  BleuResult subject;    // BLEU-1
  BleuResult predicate;  // BLEU-1
  BleuResult arguments;  // BLEU-1 over arguments joined by <split>
  std::size_t examples = 0;

  double answer_bleu4() const { return answer.score; }
  double subject_bleu1() const { return subject.score; }
  double predicate_bleu1() const { return predicate.score; }
  double arguments_bleu1() const { return arguments.score; }

  // Stable "key=value" lines.
  std::string to_text() const;
  nlohmann::json to_json() const;
};

// Throws std::invalid_argument when the counts differ or are zero.
BleuReport evaluate(const std::vector<AnswerTuple>& predictions, const std::vector<AnswerTuple>& golds);

}  // namespace qoie::eval
