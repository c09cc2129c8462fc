#include "qoie/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace qoie::eval {

Words serialize_answer(const AnswerTuple& answer) {
  Words out = answer.subject;
  out.emplace_back(kSplitToken);
  out.insert(out.end(), answer.predicate.begin(), answer.predicate.end());
  for (const Words& arg : answer.arguments) {
    out.emplace_back(kSplitToken);
    out.insert(out.end(), arg.begin(), arg.end());
  }
  return out;
}

AnswerTuple parse_answer(const Words& words, std::size_t* malformed) {
  std::vector<Words> segments(1);
  for (const auto& w : words) {
    if (w == kSplitToken) {
      segments.emplace_back();
    } else {
      segments.back().push_back(w);
    }
  }
  if (segments.size() < 3) {
    if (malformed != nullptr) ++*malformed;
    segments.resize(3);
  }
  AnswerTuple out;
  out.subject = std::move(segments[0]);
  out.predicate = std::move(segments[1]);
  out.arguments.assign(std::make_move_iterator(segments.begin() + 2),
                       std::make_move_iterator(segments.end()));
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Words& words, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    ++counts[std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(i),
                                      words.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

Words join_arguments(const AnswerTuple& t) {
  Words out;
  for (std::size_t i = 0; i < t.arguments.size(); ++i) {
    if (i > 0) out.emplace_back(kSplitToken);
    out.insert(out.end(), t.arguments[i].begin(), t.arguments[i].end());
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

BleuResult bleu(const std::vector<Words>& candidates, const std::vector<Words>& references, int max_n) {
  if (candidates.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (candidates.size() != references.size()) {
    throw std::invalid_argument("bleu: " + std::to_string(candidates.size()) + " candidates for " +
                                std::to_string(references.size()) + " references");
  }
  if (max_n < 1) throw std::invalid_argument("bleu: max_n must be >= 1");

  const auto orders = static_cast<std::size_t>(max_n);
  BleuResult r;
  r.matches.assign(orders, 0);
  r.totals.assign(orders, 0);
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    r.candidate_length += candidates[s].size();
    r.reference_length += references[s].size();
    for (std::size_t n = 1; n <= orders; ++n) {
      const NgramCounts cand = count_ngrams(candidates[s], n);
      const NgramCounts ref = count_ngrams(references[s], n);
      for (const auto& [gram, count] : cand) {
        r.totals[n - 1] += count;
        auto it = ref.find(gram);
        if (it != ref.end()) r.matches[n - 1] += std::min(count, it->second);
      }
    }
  }

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < orders; ++n) {
    const double p = r.totals[n] == 0 ? 0.0
                                      : static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
    r.precisions.push_back(p);
    if (p == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  const double c = static_cast<double>(r.candidate_length);
  const double ref_len = static_cast<double>(r.reference_length);
  if (c == 0.0) {
    r.brevity_penalty = 0.0;
  } else {
    r.brevity_penalty = c < ref_len ? std::exp(1.0 - ref_len / c) : 1.0;
  }
  r.score = zero ? 0.0 : r.brevity_penalty * std::exp(log_sum / static_cast<double>(orders));
  return r;
}

BleuReport evaluate(const std::vector<AnswerTuple>& predictions, const std::vector<AnswerTuple>& golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(golds.size()) + " gold answers");
  }
  if (predictions.empty()) throw std::invalid_argument("evaluate: no examples");

  std::vector<Words> pa, ga, ps, gs, pp, gp, pg, gg;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    pa.push_back(serialize_answer(predictions[i]));
    ga.push_back(serialize_answer(golds[i]));
    ps.push_back(predictions[i].subject);
    gs.push_back(golds[i].subject);
    pp.push_back(predictions[i].predicate);
    gp.push_back(golds[i].predicate);
    pg.push_back(join_arguments(predictions[i]));
    gg.push_back(join_arguments(golds[i]));
  }
  BleuReport report;
  report.examples = predictions.size();
  report.answer = bleu(pa, ga, 4);
  report.subject = bleu(ps, gs, 1);
  report.predicate = bleu(pp, gp, 1);
  report.arguments = bleu(pg, gg, 1);
  return report;
}

std::string BleuReport::to_text() const {
  std::string out;
  out += "examples=" + std::to_string(examples) + "\n";
  out += "answer_bleu4=" + fmt(answer.score) + "\n";
  out += "subject_bleu1=" + fmt(subject.score) + "\n";
  out += "predicate_bleu1=" + fmt(predicate.score) + "\n";
  out += "arguments_bleu1=" + fmt(arguments.score) + "\n";
  for (std::size_t n = 0; n < answer.precisions.size(); ++n) {
    out += "answer_p" + std::to_string(n + 1) + "=" + fmt(answer.precisions[n]) + "\n";
  }
  out += "answer_brevity_penalty=" + fmt(answer.brevity_penalty) + "\n";
  out += "answer_candidate_length=" + std::to_string(answer.candidate_length) + "\n";
  out += "answer_reference_length=" + std::to_string(answer.reference_length) + "\n";
  return out;
}

nlohmann::json BleuReport::to_json() const {
  auto part = [](const BleuResult& r) {
    return nlohmann::json{{"score", r.score},
                          {"precisions", r.precisions},
                          {"brevity_penalty", r.brevity_penalty},
                          {"candidate_length", r.candidate_length},
                          {"reference_length", r.reference_length}};
  };
  return {{"examples", examples},
          {"answer_bleu4", answer.score},
          {"subject_bleu1", subject.score},
          {"predicate_bleu1", predicate.score},
          {"arguments_bleu1", arguments.score},
          {"answer", part(answer)},
          {"subject", part(subject)},
          {"predicate", part(predicate)},
          {"arguments", part(arguments)}};
}

}  // namespace qoie::eval
