#include "qoie/tagscheme.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace qoie::tagscheme {

namespace {

std::string fold_case(std::string w) {
  std::transform(w.begin(), w.end(), w.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return w;
}

// Candidate placement of a field's leftover words, ranked by
// (placed count desc, span width asc, span start asc, sorted positions asc).
struct Placement {
  std::vector<int> positions;  // sorted
  int lo = 0;
  int hi = -1;
};

bool better(const Placement& a, const Placement& b) {
  if (a.positions.size() != b.positions.size()) return a.positions.size() > b.positions.size();
  const int wa = a.hi - a.lo, wb = b.hi - b.lo;
  if (wa != wb) return wa < wb;
  if (a.lo != b.lo) return a.lo < b.lo;
  return a.positions < b.positions;
}

class Enumerator {
 public:
  Enumerator(const Words& text, const std::vector<std::string>& leftovers,
             const std::vector<bool>& blocked, const std::vector<int>& fixed)
      : text_(text), leftovers_(leftovers), blocked_(blocked), fixed_(fixed) {}

  std::vector<Placement> all() {
    std::vector<int> chosen;
    std::vector<bool> used(text_.size(), false);
    recurse(0, chosen, used);
    return out_;
  }

 private:
  void recurse(std::size_t j, std::vector<int>& chosen, std::vector<bool>& used) {
    if (j == leftovers_.size()) {
      Placement p;
      p.positions = chosen;
      std::sort(p.positions.begin(), p.positions.end());
      std::vector<int> span = p.positions;
      span.insert(span.end(), fixed_.begin(), fixed_.end());
      if (!span.empty()) {
        p.lo = *std::min_element(span.begin(), span.end());
        p.hi = *std::max_element(span.begin(), span.end());
      }
      out_.push_back(std::move(p));
      return;
    }
    recurse(j + 1, chosen, used);  // leave this word unplaced
    for (std::size_t pos = 0; pos < text_.size(); ++pos) {
      if (used[pos] || blocked_[pos] || text_[pos] != leftovers_[j]) continue;
      used[pos] = true;
      chosen.push_back(static_cast<int>(pos));
      recurse(j + 1, chosen, used);
      chosen.pop_back();
      used[pos] = false;
    }
  }

  const Words& text_;
  const std::vector<std::string>& leftovers_;
  const std::vector<bool>& blocked_;
  const std::vector<int>& fixed_;
  std::vector<Placement> out_;
};

}  // namespace

AlignedExample brute_force_align(const AnswerTuple& raw_answer, const Words& passage,
                                 int max_arguments) {
  if (passage.size() > kBruteForceMaxPassage) {
    throw std::invalid_argument("brute_force_align: passage of " + std::to_string(passage.size()) +
                                " words exceeds the limit of " +
                                std::to_string(kBruteForceMaxPassage));
  }
  const AnswerTuple answer = fold_arguments(raw_answer, max_arguments);
  Words text;
  for (const auto& w : passage) text.push_back(fold_case(w));
  const int m = static_cast<int>(text.size());

  std::vector<std::pair<SemanticTag, Words>> fields;
  std::vector<std::size_t> arg_order(answer.arguments.size());
  for (std::size_t i = 0; i < arg_order.size(); ++i) arg_order[i] = i;
  std::stable_sort(arg_order.begin(), arg_order.end(), [&](std::size_t a, std::size_t b) {
    return answer.arguments[a].size() > answer.arguments[b].size();
  });
  for (std::size_t i : arg_order) {
    fields.emplace_back(SemanticTag::arg(static_cast<int>(i), true), answer.arguments[i]);
  }
  fields.emplace_back(SemanticTag::subject(true), answer.subject);
  fields.emplace_back(SemanticTag::predicate(true), answer.predicate);

  std::vector<SemanticTag> role(passage.size(), SemanticTag::outside());
  for (auto& [tag, raw_words] : fields) {
    Words words;
    for (const auto& w : raw_words) words.push_back(fold_case(w));

    std::vector<bool> blocked(passage.size());
    for (int p = 0; p < m; ++p) blocked[p] = !role[p].is_outside();

    std::vector<int> fixed;
    std::vector<bool> word_covered(words.size(), false);
    for (std::size_t j = 0; j + 1 < words.size(); ++j) {
      for (int p = 0; p + 1 < m; ++p) {
        if (blocked[p] || blocked[p + 1]) continue;
        if (text[p] != words[j] || text[p + 1] != words[j + 1]) continue;
        fixed.push_back(p);
        fixed.push_back(p + 1);
        word_covered[j] = word_covered[j + 1] = true;
      }
    }
    std::sort(fixed.begin(), fixed.end());
    fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());

    std::vector<std::string> leftovers;
    for (std::size_t j = 0; j < words.size(); ++j) {
      if (!word_covered[j]) leftovers.push_back(words[j]);
    }
    std::vector<bool> unavailable = blocked;
    for (int p : fixed) unavailable[p] = true;

    std::vector<Placement> candidates = Enumerator(text, leftovers, unavailable, fixed).all();
    std::size_t most = 0;
    for (const auto& c : candidates) most = std::max(most, c.positions.size());
    std::erase_if(candidates, [most](const Placement& c) { return c.positions.size() != most; });

    if (tag.role == Role::Predicate) {
      std::vector<int> s, a;
      for (int p = 0; p < m; ++p) {
        if (role[p].role == Role::Subject) s.push_back(p);
        if (role[p].role == Role::Argument) a.push_back(p);
      }
      if (!s.empty() && !a.empty()) {
        int lo = s.front(), hi = a.back();
        if (lo > hi) {
          lo = a.front();
          hi = s.back();
        }
        std::vector<Placement> inside;
        for (const auto& c : candidates) {
          if (c.lo >= lo && c.hi <= hi) inside.push_back(c);
        }
        if (!inside.empty() && most > 0) candidates = std::move(inside);
      }
    }

    const Placement* best = nullptr;
    for (const auto& c : candidates) {
      if (best == nullptr || better(c, *best)) best = &c;
    }
    for (int p : fixed) role[p] = tag;
    if (best != nullptr) {
      for (int p : best->positions) role[p] = tag;
    }
  }

  AlignedExample out;
  out.passage = passage;
  for (int p = 0; p < m; ++p) {
    const bool starts = p == 0 || !role[p - 1].same_role(role[p]);
    out.tags.push_back(role[p].with_begin(starts));
  }
  return out;
}

}  // namespace qoie::tagscheme
