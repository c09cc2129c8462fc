#include "qoie/tagscheme.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>

namespace qoie::tagscheme {

namespace {

std::string lowered(const std::string& w) {
  std::string out = w;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Field {
  SemanticTag role;
  Words words;
};

// Arguments longest first (stable on index), then subject, then predicate.
std::vector<Field> processing_order(const AnswerTuple& answer) {
  std::vector<Field> args;
  for (std::size_t i = 0; i < answer.arguments.size(); ++i) {
    args.push_back({SemanticTag::arg(static_cast<int>(i), true), answer.arguments[i]});
  }
  std::stable_sort(args.begin(), args.end(),
                   [](const Field& a, const Field& b) { return a.words.size() > b.words.size(); });
  args.push_back({SemanticTag::subject(true), answer.subject});
  args.push_back({SemanticTag::predicate(true), answer.predicate});
  for (auto& f : args) {
    for (auto& w : f.words) w = lowered(w);
  }
  return args;
}

struct Interval {
  int lo;
  int hi;
};

// The stretch between the matched subject and the matched arguments.
std::optional<Interval> predicate_zone(const std::vector<std::optional<SemanticTag>>& owner) {
  int s_lo = std::numeric_limits<int>::max(), s_hi = -1;
  int a_lo = std::numeric_limits<int>::max(), a_hi = -1;
  for (int p = 0; p < static_cast<int>(owner.size()); ++p) {
    if (!owner[p]) continue;
    if (owner[p]->role == Role::Subject) {
      s_lo = std::min(s_lo, p);
      s_hi = std::max(s_hi, p);
    } else if (owner[p]->role == Role::Argument) {
      a_lo = std::min(a_lo, p);
      a_hi = std::max(a_hi, p);
    }
  }
  if (s_hi < 0 || a_hi < 0) return std::nullopt;
  if (s_lo <= a_hi) return Interval{s_lo, a_hi};
  return Interval{a_lo, s_hi};
}

// Smallest window [lo, hi] inside `zone` that contains every fixed position
// and at least need[w] free occurrences of each word w. Leftmost among equal
// widths. Returns nullopt when no window inside the zone qualifies.
std::optional<Interval> tightest_window(const std::vector<int>& word_at,
                                        const std::vector<bool>& free_position,
                                        const std::vector<int>& need, int fixed_lo, int fixed_hi,
                                        Interval zone) {
  const int distinct = static_cast<int>(need.size());
  std::optional<Interval> best;
  for (int lo = zone.lo; lo <= zone.hi; ++lo) {
    if (fixed_hi >= 0 && lo > fixed_lo) break;
    std::vector<int> have(need.size(), 0);
    int satisfied = 0;
    for (int w = 0; w < distinct; ++w) satisfied += need[w] == 0 ? 1 : 0;
    for (int hi = lo; hi <= zone.hi; ++hi) {
      if (best && hi - lo >= best->hi - best->lo) break;
      const int w = word_at[hi];
      if (w >= 0 && free_position[hi] && ++have[w] == need[w]) ++satisfied;
      if (satisfied == distinct && (fixed_hi < 0 || hi >= fixed_hi)) {
        best = Interval{lo, hi};
        break;
      }
    }
  }
  return best;
}

}  // namespace

AlignedExample align(const AnswerTuple& raw_answer, const Words& passage, int max_arguments,
                     AlignStats* stats) {
  bool overflowed = false;
  const AnswerTuple answer = fold_arguments(raw_answer, max_arguments, &overflowed);
  const int m = static_cast<int>(passage.size());
  Words text;
  text.reserve(passage.size());
  for (const auto& w : passage) text.push_back(lowered(w));

  std::vector<std::optional<SemanticTag>> owner(passage.size());
  std::size_t unmatched = 0;

  for (const Field& field : processing_order(answer)) {
    const Words& fw = field.words;
    const int len = static_cast<int>(fw.size());
    std::vector<bool> mine(passage.size(), false);
    std::vector<bool> covered(fw.size(), false);

    for (int j = 0; j + 1 < len; ++j) {
      for (int p = 0; p + 1 < m; ++p) {
        if (text[p] == fw[j] && text[p + 1] == fw[j + 1] && !owner[p] && !owner[p + 1]) {
          mine[p] = mine[p + 1] = true;
          covered[j] = covered[j + 1] = true;
        }
      }
    }

    // Distinct uncovered words and how many of each can actually be placed.
    std::map<std::string, int> word_index;
    std::vector<int> need;
    for (int j = 0; j < len; ++j) {
      if (covered[j]) continue;
      auto [it, inserted] = word_index.emplace(fw[j], static_cast<int>(need.size()));
      if (inserted) need.push_back(0);
      ++need[it->second];
    }
    std::vector<int> word_at(passage.size(), -1);
    std::vector<bool> free_position(passage.size(), false);
    std::vector<int> available(need.size(), 0);
    for (int p = 0; p < m; ++p) {
      auto it = word_index.find(text[p]);
      if (it == word_index.end()) continue;
      word_at[p] = it->second;
      free_position[p] = !owner[p] && !mine[p];
      if (free_position[p]) ++available[it->second];
    }
    int placeable = 0;
    for (std::size_t w = 0; w < need.size(); ++w) {
      need[w] = std::min(need[w], available[w]);
      placeable += need[w];
    }

    if (placeable > 0) {
      int fixed_lo = m, fixed_hi = -1;
      for (int p = 0; p < m; ++p) {
        if (mine[p]) {
          fixed_lo = std::min(fixed_lo, p);
          fixed_hi = std::max(fixed_hi, p);
        }
      }
      std::optional<Interval> window;
      if (field.role.role == Role::Predicate) {
        if (auto zone = predicate_zone(owner)) {
          window = tightest_window(word_at, free_position, need, fixed_lo, fixed_hi, *zone);
        }
      }
      if (!window) {
        window = tightest_window(word_at, free_position, need, fixed_lo, fixed_hi, {0, m - 1});
      }
      // Leftmost occurrences inside the window.
      std::vector<int> taken(need.size(), 0);
      for (int p = window->lo; p <= window->hi; ++p) {
        const int w = word_at[p];
        if (w >= 0 && free_position[p] && taken[w] < need[w]) {
          ++taken[w];
          mine[p] = true;
        }
      }
    }

    bool any = false;
    for (int p = 0; p < m; ++p) {
      if (mine[p]) {
        owner[p] = field.role;
        any = true;
      }
    }
    if (!any) ++unmatched;
  }

  AlignedExample out;
  out.passage = passage;
  out.tags.reserve(passage.size());
  for (const auto& o : owner) out.tags.push_back(o ? *o : SemanticTag::outside());
  out.tags = rederive_boundaries(out.tags);

  if (stats != nullptr) {
    ++stats->examples;
    stats->unmatched_fields += unmatched;
    if (overflowed) ++stats->overflowed_arguments;
  }
  return out;
}

}  // namespace qoie::tagscheme
