#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qoie::tagscheme {

using Words = std::vector<std::string>;

inline constexpr int kDefaultMaxArguments = 4;

enum class Role : std::uint8_t { Outside, Subject, Predicate, Argument, Span };

// One semantic-BIO label. `Span` is the role-less B/I used by the
// BIO-only ablation; `Outside` is the single O tag.
struct SemanticTag {
  Role role = Role::Outside;
  int argument = 0;  // meaningful only for Role::Argument
  bool begin = false;

  static SemanticTag outside() { return {}; }
  static SemanticTag subject(bool b) { return {Role::Subject, 0, b}; }
  static SemanticTag predicate(bool b) { return {Role::Predicate, 0, b}; }
  static SemanticTag arg(int index, bool b) { return {Role::Argument, index, b}; }
  static SemanticTag span(bool b) { return {Role::Span, 0, b}; }

  bool is_outside() const { return role == Role::Outside; }
  // Same semantic role, ignoring B/I.
  bool same_role(const SemanticTag& other) const {
    return role == other.role && (role != Role::Argument || argument == other.argument);
  }
  SemanticTag with_begin(bool b) const {
    SemanticTag t = *this;
    t.begin = role != Role::Outside && b;
    return t;
  }

  friend bool operator==(const SemanticTag&, const SemanticTag&) = default;
};

// "S-B", "P-I", "A0-B", "O", and "B"/"I" for role-less tags.
std::string to_string(const SemanticTag& tag);
// Inverse of to_string; throws std::invalid_argument on anything else.
SemanticTag parse_tag(std::string_view text);

std::vector<std::string> to_strings(const std::vector<SemanticTag>& tags);
std::vector<SemanticTag> parse_tags(const std::vector<std::string>& texts);

// Ordered tag alphabet with a tag<->id bijection.
class TagVocab {
 public:
  // S-B, S-I, P-B, P-I, A0-B, A0-I, ..., A(K-1)-I, O. Throws for K < 1.
  static TagVocab semantic(int max_arguments);
  // B, I, O.
  static TagVocab bio_only();

  int size() const { return static_cast<int>(tags_.size()); }
  int max_arguments() const { return max_arguments_; }
  bool is_semantic() const { return semantic_; }

  const SemanticTag& tag(int id) const;
  // Throws std::out_of_range for a tag outside the alphabet.
  int id(const SemanticTag& tag) const;
  const std::vector<SemanticTag>& tags() const { return tags_; }

  // Maps a semantic tag into this alphabet: role-less for BIO-only, and
  // argument indices clamped to the last slot.
  SemanticTag project(const SemanticTag& tag) const;

 private:
  TagVocab() = default;
  std::vector<SemanticTag> tags_;
  int max_arguments_ = 0;
  bool semantic_ = true;
};

TagVocab build_tag_vocab(int max_arguments);

struct AnswerTuple {
  Words subject;
  Words predicate;
  std::vector<Words> arguments;

  friend bool operator==(const AnswerTuple&, const AnswerTuple&) = default;
};

struct AlignedExample {
  Words passage;
  std::vector<SemanticTag> tags;
};

// Warning counters surfaced by the CLI summary.
struct AlignStats {
  std::size_t examples = 0;
  std::size_t unmatched_fields = 0;
  std::size_t overflowed_arguments = 0;
};

struct TagViolation {
  std::size_t position;
  std::string message;
};

// Manufactures tagging ground truth by matching answer fields against the
// passage. Fields go arguments (longest first), subject, predicate; each
// field first takes every occurrence of each of its bigrams, then places the
// remaining words so that the matched positions span as few words as
// possible. Ties go to the leftmost span, then to the lexicographically
// smallest set of single-word positions. The predicate prefers a placement
// inside the stretch between subject and arguments when one exists. A
// position is never reused by a later field. Matching ignores ASCII case.
AlignedExample align(const AnswerTuple& answer, const Words& passage,
                     int max_arguments = kDefaultMaxArguments, AlignStats* stats = nullptr);

inline constexpr std::size_t kBruteForceMaxPassage = 14;

// Exhaustive reference for `align`: enumerates every single-word placement.
// Throws std::invalid_argument for passages longer than kBruteForceMaxPassage.
AlignedExample brute_force_align(const AnswerTuple& answer, const Words& passage,
                                 int max_arguments = kDefaultMaxArguments);

// Collects the words of each role in passage order. Missing roles give empty
// fields; trailing empty argument slots are dropped. Role-less tags are read
// as consecutive B/I runs: subject, predicate, then arguments.
AnswerTuple tags_to_tuple(const std::vector<SemanticTag>& tags, const Words& passage);

// Every I tag must follow a B or I of the same role.
std::vector<TagViolation> validate_tags(const std::vector<SemanticTag>& tags);

// Re-derives B/I so that each maximal run of one role starts with B.
std::vector<SemanticTag> rederive_boundaries(const std::vector<SemanticTag>& tags);

// Gold answers may carry more arguments than tag slots; surplus arguments are
// appended to the last slot.
AnswerTuple fold_arguments(const AnswerTuple& answer, int max_arguments, bool* overflowed = nullptr);

}  // namespace qoie::tagscheme
