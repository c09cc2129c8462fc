#include "qoie/tagscheme.hpp"

#include <charconv>
#include <stdexcept>

namespace qoie::tagscheme {

std::string to_string(const SemanticTag& tag) {
  const char* boundary = tag.begin ? "B" : "I";
  switch (tag.role) {
    case Role::Outside:
      return "O";
    case Role::Subject:
      return std::string("S-") + boundary;
    case Role::Predicate:
      return std::string("P-") + boundary;
    case Role::Argument:
      return "A" + std::to_string(tag.argument) + "-" + boundary;
    case Role::Span:
      return boundary;
  }
  return "O";
}

SemanticTag parse_tag(std::string_view text) {
  if (text == "O") return SemanticTag::outside();
  if (text == "B") return SemanticTag::span(true);
  if (text == "I") return SemanticTag::span(false);
  if (text.size() >= 3 && text[text.size() - 2] == '-') {
    const char boundary = text.back();
    if (boundary == 'B' || boundary == 'I') {
      const bool b = boundary == 'B';
      const std::string_view role = text.substr(0, text.size() - 2);
      if (role == "S") return SemanticTag::subject(b);
      if (role == "P") return SemanticTag::predicate(b);
      if (role.size() >= 2 && role[0] == 'A') {
        int index = -1;
        const auto digits = role.substr(1);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && index >= 0 &&
            (digits.size() == 1 || digits[0] != '0')) {
          return SemanticTag::arg(index, b);
        }
      }
    }
  }
  throw std::invalid_argument("not a tag: '" + std::string(text) + "'");
}

std::vector<std::string> to_strings(const std::vector<SemanticTag>& tags) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(to_string(t));
  return out;
}

std::vector<SemanticTag> parse_tags(const std::vector<std::string>& texts) {
  std::vector<SemanticTag> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(parse_tag(t));
  return out;
}

TagVocab TagVocab::semantic(int max_arguments) {
  if (max_arguments < 1) throw std::invalid_argument("tag vocabulary needs at least one argument slot");
  TagVocab v;
  v.max_arguments_ = max_arguments;
  v.semantic_ = true;
  v.tags_ = {SemanticTag::subject(true), SemanticTag::subject(false), SemanticTag::predicate(true),
             SemanticTag::predicate(false)};
  for (int k = 0; k < max_arguments; ++k) {
    v.tags_.push_back(SemanticTag::arg(k, true));
    v.tags_.push_back(SemanticTag::arg(k, false));
  }
  v.tags_.push_back(SemanticTag::outside());
  return v;
}

TagVocab TagVocab::bio_only() {
  TagVocab v;
  v.semantic_ = false;
  v.tags_ = {SemanticTag::span(true), SemanticTag::span(false), SemanticTag::outside()};
  return v;
}

TagVocab build_tag_vocab(int max_arguments) { return TagVocab::semantic(max_arguments); }

const SemanticTag& TagVocab::tag(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("tag id " + std::to_string(id) + " out of range");
  return tags_[static_cast<std::size_t>(id)];
}

int TagVocab::id(const SemanticTag& tag) const {
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (tags_[i] == tag) return static_cast<int>(i);
  }
  throw std::out_of_range("tag " + to_string(tag) + " is not in the vocabulary");
}

SemanticTag TagVocab::project(const SemanticTag& tag) const {
  if (tag.is_outside()) return tag;
  if (!semantic_) return SemanticTag::span(tag.begin);
  if (tag.role == Role::Argument && tag.argument >= max_arguments_) {
    return SemanticTag::arg(max_arguments_ - 1, tag.begin);
  }
  return tag;
}

namespace {

Words* field_for(AnswerTuple& t, const SemanticTag& tag) {
  switch (tag.role) {
    case Role::Subject:
      return &t.subject;
    case Role::Predicate:
      return &t.predicate;
    case Role::Argument:
      if (t.arguments.size() <= static_cast<std::size_t>(tag.argument)) {
        t.arguments.resize(static_cast<std::size_t>(tag.argument) + 1);
      }
      return &t.arguments[static_cast<std::size_t>(tag.argument)];
    default:
      return nullptr;
  }
}

}  // namespace

AnswerTuple tags_to_tuple(const std::vector<SemanticTag>& tags, const Words& passage) {
  if (tags.size() != passage.size()) {
    throw std::invalid_argument("tags_to_tuple: " + std::to_string(tags.size()) + " tags for " +
                                std::to_string(passage.size()) + " words");
  }
  AnswerTuple out;
  int run = -1;  // index of the current role-less run
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const SemanticTag& t = tags[i];
    if (t.role == Role::Span) {
      const bool continues = i > 0 && tags[i - 1].role == Role::Span && !t.begin;
      if (!continues) ++run;
      Words* field = run == 0 ? &out.subject : run == 1 ? &out.predicate : nullptr;
      if (field == nullptr) {
        const auto slot = static_cast<std::size_t>(run - 2);
        if (out.arguments.size() <= slot) out.arguments.resize(slot + 1);
        field = &out.arguments[slot];
      }
      field->push_back(passage[i]);
      continue;
    }
    if (Words* field = field_for(out, t)) field->push_back(passage[i]);
  }
  while (!out.arguments.empty() && out.arguments.back().empty()) out.arguments.pop_back();
  return out;
}

std::vector<TagViolation> validate_tags(const std::vector<SemanticTag>& tags) {
  std::vector<TagViolation> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const SemanticTag& t = tags[i];
    if (t.is_outside() || t.begin) continue;
    if (i == 0) {
      out.push_back({i, to_string(t) + " opens the sequence"});
    } else if (!tags[i - 1].same_role(t)) {
      out.push_back({i, to_string(t) + " follows " + to_string(tags[i - 1])});
    }
  }
  return out;
}

std::vector<SemanticTag> rederive_boundaries(const std::vector<SemanticTag>& tags) {
  std::vector<SemanticTag> out(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const bool starts = i == 0 || !tags[i - 1].same_role(tags[i]);
    out[i] = tags[i].with_begin(starts);
  }
  return out;
}

AnswerTuple fold_arguments(const AnswerTuple& answer, int max_arguments, bool* overflowed) {
  if (max_arguments < 1) throw std::invalid_argument("max_arguments must be >= 1");
  AnswerTuple out = answer;
  const auto limit = static_cast<std::size_t>(max_arguments);
  const bool over = out.arguments.size() > limit;
  if (over) {
    Words& last = out.arguments[limit - 1];
    for (std::size_t i = limit; i < out.arguments.size(); ++i) {
      last.insert(last.end(), out.arguments[i].begin(), out.arguments[i].end());
    }
    out.arguments.resize(limit);
  }
  if (overflowed != nullptr) *overflowed = over;
  return out;
}

}  // namespace qoie::tagscheme
