#include "qoie/data.hpp"

#include "qoie/rng.hpp"

#include <array>
#include <string_view>

namespace qoie::data {

namespace {

constexpr std::array kNames = {"marie",  "pierre", "alan",   "ada",    "grace", "linus",
                               "edsger", "donald", "barbara", "ken",   "dennis", "bjarne",
                               "guido",  "james",  "margaret", "claude", "alonzo", "kurt",
                               "emmy",   "niels",  "lise",   "hedy",   "rosalind", "carl"};

struct Verb {
  const char* base;
  const char* past;
};

constexpr std::array kVerbs = {Verb{"found", "founded"},   Verb{"build", "built"},
                               Verb{"design", "designed"}, Verb{"write", "wrote"},
                               Verb{"paint", "painted"},   Verb{"discover", "discovered"},
                               Verb{"sell", "sold"},       Verb{"open", "opened"},
                               Verb{"manage", "managed"},  Verb{"launch", "launched"},
                               Verb{"repair", "repaired"}, Verb{"visit", "visited"},
                               Verb{"study", "studied"},   Verb{"teach", "taught"},
                               Verb{"publish", "published"}};

constexpr std::array kObjects = {"the company",  "a bridge",    "the library", "a boat",
                                 "the compiler", "an academy",  "the museum",  "a theory",
                                 "the garden",   "a song",      "the tower",   "a map",
                                 "the journal",  "a telescope", "the theatre", "a hospital"};

constexpr std::array kPlaces = {"paris",  "london", "berlin", "rome",   "madrid", "vienna",
                                "oslo",   "lisbon", "prague", "dublin", "athens", "tokyo",
                                "zurich", "warsaw", "geneva", "cairo"};

constexpr std::array kYears = {"1851", "1867", "1889", "1902", "1911", "1923", "1936", "1948",
                               "1957", "1964", "1972", "1985", "1991", "1999", "2004", "2013"};

constexpr std::array kDays = {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday",
                              "sunday"};

// No filler contains "in" or "on", so those stay absent where the insertion
// profile needs them absent.
constexpr std::array kFillers = {"after the war",    "with great care",  "for many years",
                                 "despite the rain", "during the summer", "before the storm",
                                 "without any help", "at a young age"};

template <typename Array>
std::string_view pick(Rng& rng, const Array& options) {
  return options[rng.below(static_cast<std::uint32_t>(options.size()))];
}

template <typename Array>
std::size_t pick_index(Rng& rng, const Array& options) {
  return rng.below(static_cast<std::uint32_t>(options.size()));
}

// Index different from `avoid`.
template <typename Array>
std::size_t pick_other(Rng& rng, const Array& options, std::size_t avoid) {
  const auto n = static_cast<std::uint32_t>(options.size());
  return (avoid + 1 + rng.below(n - 1)) % n;
}

Example make(const std::string& question, const std::string& passage, const std::string& subject,
             const std::string& predicate, std::initializer_list<std::string> arguments) {
  Example e;
  e.question = split_words(question);
  e.passage = split_words(passage);
  e.answer.subject = split_words(subject);
  e.answer.predicate = split_words(predicate);
  for (const auto& a : arguments) e.answer.arguments.push_back(split_words(a));
  return e;
}

std::string s(std::string_view v) { return std::string(v); }

Example basic(Rng& rng) {
  const std::string who = s(pick(rng, kNames));
  const Verb verb = kVerbs[pick_index(rng, kVerbs)];
  const std::string what = s(pick(rng, kObjects));
  const std::string filler = s(pick(rng, kFillers));
  switch (rng.below(3)) {
    case 0: {
      const std::string where = s(pick(rng, kPlaces));
      return make("what did " + who + " " + verb.base + " in " + where,
                  who + " " + verb.past + " " + what + " in " + where + " " + filler + " .", who,
                  verb.past, {what, "in " + where});
    }
    case 1: {
      const std::string year = s(pick(rng, kYears));
      return make("when did " + who + " " + verb.base + " " + what,
                  "in " + year + " , " + who + " " + verb.past + " " + what + " " + filler + " .", who,
                  verb.past, {what, "in " + year});
    }
    default:
      return make("what did " + who + " " + verb.base,
                  who + " " + verb.past + " " + what + " " + filler + " .", who, verb.past, {what});
  }
}

Example insertion(Rng& rng) {
  const std::string who = s(pick(rng, kNames));
  const Verb verb = kVerbs[pick_index(rng, kVerbs)];
  const std::string what = s(pick(rng, kObjects));
  const std::string filler = s(pick(rng, kFillers));
  switch (rng.below(3)) {
    case 0: {
      const std::string where = s(pick(rng, kPlaces));
      return make("where did " + who + " " + verb.base + " " + what,
                  who + " " + verb.past + " " + what + " , " + where + " , " + filler + " .", who,
                  verb.past, {what, "in " + where});
    }
    case 1: {
      const std::string year = s(pick(rng, kYears));
      return make("when did " + who + " " + verb.base + " " + what,
                  year + " : " + who + " " + verb.past + " " + what + " " + filler + " .", who,
                  verb.past, {what, "in " + year});
    }
    default: {
      const std::string day = s(pick(rng, kDays));
      return make("which day did " + who + " " + verb.base + " " + what,
                  day + " , " + who + " " + verb.past + " " + what + " " + filler + " .", who,
                  verb.past, {what, "on " + day});
    }
  }
}

void ambiguous_pair(Rng& rng, std::vector<Example>& out, int remaining) {
  const std::size_t s1 = pick_index(rng, kNames), s2 = pick_other(rng, kNames, s1);
  const std::size_t v1 = pick_index(rng, kVerbs), v2 = pick_other(rng, kVerbs, v1);
  const std::size_t o1 = pick_index(rng, kObjects), o2 = pick_other(rng, kObjects, o1);
  const std::size_t p1 = pick_index(rng, kPlaces), p2 = pick_other(rng, kPlaces, p1);
  const std::string passage = s(kNames[s1]) + " " + kVerbs[v1].past + " " + kObjects[o1] + " in " +
                              kPlaces[p1] + " and " + kNames[s2] + " " + kVerbs[v2].past + " " +
                              kObjects[o2] + " in " + kPlaces[p2] + " .";
  out.push_back(make(std::string("what did ") + kNames[s1] + " " + kVerbs[v1].base, passage,
                     kNames[s1], kVerbs[v1].past, {kObjects[o1], std::string("in ") + kPlaces[p1]}));
  if (remaining > 1) {
    out.push_back(make(std::string("what did ") + kNames[s2] + " " + kVerbs[v2].base, passage,
                       kNames[s2], kVerbs[v2].past, {kObjects[o2], std::string("in ") + kPlaces[p2]}));
  }
}

}  // namespace

Profile parse_profile(const std::string& name) {
  if (name == "basic") return Profile::Basic;
  if (name == "insertion") return Profile::Insertion;
  if (name == "ambiguous") return Profile::Ambiguous;
  throw std::invalid_argument("unknown profile '" + name + "' (expected basic, insertion or ambiguous)");
}

std::string profile_name(Profile p) {
  switch (p) {
    case Profile::Basic:
      return "basic";
    case Profile::Insertion:
      return "insertion";
    case Profile::Ambiguous:
      return "ambiguous";
  }
  return "basic";
}

std::vector<Example> gen_synthetic(std::uint64_t seed, int count, Profile profile) {
  if (count < 1) throw std::invalid_argument("gen_synthetic: count must be >= 1");
  Rng rng(seed, 0xda3e39cb94b95bdbULL);
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    switch (profile) {
      case Profile::Basic:
        out.push_back(basic(rng));
        break;
      case Profile::Insertion:
        out.push_back(insertion(rng));
        break;
      case Profile::Ambiguous:
        ambiguous_pair(rng, out, count - static_cast<int>(out.size()));
        break;
    }
  }
  return out;
}

}  // namespace qoie::data
