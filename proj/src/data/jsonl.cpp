#include "qoie/data.hpp"

#include "qoie/rng.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace qoie::data {

Words split_words(const std::string& text) {
  Words out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(w));
  }
  return out;
}

std::string join_words(const Words& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

namespace {

const std::string& require_string(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing field \"") + key + "\"");
  const auto& v = j.at(key);
  if (!v.is_string()) throw DataError(std::string("field \"") + key + "\" must be a string");
  return v.get_ref<const std::string&>();
}

}  // namespace

AnswerTuple answer_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("\"answer\" must be an object");
  AnswerTuple a;
  a.subject = split_words(require_string(j, "subject"));
  a.predicate = split_words(require_string(j, "predicate"));
  if (!j.contains("arguments") || !j.at("arguments").is_array()) {
    throw DataError("field \"arguments\" must be an array");
  }
  for (const auto& arg : j.at("arguments")) {
    if (!arg.is_string()) throw DataError("arguments must be strings");
    a.arguments.push_back(split_words(arg.get<std::string>()));
  }
  return a;
}

nlohmann::json answer_to_json(const AnswerTuple& a) {
  nlohmann::json args = nlohmann::json::array();
  for (const auto& arg : a.arguments) args.push_back(join_words(arg));
  return {{"subject", join_words(a.subject)}, {"predicate", join_words(a.predicate)}, {"arguments", args}};
}

Example example_from_json(const nlohmann::json& j) {
  Example e;
  e.question = split_words(require_string(j, "question"));
  e.passage = split_words(require_string(j, "passage"));
  if (!j.contains("answer")) throw DataError("missing field \"answer\"");
  e.answer = answer_from_json(j.at("answer"));
  if (e.answer.arguments.empty()) {
    throw DataError("answer has no arguments; a tuple needs k >= 1 arguments");
  }
  if (e.question.empty()) throw DataError("question is empty");
  if (e.passage.empty()) throw DataError("passage is empty");
  return e;
}

nlohmann::json example_to_json(const Example& e) {
  return {{"question", join_words(e.question)},
          {"passage", join_words(e.passage)},
          {"answer", answer_to_json(e.answer)}};
}

std::vector<Example> parse_jsonl(std::istream& in) {
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Example> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_jsonl(in);
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& e : examples) out << example_to_json(e).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CorpusSplit split_811(const std::vector<Example>& examples, std::uint64_t seed) {
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(static_cast<std::uint32_t>(i))]);
  }
  const std::size_t n = examples.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  CorpusSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const Example& e = examples[order[i]];
    if (i < n_train) {
      split.train.push_back(e);
    } else if (i < n_train + n_val) {
      split.validation.push_back(e);
    } else {
      split.test.push_back(e);
    }
  }
  return split;
}

}  // namespace qoie::data
