#include <doctest.h>

#include "qoie/data.hpp"
#include "qoie/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

using namespace qoie;
using namespace qoie::data;

namespace {

std::vector<Example> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_jsonl(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

const char* kGood =
    R"({"question": "Where was it filmed?", "passage": "it was filmed in vancouver .", )"
    R"("answer": {"subject": "it", "predicate": "was filmed", "arguments": ["in vancouver"]}})";

tokenizer::BpeModel bpe_for(const std::vector<Example>& examples) {
  std::vector<Words> words;
  for (const auto& e : examples) {
    words.push_back(e.question);
    words.push_back(e.passage);
  }
  return tokenizer::BpeModel::learn(words, 200);
}

}  // namespace

TEST_CASE("jsonl records") {
  const auto ex = parse(std::string(kGood) + "\n\n");
  REQUIRE(ex.size() == 1);
  CHECK(ex[0].question == Words{"where", "was", "it", "filmed?"});
  CHECK(ex[0].answer.predicate == Words{"was", "filmed"});
  CHECK(ex[0].answer.arguments == std::vector<Words>{{"in", "vancouver"}});
  CHECK(example_from_json(example_to_json(ex[0])) == ex[0]);
}

TEST_CASE("jsonl errors name the line") {
  CHECK(error_of(std::string(kGood) + "\n{not json}\n").rfind("line 2:", 0) == 0);
  CHECK(error_of(R"({"question": "q", "passage": "p"})").find("line 1") != std::string::npos);
  const std::string empty_args =
      R"({"question": "q", "passage": "p", "answer": {"subject": "s", "predicate": "v", "arguments": []}})";
  const std::string msg = error_of(std::string(kGood) + "\n" + kGood + "\n" + empty_args);
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("k >= 1") != std::string::npos);
  CHECK_THROWS_AS(load_jsonl("/nonexistent/file.jsonl"), std::runtime_error);
}

TEST_CASE("write and reload") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "qoie_test_data.jsonl";
  const auto ex = gen_synthetic(3, 20, Profile::Basic);
  write_jsonl(path, ex);
  CHECK(load_jsonl(path) == ex);
  fs::remove(path);
}

TEST_CASE("synthetic corpora") {
  CHECK(gen_synthetic(5, 40, Profile::Basic) == gen_synthetic(5, 40, Profile::Basic));
  CHECK(gen_synthetic(5, 40, Profile::Basic) != gen_synthetic(6, 40, Profile::Basic));
  CHECK(gen_synthetic(5, 7, Profile::Insertion).size() == 7);
  CHECK(parse_profile("ambiguous") == Profile::Ambiguous);
  CHECK(profile_name(Profile::Insertion) == "insertion");
  CHECK_THROWS_AS(parse_profile("fancy"), std::invalid_argument);
  CHECK_THROWS_AS(gen_synthetic(1, 0, Profile::Basic), std::invalid_argument);

  SUBCASE("basic answers are passage sub-spans") {
    for (const auto& e : gen_synthetic(8, 60, Profile::Basic)) {
      const auto aligned = tagscheme::align(e.answer, e.passage);
      const auto back = tagscheme::tags_to_tuple(aligned.tags, e.passage);
      CHECK(back == e.answer);
    }
  }
  SUBCASE("insertion answers contain a word missing from the passage") {
    for (const auto& e : gen_synthetic(8, 60, Profile::Insertion)) {
      const auto answer = eval::serialize_answer(e.answer);
      const bool missing = std::any_of(answer.begin(), answer.end(), [&](const std::string& w) {
        return w != eval::kSplitToken && std::find(e.passage.begin(), e.passage.end(), w) == e.passage.end();
      });
      CHECK(missing);
    }
  }
  SUBCASE("ambiguous pairs share the passage, not the tags") {
    const auto ex = gen_synthetic(8, 40, Profile::Ambiguous);
    for (std::size_t i = 0; i + 1 < ex.size(); i += 2) {
      CHECK(ex[i].passage == ex[i + 1].passage);
      CHECK(ex[i].question != ex[i + 1].question);
      CHECK(tagscheme::align(ex[i].answer, ex[i].passage).tags !=
            tagscheme::align(ex[i + 1].answer, ex[i + 1].passage).tags);
    }
  }
}

TEST_CASE("split_811") {
  const auto ex = gen_synthetic(2, 100, Profile::Basic);
  const auto s = split_811(ex, 9);
  CHECK(s.train.size() == 80);
  CHECK(s.validation.size() == 10);
  CHECK(s.test.size() == 10);
  const auto again = split_811(ex, 9);
  CHECK(again.test == s.test);
}

TEST_CASE("encoding and batching") {
  const auto ex = gen_synthetic(4, 10, Profile::Basic);
  const auto bpe = bpe_for(ex);
  const auto vocab = tagscheme::TagVocab::semantic(4);
  const auto enc = encode_corpus(ex, bpe, vocab, 4);
  REQUIRE(enc.size() == 10);
  for (const auto& e : enc) {
    CHECK(e.tags.size() == e.passage.size());
    CHECK(e.answer.back() == tokenizer::kEos);
    CHECK(bpe.decode(e.answer) == e.answer_words);
    std::vector<tagscheme::SemanticTag> tags;
    for (int t : e.tags) tags.push_back(vocab.tag(t));
    CHECK(tagscheme::validate_tags(tags).empty());
  }

  SUBCASE("padding") {
    const PaddedIds p = PaddedIds::pack({{5, 6, 7}, {5, 6, 7, 8, 9}}, tokenizer::kPad);
    CHECK(p.rows == 2);
    CHECK(p.cols == 5);
    CHECK(p.length(0) == 3);
    CHECK(std::vector<int>(p.row(0).begin(), p.row(0).end()) == std::vector<int>{5, 6, 7, 0, 0});
    CHECK(std::vector<std::uint8_t>(p.mask_row(0).begin(), p.mask_row(0).end()) ==
          std::vector<std::uint8_t>{1, 1, 1, 0, 0});
  }
  SUBCASE("batches") {
    const auto batches = batchify(enc, 4);
    CHECK(batches.size() == 3);
    CHECK(batches[2].size() == 2);
    CHECK(batches[0].example_index == std::vector<std::size_t>{0, 1, 2, 3});
    const Batch& b = batches[0];
    for (int r = 0; r < b.size(); ++r) {
      const auto& e = enc[static_cast<std::size_t>(r)];
      CHECK(b.passage.length(r) == static_cast<int>(e.passage.size()));
      for (int c = b.tags.length(r); c < b.tags.cols; ++c) CHECK(b.tags.row(r)[static_cast<std::size_t>(c)] == -1);
    }
    CHECK_THROWS_AS(batchify(enc, 0), std::invalid_argument);
  }
}
