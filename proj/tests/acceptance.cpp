// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance <work dir>

#include "cli_run.hpp"
#include "fixtures.hpp"
#include "qoie/data.hpp"
#include "qoie/eval.hpp"
#include "qoie/model/trainer.hpp"
#include "qoie/tagscheme.hpp"
#include "random_instances.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace qoie;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using model::Model;
using model::ModelConfig;
using numerics::Graph;
using numerics::Index;
using numerics::Matrix;
using testing::run_cli;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<std::uint8_t> ones(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

Outcome gradient_soundness() {
  const auto t0 = Clock::now();
  const auto r = testing::tiny_joint_gradcheck();
  const double secs = seconds_since(t0);
  std::ostringstream s;
  s << "max relative error " << r.max_relative_error << " over " << r.entries_checked << " entries in "
    << fmt("%.1f", secs) << " s";
  return {r.max_relative_error < 1e-4 && secs < 60.0, s.str()};
}

Outcome causality() {
  double worst_prefix = 0.0, worst_pad = 0.0;
  bool later_rows_move = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Model net(testing::tiny_config(seed), testing::kTinyVocab, testing::kTinyTags);
    Rng rng(seed, 7);
    const auto q = testing::random_ids(rng, 4);
    std::vector<int> p = testing::random_ids(rng, 8);
    std::vector<std::uint8_t> p_valid(8, 1);
    p_valid[6] = p_valid[7] = 0;
    std::vector<int> prefix{tokenizer::kBos};
    for (int id : testing::random_ids(rng, 6)) prefix.push_back(id);

    Graph g(false);
    const auto base = net.forward(g, {q, ones(4)}, {p, p_valid}, prefix);
    for (std::size_t j = 1; j < prefix.size(); ++j) {
      auto changed = prefix;
      changed[j] = tokenizer::kSpecialCount + (changed[j] + 1 - tokenizer::kSpecialCount) %
                                                  (testing::kTinyVocab - tokenizer::kSpecialCount);
      const Matrix out = net.forward(g, {q, ones(4)}, {p, p_valid}, changed).logits.value();
      const auto rows = static_cast<Index>(j);
      worst_prefix = std::max(worst_prefix, (out.topRows(rows) - base.logits.value().topRows(rows)).cwiseAbs().maxCoeff());
      later_rows_move = later_rows_move && (out.row(rows) - base.logits.value().row(rows)).cwiseAbs().maxCoeff() > 0.0;
    }
    for (int trial = 0; trial < 5; ++trial) {
      auto padded = p;
      padded[6] = testing::random_ids(rng, 1)[0];
      padded[7] = trial == 0 ? tokenizer::kPad : testing::random_ids(rng, 1)[0];
      const auto out = net.forward(g, {q, ones(4)}, {padded, p_valid}, prefix);
      worst_pad = std::max(worst_pad, (out.logits.value() - base.logits.value()).cwiseAbs().maxCoeff());
      worst_pad = std::max(
          worst_pad, (out.tags.probs.value().topRows(6) - base.tags.probs.value().topRows(6)).cwiseAbs().maxCoeff());
    }
  }
  std::ostringstream s;
  s << "max earlier-row change " << worst_prefix << ", max change from pad tokens " << worst_pad;
  return {worst_prefix <= 1e-12 && worst_pad == 0.0 && later_rows_move, s.str()};
}

Outcome tag_distribution() {
  Model net(testing::tiny_config(3), testing::kTinyVocab, testing::kTinyTags);
  Rng rng(3, 11);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto q = testing::random_ids(rng, 1 + static_cast<int>(rng.below(8)));
    const auto p = testing::random_ids(rng, 1 + static_cast<int>(rng.below(16)));
    Graph g(false);
    const auto fwd = net.forward(g, {q, ones(q.size())}, {p, ones(p.size())}, {});
    for (Index r = 0; r < fwd.tags.probs.rows(); ++r) {
      worst = std::max(worst, std::abs(fwd.tags.probs.value().row(r).sum() - 1.0));
    }
  }
  return {worst <= 1e-9, "max |row sum - 1| = " + fmt("%.3g", worst) + " over 100 inputs"};
}

const char* kSmallvillePassage =
    "smallville was primarily filmed in and around vancouver , british columbia , with local businesses and "
    "buildings substituting for smallville locations .";
const std::vector<std::string> kSmallvilleTags = {"S-B", "P-B", "O", "P-B", "A0-B", "O",    "O",    "O",
                                              "O",   "A0-B", "A0-I", "O", "A1-B", "A1-I", "A1-I", "O",
                                              "O",   "O",   "O",    "O", "O",    "O"};

Outcome alignment_oracle() {
  Rng rng(2024);
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = testing::random_align_instance(rng);
    if (tagscheme::align(inst.answer, inst.passage).tags != tagscheme::brute_force_align(inst.answer, inst.passage).tags) {
      ++mismatches;
    }
  }
  const tagscheme::AnswerTuple sv{{"smallville"},
                                  {"was", "filmed"},
                                  {{"in", "british", "columbia"}, {"with", "local", "businesses"}}};
  const bool smallville =
      tagscheme::to_strings(tagscheme::align(sv, data::split_words(kSmallvillePassage)).tags) == kSmallvilleTags;
  return {mismatches == 0 && smallville, std::to_string(mismatches) + " mismatches over 200 instances; smallville row " +
                                         (smallville ? "reproduced" : "differs")};
}

Outcome bleu_fixtures() {
  const auto w = [](const char* s) { return data::split_words(s); };
  const double same = eval::bleu({w("the cat sat on the mat"), w("a dog")}, {w("the cat sat on the mat"), w("a dog")}, 4).score;
  const double clipped = eval::bleu({w("the the the")}, {w("the cat")}, 1).score;
  const double brevity = eval::bleu({w("cat")}, {w("the cat")}, 1).score;
  const bool ok = std::abs(same - 1.0) < 1e-12 && std::abs(clipped - 1.0 / 3.0) <= 1e-9 &&
                  std::abs(brevity - std::exp(-1.0)) <= 1e-9;
  std::ostringstream s;
  s << "identical " << same << ", clipped " << clipped << ", brevity " << brevity;
  return {ok, s.str()};
}

// --- overfit experiments -----------------------------------------------------

struct Corpus {
  std::vector<data::Example> examples;
  tokenizer::BpeModel bpe;
  tagscheme::TagVocab vocab = tagscheme::TagVocab::semantic(4);
  std::vector<data::EncodedExample> encoded;
};

// Same corpus as learn-bpe: question, passage and every answer field.
Corpus make_corpus(data::Profile profile, const ModelConfig& config) {
  Corpus c;
  c.examples = data::gen_synthetic(1, 128, profile);
  std::vector<tagscheme::Words> text;
  for (const auto& e : c.examples) {
    text.push_back(e.question);
    text.push_back(e.passage);
    text.push_back(e.answer.subject);
    text.push_back(e.answer.predicate);
    for (const auto& a : e.answer.arguments) text.push_back(a);
  }
  c.bpe = tokenizer::BpeModel::learn(text, config.vocab_size);
  c.vocab = tagscheme::TagVocab::semantic(config.k_args);
  c.encoded = data::encode_corpus(c.examples, c.bpe, c.vocab, config.k_args);
  return c;
}

double answer_bleu(const Model& net, const Corpus& c, bool tag_only) {
  std::vector<tagscheme::AnswerTuple> pred, gold;
  for (std::size_t i = 0; i < c.examples.size(); ++i) {
    pred.push_back(tag_only ? model::predict_tagged(net, c.encoded[i], c.bpe, c.vocab)
                            : model::predict_corrected(net, c.encoded[i], c.bpe));
    gold.push_back(c.examples[i].answer);
  }
  return eval::evaluate(pred, gold).answer_bleu4();
}

// Trains with a check every 100 steps; stops once `done` holds.
int train_until(Model& net, const Corpus& c, const std::function<bool()>& done) {
  model::Trainer trainer(net, c.encoded);
  trainer.run([&](const model::StepLog& s) { return s.step % 100 != 0 || !done(); });
  return trainer.steps_taken();
}

Outcome overfit_basic() {
  const auto t0 = Clock::now();
  const ModelConfig config;  // desk defaults
  const Corpus c = make_corpus(data::Profile::Basic, config);
  Model net(config, c.bpe.vocab_size(), c.vocab.size());
  double acc = 0.0, bleu = 0.0;
  const int steps = train_until(net, c, [&] {
    acc = model::tag_accuracy(net, c.encoded).value();
    if (acc < 0.99) return false;
    bleu = answer_bleu(net, c, false);
    return bleu >= 0.95;
  });
  const double secs = seconds_since(t0);
  std::ostringstream s;
  s << "tag accuracy " << fmt("%.4f", acc) << ", answer BLEU-4 " << fmt("%.4f", bleu) << " after " << steps
    << " steps (" << fmt("%.0f", secs) << " s)";
  return {acc >= 0.99 && bleu >= 0.95 && steps <= config.steps, s.str()};
}

Outcome correction_inserts() {
  const ModelConfig config;
  const Corpus c = make_corpus(data::Profile::Insertion, config);
  Model net(config, c.bpe.vocab_size(), c.vocab.size());
  double corrected = 0.0;
  const int steps = train_until(net, c, [&] {
    corrected = answer_bleu(net, c, false);
    return corrected >= 0.95;
  });
  const double tagged = answer_bleu(net, c, true);
  std::ostringstream s;
  s << "tagging+correction BLEU-4 " << fmt("%.4f", corrected) << ", tagging-only " << fmt("%.4f", tagged)
    << " after " << steps << " steps";
  return {corrected >= 0.95 && tagged < 0.90, s.str()};
}

Outcome question_conditioning() {
  ModelConfig config;
  const Corpus c = make_corpus(data::Profile::Ambiguous, config);
  Model full(config, c.bpe.vocab_size(), c.vocab.size());
  double full_acc = 0.0;
  const int steps = train_until(full, c, [&] {
    full_acc = model::tag_accuracy(full, c.encoded).value();
    return full_acc >= 0.99;
  });

  config.use_question = false;
  config.steps = steps;
  Model blind(config, c.bpe.vocab_size(), c.vocab.size());
  model::Trainer(blind, c.encoded).run();

  // Positions where the two questions of a pair want different tags.
  std::size_t hit = 0, total = 0;
  bool invariant = true;
  for (std::size_t i = 0; i + 1 < c.encoded.size(); i += 2) {
    const auto& a = c.encoded[i];
    const auto& b = c.encoded[i + 1];
    if (a.passage != b.passage) return {false, "pair " + std::to_string(i) + " does not share a passage"};
    const auto pa = blind.predict_tags(a.question, a.passage);
    const auto pb = blind.predict_tags(b.question, b.passage);
    Graph g(false);
    const auto fa = blind.forward(g, {a.question, ones(a.question.size())}, {a.passage, ones(a.passage.size())}, {});
    const auto fb = blind.forward(g, {b.question, ones(b.question.size())}, {b.passage, ones(b.passage.size())}, {});
    invariant = invariant && pa == pb && fa.tags.probs.value() == fb.tags.probs.value();
    for (std::size_t k = 0; k < a.tags.size(); ++k) {
      if (a.tags[k] == b.tags[k]) continue;
      hit += (pa[k] == a.tags[k] ? 1 : 0) + (pb[k] == b.tags[k] ? 1 : 0);
      total += 2;
    }
  }
  const double blind_acc = total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
  std::ostringstream s;
  s << "full model tag accuracy " << fmt("%.4f", full_acc) << " after " << steps
    << " steps; no-question accuracy on " << total << " disambiguated positions " << fmt("%.4f", blind_acc)
    << "; question-invariant " << (invariant ? "yes" : "no");
  return {full_acc >= 0.99 && total > 0 && blind_acc <= 0.75 && invariant, s.str()};
}

// --- CLI ----------------------------------------------------------------------

const std::vector<std::string> kSmallModel = {"--set", "d_model=16", "--set", "heads=2",  "--set", "n_e=1",
                                              "--set", "n_t=1",      "--set", "n_c=1",    "--set", "batch_size=8",
                                              "--log-every", "0"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Runs each command in order, stopping at the first nonzero exit.
std::string run_all(const std::vector<std::vector<std::string>>& commands) {
  for (const auto& c : commands) {
    const auto r = run_cli(c);
    if (r.code != 0) return c.front() + " exited " + std::to_string(r.code) + ": " + r.err;
  }
  return {};
}

std::vector<std::vector<std::string>> pipeline_commands(int count, int steps) {
  return {
      {"gen", "--seed", "7", "--count", std::to_string(count), "--profile", "basic", "--out", "data.jsonl"},
      {"learn-bpe", "--data", "data.jsonl", "--vocab-size", "300", "--out", "data.bpe"},
      {"align", "--data", "data.jsonl", "--out", "data.tags.jsonl", "--check-oracle"},
      concat({"train", "--data", "data.jsonl", "--bpe", "data.bpe", "--out-ckpt", "model.ckpt", "--steps",
              std::to_string(steps), "--seed", "3"},
             kSmallModel),
      {"predict", "--ckpt", "model.ckpt", "--data", "data.jsonl", "--out", "pred.jsonl"},
      {"predict", "--ckpt", "model.ckpt", "--data", "data.jsonl", "--out", "pred.tag.jsonl", "--mode", "tag"},
  };
}

// Relative paths keep manifests comparable across directories.
struct InDir {
  explicit InDir(const fs::path& dir) : saved(fs::current_path()) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::current_path(dir);
  }
  ~InDir() { fs::current_path(saved); }
  fs::path saved;
};

Outcome determinism(const fs::path& work) {
  for (const char* run : {"run_a", "run_b"}) {
    InDir in(work / run);
    const std::string failure = run_all(pipeline_commands(24, 6));
    if (!failure.empty()) return {false, failure};
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(work / "run_a")) {
    const fs::path other = work / "run_b" / entry.path().filename();
    ++compared;
    if (!fs::exists(other) || testing::slurp(entry.path()) != testing::slurp(other)) {
      differing.push_back(entry.path().filename().string());
    }
  }
  std::string detail = std::to_string(compared) + " artifacts compared, " + std::to_string(differing.size()) + " differ";
  for (const auto& d : differing) detail += " " + d;
  return {differing.empty() && compared >= 10, detail};
}

Outcome pipeline(const fs::path& work) {
  InDir in(work / "pipeline");
  auto commands = pipeline_commands(64, 60);
  const std::string failure = run_all(commands);
  if (!failure.empty()) return {false, failure};
  const auto r = run_cli({"eval", "--pred", "pred.jsonl", "--gold", "data.jsonl", "--json", "report.json"});
  if (r.code != 0) return {false, "eval exited " + std::to_string(r.code) + ": " + r.err};
  const auto report = nlohmann::json::parse(testing::slurp("report.json"));
  bool ok = report.at("examples") == 64;
  for (const char* key : {"answer_bleu4", "subject_bleu1", "predicate_bleu1", "arguments_bleu1"}) {
    const double v = report.at(key).get<double>();
    ok = ok && v >= 0.0 && v <= 1.0 && r.out.find(std::string(key) + "=") != std::string::npos;
  }
  std::string first_line = r.out.substr(0, r.out.find('\n'));
  return {ok, "all stages exited 0; report " + first_line + ", answer_bleu4=" +
                  fmt("%.4f", report.at("answer_bleu4").get<double>())};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = fs::absolute(argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "qoie_acceptance");
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient soundness", gradient_soundness},
      {2, "causality and padding", causality},
      {3, "tag distribution", tag_distribution},
      {4, "alignment oracle", alignment_oracle},
      {5, "BLEU fixtures", bleu_fixtures},
      {6, "overfit basic", overfit_basic},
      {7, "correction inserts missing words", correction_inserts},
      {8, "question conditioning", question_conditioning},
      {9, "determinism", [&] { return determinism(work / "determinism"); }},
      {10, "CLI pipeline", [&] { return pipeline(work); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
