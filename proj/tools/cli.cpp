#include "cli.hpp"

#include "qoie/data.hpp"
#include "qoie/eval.hpp"
#include "qoie/model/trainer.hpp"
#include "qoie/numerics/checkpoint.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace qoie::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using tagscheme::Words;

namespace {

// Raised for bad flag values noticed after CLI11 has parsed them.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Same digest `git hash-object` prints.
std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// <primary output>.manifest.json. No timestamps, so reruns are byte-identical.
class Manifest {
 public:
  explicit Manifest(std::string command) { doc_["command"] = std::move(command); }

  void setting(const std::string& key, json value) { doc_["settings"][key] = std::move(value); }
  void input(const fs::path& path) { doc_["inputs"][path.string()] = git_blob_sha1(read_file(path)); }
  void output(const fs::path& path) { doc_["outputs"][path.string()] = git_blob_sha1(read_file(path)); }

  void write(const fs::path& primary) const {
    const fs::path path = primary.string() + ".manifest.json";
    write_file(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_ = json::object();
};

struct GenArgs {
  std::uint64_t seed = 1;
  int count = 128;
  std::string profile = "basic";
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  data::Profile profile;
  try {
    profile = data::parse_profile(a.profile);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.count < 1) throw UsageError("--count must be >= 1");
  const auto corpus = data::gen_synthetic(a.seed, a.count, profile);
  data::write_jsonl(a.out, corpus);
  Manifest m("gen");
  m.setting("seed", a.seed);
  m.setting("count", a.count);
  m.setting("profile", a.profile);
  m.output(a.out);
  m.write(a.out);
  out << "wrote " << corpus.size() << " examples to " << a.out << "\n";
  return kOk;
}

struct BpeArgs {
  std::vector<std::string> data;
  int vocab_size = 2000;
  std::string out;
};

// Every word of every question, passage and answer field.
std::vector<Words> bpe_corpus(const std::vector<data::Example>& examples) {
  std::vector<Words> corpus;
  for (const auto& e : examples) {
    corpus.push_back(e.question);
    corpus.push_back(e.passage);
    corpus.push_back(e.answer.subject);
    corpus.push_back(e.answer.predicate);
    for (const auto& arg : e.answer.arguments) corpus.push_back(arg);
  }
  return corpus;
}

int cmd_learn_bpe(const BpeArgs& a, std::ostream& out) {
  std::vector<data::Example> examples;
  Manifest m("learn-bpe");
  for (const auto& path : a.data) {
    auto part = data::load_jsonl(path);
    examples.insert(examples.end(), part.begin(), part.end());
    m.input(path);
  }
  const auto bpe = tokenizer::BpeModel::learn(bpe_corpus(examples), a.vocab_size);
  bpe.save(a.out);
  m.setting("vocab_size", a.vocab_size);
  m.output(a.out);
  m.write(a.out);
  out << "learned " << bpe.merges().size() << " merges, vocabulary " << bpe.vocab_size() << " -> " << a.out
      << "\n";
  return kOk;
}

struct AlignArgs {
  std::string data;
  int k_args = tagscheme::kDefaultMaxArguments;
  std::string out;
  bool check_oracle = false;
};

int cmd_align(const AlignArgs& a, std::ostream& out, std::ostream& err) {
  if (a.k_args < 1) throw UsageError("--k-args must be >= 1");
  const auto examples = data::load_jsonl(a.data);
  tagscheme::AlignStats stats;
  std::string text;
  std::size_t checked = 0, mismatches = 0;
  std::optional<std::size_t> first_mismatch;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    const auto aligned = tagscheme::align(e.answer, e.passage, a.k_args, &stats);
    text += json{{"passage", data::join_words(aligned.passage)}, {"tags", tagscheme::to_strings(aligned.tags)}}
                .dump() +
            "\n";
    if (a.check_oracle && e.passage.size() <= tagscheme::kBruteForceMaxPassage) {
      ++checked;
      const auto oracle = tagscheme::brute_force_align(e.answer, e.passage, a.k_args);
      if (oracle.tags != aligned.tags) {
        ++mismatches;
        if (!first_mismatch) first_mismatch = i;
      }
    }
  }
  write_file(a.out, text);
  Manifest m("align");
  m.setting("k_args", a.k_args);
  m.setting("check_oracle", a.check_oracle);
  m.input(a.data);
  m.output(a.out);
  m.write(a.out);

  out << "examples: " << stats.examples << "\n";
  out << "unmatched_fields: " << stats.unmatched_fields << "\n";
  out << "overflowed_arguments: " << stats.overflowed_arguments << "\n";
  if (stats.unmatched_fields > 0) {
    err << "warning: " << stats.unmatched_fields << " answer field(s) had no word in the passage\n";
  }
  if (a.check_oracle) {
    out << "oracle_checked: " << checked << "\n";
    out << "mismatches: " << mismatches << "\n";
    if (first_mismatch) {
      const auto& e = examples[*first_mismatch];
      const auto got = tagscheme::align(e.answer, e.passage, a.k_args);
      const auto want = tagscheme::brute_force_align(e.answer, e.passage, a.k_args);
      err << "first mismatch at line " << *first_mismatch + 1 << ": " << data::join_words(e.passage) << "\n";
      err << "  align:  " << data::join_words(tagscheme::to_strings(got.tags)) << "\n";
      err << "  oracle: " << data::join_words(tagscheme::to_strings(want.tags)) << "\n";
      return kFailure;
    }
  }
  return kOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string bpe;
  std::string out_ckpt;
  std::string ablation;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string loss_log;
  int log_every = 100;
};

tagscheme::TagVocab tag_vocab_for(const model::ModelConfig& c) {
  return c.semantic_tags ? tagscheme::TagVocab::semantic(c.k_args) : tagscheme::TagVocab::bio_only();
}

fs::path sidecar(const fs::path& ckpt, const char* suffix) { return ckpt.string() + suffix; }

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  model::ModelConfig config = a.config.empty() ? model::ModelConfig{} : model::ModelConfig::load(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    try {
      config.apply(kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (a.steps) config.steps = *a.steps;
  if (a.seed) config.seed = *a.seed;
  if (a.ablation == "no-question") {
    config.use_question = false;
  } else if (a.ablation == "bio-only") {
    config.semantic_tags = false;
  } else if (!a.ablation.empty()) {
    throw UsageError("unknown --ablation '" + a.ablation + "' (expected no-question or bio-only)");
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto examples = data::load_jsonl(a.data);
  if (examples.empty()) throw data::DataError(a.data + ": no examples");
  const auto bpe = tokenizer::BpeModel::load(a.bpe);
  const auto vocab = tag_vocab_for(config);
  tagscheme::AlignStats stats;
  auto encoded = data::encode_corpus(examples, bpe, vocab, config.k_args, &stats);

  model::Model net(config, bpe.vocab_size(), vocab.size());
  model::Trainer trainer(net, std::move(encoded));
  const fs::path loss_log = a.loss_log.empty() ? sidecar(a.out_ckpt, ".loss.csv") : fs::path(a.loss_log);
  std::string csv = "step,L_tag,L_correct,joint\n";
  char line[160];
  trainer.run([&](const model::StepLog& s) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g\n", s.step, s.tag_loss, s.correction_loss, s.joint);
    csv += line;
    if (a.log_every > 0 && (s.step % a.log_every == 0 || s.step == config.steps)) {
      err << "step " << s.step << " tag " << s.tag_loss << " correct " << s.correction_loss << " joint "
          << s.joint << "\n";
    }
    return true;
  });

  numerics::save_checkpoint(a.out_ckpt, net.params());
  write_file(sidecar(a.out_ckpt, ".config"), config.to_text());
  bpe.save(sidecar(a.out_ckpt, ".bpe"));
  write_file(loss_log, csv);

  Manifest m("train");
  for (const auto& [k, v] : config.to_map()) m.setting("config." + k, v);
  m.setting("ablation", a.ablation.empty() ? "none" : a.ablation);
  m.setting("tag_vocab_size", vocab.size());
  m.input(a.data);
  m.input(a.bpe);
  if (!a.config.empty()) m.input(a.config);
  m.output(a.out_ckpt);
  m.output(sidecar(a.out_ckpt, ".config"));
  m.output(sidecar(a.out_ckpt, ".bpe"));
  m.output(loss_log);
  m.write(a.out_ckpt);

  out << "trained " << trainer.steps_taken() << " steps; " << net.params().scalar_count() << " parameters -> "
      << a.out_ckpt << "\n";
  if (stats.unmatched_fields > 0) {
    err << "warning: " << stats.unmatched_fields << " answer field(s) had no word in the passage\n";
  }
  return kOk;
}

struct PredictArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  std::string mode = "correct";
  std::string config;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  if (a.mode != "correct" && a.mode != "tag") throw UsageError("--mode must be 'tag' or 'correct'");
  for (const fs::path& p : {fs::path(a.ckpt), sidecar(a.ckpt, ".config"), sidecar(a.ckpt, ".bpe")}) {
    if (!fs::exists(p)) throw std::runtime_error("missing checkpoint file " + p.string());
  }
  const auto config = model::ModelConfig::load(sidecar(a.ckpt, ".config"));
  if (!a.config.empty()) {
    const auto want = model::ModelConfig::load(a.config).to_map();
    const auto have = config.to_map();
    std::string diffs;
    for (const auto& [k, v] : want) {
      if (k == "steps" || k == "seed" || k == "lr" || k == "batch_size" || k == "max_decode_len") continue;
      if (have.at(k) != v) diffs += "; " + k + " = " + v + " but checkpoint has " + have.at(k);
    }
    if (!diffs.empty()) throw std::runtime_error("config mismatch with checkpoint" + diffs);
  }
  const auto bpe = tokenizer::BpeModel::load(sidecar(a.ckpt, ".bpe"));
  const auto vocab = tag_vocab_for(config);
  model::Model net(config, bpe.vocab_size(), vocab.size());
  numerics::load_checkpoint(a.ckpt, net.params());

  const auto examples = data::load_jsonl(a.data);
  std::string text;
  std::size_t malformed = 0;
  for (const auto& e : examples) {
    const auto enc = data::encode_example(e, bpe, vocab, config.k_args);
    const auto tagged = model::predict_tagged(net, enc, bpe, vocab);
    const auto answer = a.mode == "tag" ? tagged : model::predict_corrected(net, enc, bpe, &malformed);
    std::vector<std::string> tags;
    for (int id : net.predict_tags(enc.question, enc.passage)) tags.push_back(tagscheme::to_string(vocab.tag(id)));
    text += json{{"answer", data::answer_to_json(answer)},
                 {"tagging_answer", data::answer_to_json(tagged)},
                 {"tags", tags}}
                .dump() +
            "\n";
  }
  write_file(a.out, text);

  Manifest m("predict");
  m.setting("mode", a.mode);
  m.input(a.ckpt);
  m.input(sidecar(a.ckpt, ".config"));
  m.input(sidecar(a.ckpt, ".bpe"));
  m.input(a.data);
  m.output(a.out);
  m.write(a.out);
  out << "wrote " << examples.size() << " predictions to " << a.out << "\n";
  if (malformed > 0) err << "warning: " << malformed << " decoded answer(s) had fewer than two <split>\n";
  return kOk;
}

struct EvalArgs {
  std::string pred;
  std::string gold;
  std::string json_out;
};

std::vector<tagscheme::AnswerTuple> load_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<tagscheme::AnswerTuple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object() || !j.contains("answer")) throw data::DataError("missing field \"answer\"");
      out.push_back(data::answer_from_json(j.at("answer")));
    } catch (const json::exception& e) {
      throw data::DataError(path.string() + " line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    } catch (const data::DataError& e) {
      throw data::DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto predictions = load_predictions(a.pred);
  std::vector<tagscheme::AnswerTuple> golds;
  for (const auto& e : data::load_jsonl(a.gold)) golds.push_back(e.answer);
  if (predictions.size() != golds.size()) {
    throw data::DataError(std::to_string(predictions.size()) + " predictions for " + std::to_string(golds.size()) +
                          " gold examples");
  }
  const auto report = eval::evaluate(predictions, golds);
  out << report.to_text();
  if (!a.json_out.empty()) write_file(a.json_out, report.to_json().dump(2) + "\n");
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Question-aware open information extraction: tagging then correction."};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic corpus");
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_option("--count", gen.count, "Number of examples");
  g->add_option("--profile", gen.profile, "basic | insertion | ambiguous");
  g->add_option("--out", gen.out, "Output JSONL")->required();

  BpeArgs bpe;
  auto* b = app.add_subcommand("learn-bpe", "Learn BPE merges from JSONL corpora");
  b->add_option("--data", bpe.data, "Input JSONL (repeatable)")->required();
  b->add_option("--vocab-size", bpe.vocab_size, "Target vocabulary size");
  b->add_option("--out", bpe.out, "Output model")->required();

  AlignArgs align;
  auto* al = app.add_subcommand("align", "Create tagging ground truth");
  al->add_option("--data", align.data, "Input JSONL")->required();
  al->add_option("--k-args", align.k_args, "Argument tag slots");
  al->add_option("--out", align.out, "Output JSONL")->required();
  al->add_flag("--check-oracle", align.check_oracle, "Compare against exhaustive alignment");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the joint model");
  t->add_option("--config", train.config, "key = value config file");
  t->add_option("--data", train.data, "Training JSONL")->required();
  t->add_option("--bpe", train.bpe, "BPE model")->required();
  t->add_option("--out-ckpt", train.out_ckpt, "Checkpoint path")->required();
  t->add_option("--ablation", train.ablation, "no-question | bio-only");
  t->add_option("--steps", train.steps, "Override config steps");
  t->add_option("--seed", train.seed, "Override config seed");
  t->add_option("--set", train.overrides, "Override a config key (key=value, repeatable)");
  t->add_option("--loss-log", train.loss_log, "Loss CSV (default <ckpt>.loss.csv)");
  t->add_option("--log-every", train.log_every, "Progress line interval, 0 for none");

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Decode answers");
  p->add_option("--ckpt", predict.ckpt, "Checkpoint path")->required();
  p->add_option("--data", predict.data, "Input JSONL")->required();
  p->add_option("--out", predict.out, "Predictions JSONL")->required();
  p->add_option("--mode", predict.mode, "correct (default) | tag");
  p->add_option("--config", predict.config, "Expected config; a mismatch with the checkpoint fails");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "BLEU report for predictions against gold");
  e->add_option("--pred", ev.pred, "Predictions JSONL")->required();
  e->add_option("--gold", ev.gold, "Gold JSONL")->required();
  e->add_option("--json", ev.json_out, "Also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    return app.exit(s, out, err);
  } catch (const CLI::ParseError& pe) {
    app.exit(pe, out, err);
    return kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (b->parsed()) return cmd_learn_bpe(bpe, out);
    if (al->parsed()) return cmd_align(align, out, err);
    if (t->parsed()) return cmd_train(train, out, err);
    if (p->parsed()) return cmd_predict(predict, out, err);
    if (e->parsed()) return cmd_eval(ev, out);
  } catch (const UsageError& ue) {
    err << "error: " << ue.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace qoie::cli
