#include "qoie/model/trainer.hpp"

#include "qoie/eval.hpp"

#include <numeric>
#include <string>

namespace qoie::model {

namespace {

struct ExampleView {
  std::span<const int> question, passage, tags, answer;
  std::span<const std::uint8_t> question_valid, passage_valid;
};

// Rows of a padded batch cut back to their real length; attention then never
// sees padding at all.
ExampleView view(const data::Batch& b, int r) {
  auto cut = [r](const data::PaddedIds& p) { return p.row(r).first(static_cast<std::size_t>(p.length(r))); };
  auto cut_mask = [r](const data::PaddedIds& p) {
    return p.mask_row(r).first(static_cast<std::size_t>(p.length(r)));
  };
  return {cut(b.question), cut(b.passage), cut(b.tags), cut(b.answer), cut_mask(b.question), cut_mask(b.passage)};
}

double count_real(const data::PaddedIds& p) {
  return static_cast<double>(std::accumulate(p.mask.begin(), p.mask.end(), 0));
}

std::vector<std::uint8_t> ones(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

BatchLoss run_batch(const Model& model, const data::Batch& batch, ParameterSet* grads, Rng* dropout_rng) {
  const double tag_denominator = count_real(batch.tags);
  const double answer_denominator = count_real(batch.answer);
  const double lambda = model.config().lambda;
  BatchLoss total;
  for (int r = 0; r < batch.size(); ++r) {
    const ExampleView ex = view(batch, r);
    Graph graph(grads != nullptr);
    graph.set_dropout_rng(dropout_rng);
    const std::vector<int> prefix = shift_right(ex.answer);
    const ForwardResult fwd =
        model.forward(graph, {ex.question, ex.question_valid}, {ex.passage, ex.passage_valid}, prefix);
    const Tensor tag = tagging_loss(fwd.tags.probs, ex.tags, ones(ex.tags.size()), tag_denominator);
    const Tensor corr = correction_loss(fwd.logits, ex.answer, ones(ex.answer.size()), answer_denominator);
    const Tensor joint = joint_loss(tag, corr, lambda);
    if (grads != nullptr) {
      numerics::backward(joint);
      graph.accumulate_gradients(*grads);
    }
    total.tag += tag.item();
    total.correction += corr.item();
  }
  total.joint = lambda * total.tag + total.correction;
  return total;
}

}  // namespace

BatchLoss accumulate_batch(Model& model, const data::Batch& batch, Rng* dropout_rng) {
  return run_batch(model, batch, &model.params(), dropout_rng);
}

BatchLoss evaluate_batch(const Model& model, const data::Batch& batch) {
  return run_batch(model, batch, nullptr, nullptr);
}

Trainer::Trainer(Model& model, std::vector<data::EncodedExample> corpus)
    : model_(model),
      corpus_(std::move(corpus)),
      adam_(model.params(), numerics::AdamOptions{model.config().lr}),
      shuffle_rng_(model.config().seed, 0x2545f4914f6cdd1dULL),
      dropout_rng_(model.config().seed, 0x94d049bb133111ebULL) {
  if (corpus_.empty()) throw std::invalid_argument("Trainer: empty training corpus");
}

void Trainer::next_epoch() {
  std::vector<std::size_t> order(corpus_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[shuffle_rng_.below(static_cast<std::uint32_t>(i))]);
  }
  std::vector<data::EncodedExample> shuffled;
  shuffled.reserve(order.size());
  for (auto i : order) shuffled.push_back(corpus_[i]);
  epoch_ = data::batchify(shuffled, model_.config().batch_size);
  cursor_ = 0;
}

StepLog Trainer::step() {
  if (cursor_ >= epoch_.size()) next_epoch();
  const data::Batch& batch = epoch_[cursor_++];
  model_.params().zero_grad();
  Rng* dropout = model_.config().dropout > 0.0 ? &dropout_rng_ : nullptr;
  const BatchLoss loss = accumulate_batch(model_, batch, dropout);
  numerics::adam_step(model_.params(), adam_);
  ++steps_;
  return {steps_, loss.tag, loss.correction, loss.joint};
}

std::vector<StepLog> Trainer::run(const std::function<bool(const StepLog&)>& on_step) {
  std::vector<StepLog> log;
  while (steps_ < model_.config().steps) {
    log.push_back(step());
    if (on_step && !on_step(log.back())) break;
  }
  return log;
}

TagAccuracy tag_accuracy(const Model& model, const std::vector<data::EncodedExample>& corpus) {
  TagAccuracy acc;
  for (const auto& ex : corpus) {
    const std::vector<int> predicted = model.predict_tags(ex.question, ex.passage);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      acc.correct += predicted[i] == ex.tags[i] ? 1 : 0;
      ++acc.total;
    }
  }
  return acc;
}

tagscheme::AnswerTuple predict_corrected(const Model& model, const data::EncodedExample& example,
                                         const tokenizer::BpeModel& bpe, std::size_t* malformed) {
  const std::vector<int> ids = model.greedy_decode(example.question, example.passage);
  return eval::parse_answer(bpe.decode(ids), malformed);
}

tagscheme::AnswerTuple predict_tagged(const Model& model, const data::EncodedExample& example,
                                      const tokenizer::BpeModel& bpe, const tagscheme::TagVocab& vocab) {
  const std::vector<int> predicted = model.predict_tags(example.question, example.passage);
  std::vector<tagscheme::SemanticTag> tags;
  tags.reserve(predicted.size());
  for (int id : predicted) tags.push_back(vocab.tag(id));

  // Read fields off subword ids spelled as words, then undo BPE per field.
  tagscheme::Words id_words;
  for (int id : example.passage) id_words.push_back(std::to_string(id));
  const tagscheme::AnswerTuple by_id = tagscheme::tags_to_tuple(tags, id_words);
  auto to_words = [&bpe](const tagscheme::Words& field) {
    std::vector<int> ids;
    for (const auto& w : field) ids.push_back(std::stoi(w));
    return bpe.decode(ids);
  };
  tagscheme::AnswerTuple out;
  out.subject = to_words(by_id.subject);
  out.predicate = to_words(by_id.predicate);
  for (const auto& arg : by_id.arguments) out.arguments.push_back(to_words(arg));
  if (out.arguments.empty()) out.arguments.emplace_back();
  return out;
}

}  // namespace qoie::model
