#pragma once

#include "qoie/data.hpp"
#include "qoie/model/model.hpp"
#include "qoie/numerics/adam.hpp"
#include "qoie/rng.hpp"

#include <functional>
#include <vector>

namespace qoie::model {

struct StepLog {
  int step = 0;
  double tag_loss = 0.0;
  double correction_loss = 0.0;
  double joint = 0.0;
};

// Batch losses: token-mean tagging and correction losses over the whole
// batch, joined as lambda · tag + correct.
struct BatchLoss {
  double tag = 0.0;
  double correction = 0.0;
  double joint = 0.0;
};

// Forward + backward over one padded batch. Gradients are added into
// model.params() (call zero_grad first); each example gets its own graph and
// the per-example gradients are summed in batch order.
BatchLoss accumulate_batch(Model& model, const data::Batch& batch, Rng* dropout_rng = nullptr);

// Loss only, without building gradients.
BatchLoss evaluate_batch(const Model& model, const data::Batch& batch);

class Trainer {
 public:
  // Each epoch reshuffles the corpus with a generator seeded from the model
  // config, then cuts it into batches of config.batch_size.
  Trainer(Model& model, std::vector<data::EncodedExample> corpus);

  // One Adam application over the next batch.
  StepLog step();

  // Runs until config.steps; `on_step` returning false stops early.
  std::vector<StepLog> run(const std::function<bool(const StepLog&)>& on_step = {});

  int steps_taken() const { return steps_; }

 private:
  void next_epoch();

  Model& model_;
  std::vector<data::EncodedExample> corpus_;
  numerics::AdamState adam_;
  Rng shuffle_rng_;
  Rng dropout_rng_;
  std::vector<data::Batch> epoch_;
  std::size_t cursor_ = 0;
  int steps_ = 0;
};

struct TagAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

// Argmax subword tag accuracy over real passage positions.
TagAccuracy tag_accuracy(const Model& model, const std::vector<data::EncodedExample>& corpus);

// Tagging + correction: greedy decode, undo BPE, parse on <split>.
tagscheme::AnswerTuple predict_corrected(const Model& model, const data::EncodedExample& example,
                                         const tokenizer::BpeModel& bpe, std::size_t* malformed = nullptr);

// Tagging only: argmax tags, fields read off the subword sequence, each field
// decoded back to words.
tagscheme::AnswerTuple predict_tagged(const Model& model, const data::EncodedExample& example,
                                      const tokenizer::BpeModel& bpe, const tagscheme::TagVocab& vocab);

}  // namespace qoie::model
