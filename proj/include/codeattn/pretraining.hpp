#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "codeattn/corpus.hpp"
#include "codeattn/encoder.hpp"
#include "codeattn/rng.hpp"
#include "codeattn/subtok.hpp"

namespace codeattn {

// --- masked language modelling --------------------------------------------

struct MaskingRates {
  double select = 0.15;         // per non-special position
  double replace_mask = 0.80;   // of selected: replaced by [MASK]
  double replace_random = 0.10; // of selected: replaced by a random piece; rest unchanged
};

enum class MaskBranch { Mask, Random, Unchanged };

struct MaskedSequence {
  std::vector<int> ids;
  std::vector<std::size_t> positions;  // ascending
  std::vector<int> targets;            // original ids at positions
  std::vector<MaskBranch> branches;    // parallel to positions
};

// Selects positions independently at rates.select; if none is drawn, one
// eligible position is chosen uniformly so every sequence carries a target.
// Random replacements are drawn from the non-reserved ids [5, vocab_size).
MaskedSequence mask_for_mlm(std::span<const int> ids, const std::vector<bool>& special, int vocab_size,
                            Rng& rng, const MaskingRates& rates = {});

// --- next sentence prediction ---------------------------------------------

// Sentences of one document, each stored as its words' subword pieces.
struct PretrainingDocument {
  std::string name;
  std::vector<WordPieces> sentences;
};
struct PretrainingCorpus {
  std::vector<PretrainingDocument> documents;
  int vocab_size = 0;  // random MLM replacements are drawn below this id
};

PretrainingCorpus build_pretraining_corpus(const std::vector<Document>& documents, const Vocab& vocab);

struct SentenceRef {
  std::size_t document = 0;
  std::size_t sentence = 0;
  bool operator==(const SentenceRef&) const = default;
};

struct NspPair {
  SentenceRef first;
  SentenceRef second;
  bool is_next = true;
};

// One pair per consecutive sentence pair. With probability negative_rate the
// second sentence is replaced by a sentence drawn from another document whose
// content differs from the true next sentence.
std::vector<NspPair> make_nsp_pairs(const PretrainingCorpus& corpus, Rng& rng, double negative_rate = 0.5);

// [CLS] first [SEP] second [SEP], masked.
TrainingExample make_training_example(const PretrainingCorpus& corpus, const NspPair& pair,
                                      const EncoderConfig& config, Rng& rng, const MaskingRates& rates = {});

// --- optimisation ----------------------------------------------------------

enum class OptimizerKind { Sgd, Adam };

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::Sgd;
  double learning_rate = 0.01;
  double clip_norm = 1.0;  // global gradient-norm clip; <= 0 disables
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Optimizer {
 public:
  Optimizer(const OptimizerOptions& options, const EncoderConfig& config);

  // Clips gradients in place, then updates params. Returns the pre-clip norm.
  double step(EncoderParams& params, ParamGradients& gradients);

  const OptimizerOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  OptimizerOptions options_;
  ParamGradients first_moment_;
  ParamGradients second_moment_;
  std::uint64_t steps_ = 0;
};

struct StepResult {
  double mlm_loss = 0.0;
  double nsp_loss = 0.0;
  LossBreakdown detail;
};

// One plain gradient-descent step with gradient-norm clipping at 1.0.
// Throws DivergenceError naming the first tensor holding a non-finite value.
StepResult train_step(std::span<const TrainingExample> batch, EncoderParams& params,
                      const EncoderConfig& config, double learning_rate);

// Same, with an explicit optimiser carrying state across steps.
StepResult train_step(std::span<const TrainingExample> batch, EncoderParams& params,
                      const EncoderConfig& config, Optimizer& optimizer);

// --- pretraining loop -------------------------------------------------------

struct PretrainSchedule {
  int epochs = 10;
  std::size_t batch_size = 16;
  OptimizerOptions optimizer;  // learning_rate is the peak rate
  // Linear warmup over this fraction of all steps, then linear decay to zero
  // when decay is set. Post-LN stacks are unstable at high rates without it.
  double warmup_fraction = 0.0;
  bool decay = false;
  MaskingRates masking;
  std::uint64_t seed = 42;
  std::function<void(const struct MetricsRow&)> on_epoch;
};

struct MetricsRow {
  int epoch = 0;
  std::uint64_t step = 0;
  double mlm_loss = 0.0;
  double nsp_loss = 0.0;
  double mlm_acc = 0.0;
  double nsp_acc = 0.0;
};

struct PretrainResult {
  EncoderParams params;
  std::vector<MetricsRow> metrics;
};

// Learning rate for a 1-based step out of total_steps.
double scheduled_learning_rate(const PretrainSchedule& schedule, std::uint64_t step, std::uint64_t total_steps);

// Trains from init_params(config); metrics are running training averages per epoch.
PretrainResult pretrain(const PretrainingCorpus& corpus, const EncoderConfig& config,
                        const PretrainSchedule& schedule);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

struct HeldInAccuracy {
  double mlm_accuracy = 0.0;
  double nsp_accuracy = 0.0;
  std::size_t mlm_count = 0;
  std::size_t nsp_count = 0;
};

// Accuracy on freshly sampled pairs and masks from the training corpus.
HeldInAccuracy evaluate_pretraining(const PretrainingCorpus& corpus, const Encoder& encoder, std::uint64_t seed,
                                    int rounds = 1, const MaskingRates& rates = {});

}  // namespace codeattn
