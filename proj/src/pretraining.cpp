#include "codeattn/pretraining.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {

MaskedSequence mask_for_mlm(std::span<const int> ids, const std::vector<bool>& special, int vocab_size,
                            Rng& rng, const MaskingRates& rates) {
  if (special.size() != ids.size()) throw ShapeError("special mask length differs from the sequence length");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!special[i]) eligible.push_back(i);
  }
  if (eligible.empty()) throw Error("nothing to mask: every position is a special token");

  MaskedSequence out;
  out.ids.assign(ids.begin(), ids.end());
  for (std::size_t i : eligible) {
    if (rng.bernoulli(rates.select)) out.positions.push_back(i);
  }
  if (out.positions.empty()) out.positions.push_back(eligible[rng.below(eligible.size())]);

  const bool can_randomize = vocab_size > kReservedCount;
  for (std::size_t pos : out.positions) {
    out.targets.push_back(ids[pos]);
    const double u = rng.uniform();
    if (u < rates.replace_mask) {
      out.ids[pos] = kMaskId;
      out.branches.push_back(MaskBranch::Mask);
    } else if (u < rates.replace_mask + rates.replace_random) {
      if (can_randomize) {
        out.ids[pos] = kReservedCount + static_cast<int>(rng.below(static_cast<std::size_t>(vocab_size - kReservedCount)));
      } else {
        out.ids[pos] = kMaskId;
      }
      out.branches.push_back(MaskBranch::Random);
    } else {
      out.branches.push_back(MaskBranch::Unchanged);
    }
  }
  return out;
}

PretrainingCorpus build_pretraining_corpus(const std::vector<Document>& documents, const Vocab& vocab) {
  PretrainingCorpus corpus;
  corpus.vocab_size = vocab.size();
  for (const auto& doc : documents) {
    PretrainingDocument pd;
    pd.name = doc.name;
    for (const auto& sentence : doc.sentences()) pd.sentences.push_back(segment_words(sentence, vocab));
    if (!pd.sentences.empty()) corpus.documents.push_back(std::move(pd));
  }
  return corpus;
}

namespace {

const WordPieces& sentence_at(const PretrainingCorpus& corpus, const SentenceRef& ref) {
  return corpus.documents[ref.document].sentences[ref.sentence];
}

}  // namespace

std::vector<NspPair> make_nsp_pairs(const PretrainingCorpus& corpus, Rng& rng, double negative_rate) {
  const auto& docs = corpus.documents;
  if (negative_rate > 0.0 && docs.size() < 2) {
    throw Error("cannot sample negative sentences from a single-document corpus");
  }
  std::vector<NspPair> pairs;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t s = 0; s + 1 < docs[d].sentences.size(); ++s) {
      NspPair pair{{d, s}, {d, s + 1}, true};
      if (rng.bernoulli(negative_rate)) {
        const WordPieces& true_next = docs[d].sentences[s + 1];
        // Rejection sampling; identical lines recur across functions ("}" for one).
        bool found = false;
        for (int attempt = 0; attempt < 64 && !found; ++attempt) {
          std::size_t other = rng.below(docs.size() - 1);
          if (other >= d) ++other;
          if (docs[other].sentences.empty()) continue;
          const std::size_t sentence = rng.below(docs[other].sentences.size());
          if (docs[other].sentences[sentence] != true_next) {
            pair.second = {other, sentence};
            found = true;
          }
        }
        if (!found) {
          std::vector<SentenceRef> candidates;
          for (std::size_t o = 0; o < docs.size(); ++o) {
            if (o == d) continue;
            for (std::size_t k = 0; k < docs[o].sentences.size(); ++k) {
              if (docs[o].sentences[k] != true_next) candidates.push_back({o, k});
            }
          }
          if (candidates.empty()) throw Error("no sentence in other documents differs from " + docs[d].name);
          pair.second = candidates[rng.below(candidates.size())];
        }
        pair.is_next = false;
      }
      pairs.push_back(pair);
    }
  }
  if (pairs.empty()) throw Error("corpus has no document with two or more sentences");
  return pairs;
}

TrainingExample make_training_example(const PretrainingCorpus& corpus, const NspPair& pair,
                                      const EncoderConfig& config, Rng& rng, const MaskingRates& rates) {
  const FramedSequence framed = frame_pair(sentence_at(corpus, pair.first), sentence_at(corpus, pair.second),
                                           static_cast<std::size_t>(config.max_seq_len));
  std::vector<bool> special(framed.ids.size());
  for (std::size_t i = 0; i < framed.ids.size(); ++i) {
    special[i] = framed.ids[i] == kClsId || framed.ids[i] == kSepId;
  }
  const int random_limit = corpus.vocab_size > 0 ? std::min(corpus.vocab_size, config.vocab_size) : config.vocab_size;
  MaskedSequence masked = mask_for_mlm(framed.ids, special, random_limit, rng, rates);

  TrainingExample example;
  example.ids = std::move(masked.ids);
  example.segments = framed.segments;
  example.mlm_positions = std::move(masked.positions);
  example.mlm_targets = std::move(masked.targets);
  example.nsp_label = pair.is_next ? 1 : 0;
  return example;
}

// --- optimisation ----------------------------------------------------------

namespace {

template <typename Params>
std::string first_non_finite(const Params& params) {
  std::string name;
  params.visit([&](const std::string& n, const auto& t) {
    if (name.empty() && !t.allFinite()) name = n;
  });
  return name;
}

}  // namespace

Optimizer::Optimizer(const OptimizerOptions& options, const EncoderConfig& config) : options_(options) {
  if (options_.kind == OptimizerKind::Adam) {
    first_moment_ = ParamGradients::zeros(config);
    second_moment_ = ParamGradients::zeros(config);
  }
}

double Optimizer::step(EncoderParams& params, ParamGradients& gradients) {
  double sq = 0.0;
  gradients.visit([&](const std::string&, const ParamGradients::Tensor& g) { sq += g.squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw DivergenceError(first_non_finite(gradients) + " gradient");
  if (options_.clip_norm > 0.0 && norm > options_.clip_norm) {
    const double factor = options_.clip_norm / norm;
    gradients.visit([&](const std::string&, ParamGradients::Tensor& g) { g *= factor; });
  }

  const double lr = options_.learning_rate;
  auto grads = gradients.tensor_list();
  auto targets = params.tensor_list();
  if (options_.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (lr == 0.0) break;
      EncoderParams::Tensor& p = *targets[i];
      p = (p.cast<double>() - lr * *grads[i]).cast<float>();
    }
  } else {
    ++steps_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    auto m = first_moment_.tensor_list();
    auto v = second_moment_.tensor_list();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const ParamGradients::Tensor& g = *grads[i];
      *m[i] = b1 * *m[i] + (1.0 - b1) * g;
      *v[i] = b2 * *v[i] + (1.0 - b2) * g.cwiseProduct(g);
      if (lr == 0.0) continue;
      const auto update = (m[i]->array() / correction1) / ((v[i]->array() / correction2).sqrt() + options_.epsilon);
      EncoderParams::Tensor& p = *targets[i];
      p = (p.cast<double>().array() - lr * update).matrix().cast<float>();
    }
  }

  const std::string bad = first_non_finite(params);
  if (!bad.empty()) throw DivergenceError(bad);
  return norm;
}

StepResult train_step(std::span<const TrainingExample> batch, EncoderParams& params, const EncoderConfig& config,
                      Optimizer& optimizer) {
  if (batch.empty()) throw Error("training batch is empty");
  if (const std::string bad = first_non_finite(params); !bad.empty()) throw DivergenceError(bad);
  const WideParams wide = params.cast<double>();
  ParamGradients gradients;
  StepResult result;
  result.detail = compute_loss(batch, wide, config, &gradients);
  result.mlm_loss = result.detail.mlm_loss;
  result.nsp_loss = result.detail.nsp_loss;
  if (!std::isfinite(result.detail.total())) {
    const std::string bad = first_non_finite(gradients);
    throw DivergenceError(bad.empty() ? std::string("loss") : bad + " gradient");
  }
  optimizer.step(params, gradients);
  return result;
}

StepResult train_step(std::span<const TrainingExample> batch, EncoderParams& params, const EncoderConfig& config,
                      double learning_rate) {
  OptimizerOptions options;
  options.learning_rate = learning_rate;
  Optimizer optimizer(options, config);
  return train_step(batch, params, config, optimizer);
}

// --- pretraining loop -------------------------------------------------------

double scheduled_learning_rate(const PretrainSchedule& schedule, std::uint64_t step, std::uint64_t total_steps) {
  const double peak = schedule.optimizer.learning_rate;
  if (total_steps == 0) return peak;
  const double t = static_cast<double>(step);
  const double total = static_cast<double>(total_steps);
  const double warmup = std::clamp(schedule.warmup_fraction, 0.0, 1.0) * total;
  if (t <= warmup) return peak * t / warmup;
  if (!schedule.decay) return peak;
  return peak * std::max(0.0, total - t + 1.0) / std::max(1.0, total - warmup);
}

PretrainResult pretrain(const PretrainingCorpus& corpus, const EncoderConfig& config,
                        const PretrainSchedule& schedule) {
  if (corpus.documents.empty()) throw Error("pretraining corpus is empty");
  if (schedule.batch_size == 0) throw Error("batch size must be positive");
  config.validate();

  PretrainResult result;
  result.params = init_params(config);
  Optimizer optimizer(schedule.optimizer, config);
  Rng rng(schedule.seed);
  std::uint64_t step = 0;
  std::size_t pairs_per_epoch = 0;
  for (const auto& doc : corpus.documents) {
    if (doc.sentences.size() > 1) pairs_per_epoch += doc.sentences.size() - 1;
  }
  const std::uint64_t total_steps = static_cast<std::uint64_t>(schedule.epochs > 0 ? schedule.epochs : 0) *
                                    ((pairs_per_epoch + schedule.batch_size - 1) / schedule.batch_size);

  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    std::vector<NspPair> pairs = make_nsp_pairs(corpus, rng);
    rng.shuffle(pairs.begin(), pairs.end());

    double mlm_loss_sum = 0.0, nsp_loss_sum = 0.0;
    std::size_t mlm_correct = 0, mlm_total = 0, nsp_correct = 0, nsp_total = 0;
    for (std::size_t start = 0; start < pairs.size(); start += schedule.batch_size) {
      const std::size_t end = std::min(pairs.size(), start + schedule.batch_size);
      std::vector<TrainingExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(make_training_example(corpus, pairs[i], config, rng, schedule.masking));
      }
      ++step;
      optimizer.set_learning_rate(scheduled_learning_rate(schedule, step, total_steps));
      const StepResult r = train_step(batch, result.params, config, optimizer);
      mlm_loss_sum += r.mlm_loss * static_cast<double>(r.detail.mlm_total);
      nsp_loss_sum += r.nsp_loss * static_cast<double>(r.detail.nsp_total);
      mlm_correct += r.detail.mlm_correct;
      mlm_total += r.detail.mlm_total;
      nsp_correct += r.detail.nsp_correct;
      nsp_total += r.detail.nsp_total;
    }

    MetricsRow row;
    row.epoch = epoch;
    row.step = step;
    row.mlm_loss = mlm_loss_sum / static_cast<double>(mlm_total);
    row.nsp_loss = nsp_loss_sum / static_cast<double>(nsp_total);
    row.mlm_acc = static_cast<double>(mlm_correct) / static_cast<double>(mlm_total);
    row.nsp_acc = static_cast<double>(nsp_correct) / static_cast<double>(nsp_total);
    result.metrics.push_back(row);
    if (schedule.on_epoch) schedule.on_epoch(row);
  }
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "epoch,step,mlm_loss,nsp_loss,mlm_acc,nsp_acc\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.step << ',' << csv::format_double(r.mlm_loss) << ','
        << csv::format_double(r.nsp_loss) << ',' << csv::format_double(r.mlm_acc) << ','
        << csv::format_double(r.nsp_acc) << '\n';
  }
}

HeldInAccuracy evaluate_pretraining(const PretrainingCorpus& corpus, const Encoder& encoder, std::uint64_t seed,
                                    int rounds, const MaskingRates& rates) {
  const EncoderConfig& config = encoder.config();
  const WideParams& p = encoder.params();
  Rng rng(seed);
  std::size_t mlm_correct = 0, nsp_correct = 0;
  HeldInAccuracy acc;
  for (int round = 0; round < rounds; ++round) {
    for (const NspPair& pair : make_nsp_pairs(corpus, rng)) {
      const TrainingExample ex = make_training_example(corpus, pair, config, rng, rates);
      const ForwardOutput out = encoder.encode(ex.ids, ex.segments);
      const Matrix& final_states = out.hidden_states.back();
      for (std::size_t k = 0; k < ex.mlm_positions.size(); ++k) {
        const RowVector logits = encoder.mlm_logits(final_states.row(static_cast<Eigen::Index>(ex.mlm_positions[k])));
        if (argmax_lowest({logits.data(), static_cast<std::size_t>(logits.size())}) == ex.mlm_targets[k]) {
          ++mlm_correct;
        }
        ++acc.mlm_count;
      }
      const RowVector nsp = out.pooled * p.nsp_weight + p.nsp_bias;
      if (argmax_lowest({nsp.data(), static_cast<std::size_t>(nsp.size())}) == ex.nsp_label) ++nsp_correct;
      ++acc.nsp_count;
    }
  }
  acc.mlm_accuracy = static_cast<double>(mlm_correct) / static_cast<double>(acc.mlm_count);
  acc.nsp_accuracy = static_cast<double>(nsp_correct) / static_cast<double>(acc.nsp_count);
  return acc;
}

}  // namespace codeattn
