// codeattn command-line entry point: prepare, pretrain, analyze, probe, clone.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "codeattn/analysis.hpp"
#include "codeattn/checkpoint.hpp"
#include "codeattn/clone.hpp"
#include "codeattn/corpus.hpp"
#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"
#include "codeattn/pretraining.hpp"
#include "codeattn/probing.hpp"
#include "codeattn/subtok.hpp"

namespace fs = std::filesystem;
using namespace codeattn;

namespace {

struct RunConfig {
  std::string command;
  std::string corpus;
  std::string out = "codeattn-out";
  std::string checkpoint;
  std::string vocab;
  std::string pairs;
  int layers = 4;
  int heads = 4;
  int hidden = 128;
  int ffn = 0;  // 0: four times hidden
  int max_len = 256;
  int vocab_size = 8192;
  std::uint64_t seed = 42;
  std::string mode = "both";
  std::string embedding = "both";
  int epochs = 200;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  double warmup = 0.05;
  bool decay = true;
  std::size_t clone_size = 600;
  double train_fraction = 0.8;
  int head_epochs = 3;
  double head_lr = 0.1;
  double head_l2 = 0.0;
};

fs::path out_dir(const RunConfig& rc) { return fs::path(rc.out); }
fs::path vocab_path(const RunConfig& rc) { return rc.vocab.empty() ? out_dir(rc) / "vocab.txt" : fs::path(rc.vocab); }
fs::path checkpoint_path(const RunConfig& rc) {
  return rc.checkpoint.empty() ? out_dir(rc) / "encoder.ckpt" : fs::path(rc.checkpoint);
}
fs::path corpus_path(const RunConfig& rc) { return rc.corpus.empty() ? out_dir(rc) / "corpus" : fs::path(rc.corpus); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Comment header carried by every CSV the tool writes.
std::string metadata_header(const RunConfig& rc, const std::string& config_description) {
  std::ostringstream key;
  key << config_description << " mode=" << rc.mode << " embedding=" << rc.embedding << " epochs=" << rc.epochs
      << " batch=" << rc.batch_size << " lr=" << rc.learning_rate << " optimizer=" << rc.optimizer
      << " warmup=" << rc.warmup << " decay=" << rc.decay
      << " clone_size=" << rc.clone_size << " head_epochs=" << rc.head_epochs
      << " head_lr=" << rc.head_lr << " head_l2=" << rc.head_l2;
  return "# codeattn " CODEATTN_VERSION " command=" + rc.command + " seed=" + std::to_string(rc.seed) +
         " config_hash=" + hex64(fnv1a(key.str())) + "\n";
}

void require_file(const fs::path& path, const std::string& what, const std::string& producer) {
  if (!fs::exists(path)) {
    throw Error("missing " + what + " at " + path.string() + "; run `codeattn " + producer + "` first");
  }
}

std::vector<Document> load_corpus(const RunConfig& rc) {
  const fs::path dir = corpus_path(rc);
  if (fs::exists(dir / "manifest.csv")) return read_prepared_corpus(dir);
  if (!fs::is_directory(dir)) {
    throw Error("missing prepared corpus at " + dir.string() + "; run `codeattn prepare` first");
  }
  LoadReport report;
  auto docs = load_java_directory(dir, &report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  return docs;
}

Checkpoint load_model(const RunConfig& rc) {
  const fs::path path = checkpoint_path(rc);
  require_file(path, "checkpoint", "pretrain");
  return load_checkpoint(path);
}

Vocab load_vocab(const RunConfig& rc) {
  const fs::path path = vocab_path(rc);
  require_file(path, "vocabulary", "prepare");
  return Vocab::load(path);
}

void write_csv(const fs::path& path, const std::string& header, const std::string& body) {
  csv::write_file_atomic(path, header + body);
  std::cout << "wrote " << path.string() << '\n';
}

int cmd_prepare(const RunConfig& rc) {
  if (rc.corpus.empty()) throw Error("prepare needs --corpus pointing at a directory of .java files");
  LoadReport report;
  const auto docs = load_java_directory(rc.corpus, &report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  if (docs.empty()) throw Error("no lexable .java files under " + rc.corpus);
  const Vocab vocab = train_vocab(word_counts(docs), static_cast<std::size_t>(rc.vocab_size));
  write_prepared_corpus(out_dir(rc) / "corpus", docs);
  csv::write_file_atomic(vocab_path(rc), vocab.serialize());
  std::cout << "prepared " << docs.size() << " documents, vocabulary of " << vocab.size() << " pieces\n";
  return 0;
}

int cmd_pretrain(const RunConfig& rc) {
  const auto docs = load_corpus(rc);
  const Vocab vocab = load_vocab(rc);
  EncoderConfig config;
  config.num_layers = rc.layers;
  config.num_heads = rc.heads;
  config.hidden_dim = rc.hidden;
  config.ffn_dim = rc.ffn > 0 ? rc.ffn : 4 * rc.hidden;
  config.max_seq_len = rc.max_len;
  config.vocab_size = vocab.size();
  config.seed = rc.seed;
  config.validate();

  PretrainSchedule schedule;
  schedule.epochs = rc.epochs;
  schedule.batch_size = rc.batch_size;
  schedule.seed = rc.seed;
  schedule.optimizer.learning_rate = rc.learning_rate;
  schedule.warmup_fraction = rc.warmup;
  schedule.decay = rc.decay;
  if (rc.optimizer == "adam") {
    schedule.optimizer.kind = OptimizerKind::Adam;
  } else if (rc.optimizer != "sgd") {
    throw Error("--optimizer must be sgd or adam");
  }
  schedule.on_epoch = [](const MetricsRow& row) {
    std::cerr << "epoch " << row.epoch << " mlm_loss=" << row.mlm_loss << " nsp_loss=" << row.nsp_loss
              << " mlm_acc=" << row.mlm_acc << " nsp_acc=" << row.nsp_acc << '\n';
  };

  const PretrainingCorpus corpus = build_pretraining_corpus(docs, vocab);
  const PretrainResult result = pretrain(corpus, config, schedule);
  save_checkpoint(checkpoint_path(rc), result.params, config);
  std::cout << "wrote " << checkpoint_path(rc).string() << '\n';

  std::ostringstream metrics;
  write_metrics_csv(metrics, result.metrics);
  write_csv(out_dir(rc) / "metrics.csv", metadata_header(rc, config.describe()), metrics.str());
  return 0;
}

std::vector<AnalysisRecord> filter_mode(std::vector<AnalysisRecord> records, const std::string& mode) {
  if (mode == "both") return records;
  const std::string keep = mode == "mass" ? "mass" : "occurrence";
  std::vector<AnalysisRecord> out;
  for (auto& r : records) {
    // Analyses with a single mode are always kept.
    if (r.analysis != "special_token" && r.analysis != "construct") {
      out.push_back(std::move(r));
    } else if (r.mode == keep) {
      out.push_back(std::move(r));
    }
  }
  return out;
}

int cmd_analyze(const RunConfig& rc) {
  const Checkpoint ckpt = load_model(rc);
  const Vocab vocab = load_vocab(rc);
  const auto docs = load_corpus(rc);
  const Encoder encoder(ckpt.params, ckpt.config);
  std::vector<AnalysisSequence> sequences;
  for (const auto& doc : docs) sequences.push_back(build_analysis_sequence(doc, vocab, encoder));

  const std::string header = metadata_header(rc, ckpt.config.describe());
  auto emit = [&](const std::string& file, const std::vector<AnalysisRecord>& records) {
    std::ostringstream body;
    write_records_csv(body, filter_mode(records, rc.mode));
    write_csv(out_dir(rc) / file, header, body.str());
  };
  emit("special_tokens.csv", special_token_attention(sequences));
  emit("relative_position.csv", relative_position_attention(sequences));
  const RedundancyMatrix matrix = head_redundancy(sequences);
  emit("head_redundancy.csv", redundancy_records(matrix));
  emit("construct_attention.csv", construct_attention(sequences));
  emit("identifier_relationship.csv", identifier_relationship(sequences));
  std::ostringstream body;
  write_redundancy_csv(body, matrix);
  write_csv(out_dir(rc) / "redundancy_matrix.csv", header, body.str());
  return 0;
}

int cmd_probe(const RunConfig& rc) {
  const Checkpoint ckpt = load_model(rc);
  const Vocab vocab = load_vocab(rc);
  const auto docs = load_corpus(rc);
  const Encoder encoder(ckpt.params, ckpt.config);
  const ProbeResult result = run_probe(docs, vocab, encoder);

  const std::string header = metadata_header(rc, ckpt.config.describe()) +
                             "# confusion aggregated across all seven runs; FP(t) counts t predicted in other runs\n";
  std::ostringstream results, raw;
  write_probe_results_csv(results, score(result.confusion));
  write_probe_raw_csv(raw, result.records);
  write_csv(out_dir(rc) / "probe_results.csv", header, results.str());
  write_csv(out_dir(rc) / "probe_raw.csv", header, raw.str());
  return 0;
}

int cmd_clone(const RunConfig& rc) {
  const Checkpoint ckpt = load_model(rc);
  const Vocab vocab = load_vocab(rc);

  std::vector<ClonePair> pairs;
  if (!rc.pairs.empty()) {
    std::ifstream in(rc.pairs);
    if (!in) throw Error("missing pair file at " + rc.pairs);
    pairs = read_pairs(in);
  } else {
    pairs = make_synthetic_clone_set(load_corpus(rc), rc.seed, rc.clone_size);
    std::ostringstream tsv;
    write_pairs(tsv, pairs);
    csv::write_file_atomic(out_dir(rc) / "clone_pairs.tsv", tsv.str());
  }
  Rng rng(rc.seed);
  rng.shuffle(pairs.begin(), pairs.end());
  const auto cut = static_cast<std::size_t>(static_cast<double>(pairs.size()) * rc.train_fraction);
  const std::vector<ClonePair> train(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(cut));
  const std::vector<ClonePair> test(pairs.begin() + static_cast<std::ptrdiff_t>(cut), pairs.end());

  std::vector<EmbeddingSource> sources;
  if (rc.embedding == "cls" || rc.embedding == "both") sources.push_back(EmbeddingSource::Cls);
  if (rc.embedding == "idf" || rc.embedding == "both") sources.push_back(EmbeddingSource::Idf);
  const auto specs = all_specs(ckpt.config.num_layers, sources);

  HeadOptions options;
  options.epochs = rc.head_epochs;
  options.learning_rate = rc.head_lr;
  options.l2 = rc.head_l2;
  options.seed = rc.seed;
  const std::uint64_t before = checksum(ckpt.params);
  const Encoder encoder(ckpt.params, ckpt.config);
  const std::uint64_t wide_before = checksum(encoder.params());
  const CloneSweep sweep = run_clone_sweep(train, test, vocab, encoder, specs, options);
  if (checksum(ckpt.params) != before || checksum(encoder.params()) != wide_before) {
    throw Error("encoder parameters changed during head training");
  }

  std::string header = metadata_header(rc, ckpt.config.describe());
  if (sweep.idf_fallbacks > 0) {
    header += "# " + std::to_string(sweep.idf_fallbacks) + " pairs without identifiers used the CLS vector\n";
  }
  std::ostringstream body;
  write_clone_results_csv(body, sweep.results);
  write_csv(out_dir(rc) / "clone_results.csv", header, body.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"codeattn: attention analysis toolkit for a small Java code encoder"};
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--corpus", rc.corpus, "Java source directory (prepare) or prepared corpus directory");
  app.add_option("--out", rc.out, "Output directory")->capture_default_str();
  app.add_option("--checkpoint", rc.checkpoint, "Checkpoint path (default <out>/encoder.ckpt)");
  app.add_option("--vocab", rc.vocab, "Vocabulary path (default <out>/vocab.txt)");
  app.add_option("--pairs", rc.pairs, "Clone pair file (label TAB codeA TAB codeB)");
  app.add_option("--layers", rc.layers, "Encoder layers")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--heads", rc.heads, "Attention heads per layer")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--hidden", rc.hidden, "Hidden size")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--ffn", rc.ffn, "Feed-forward size (default 4 x hidden)");
  app.add_option("--max-len", rc.max_len, "Maximum sequence length")->capture_default_str();
  app.add_option("--vocab-size", rc.vocab_size, "Target vocabulary size")->capture_default_str();
  app.add_option("--seed", rc.seed, "Random seed")->capture_default_str();
  app.add_option("--mode", rc.mode, "Attention normalisation")
      ->capture_default_str()
      ->check(CLI::IsMember({"mass", "occurrence", "both"}));
  app.add_option("--embedding", rc.embedding, "Clone embedding source")
      ->capture_default_str()
      ->check(CLI::IsMember({"cls", "idf", "both"}));
  app.add_option("--epochs", rc.epochs, "Pretraining epochs")->capture_default_str();
  app.add_option("--batch-size", rc.batch_size, "Pretraining batch size")->capture_default_str();
  app.add_option("--lr", rc.learning_rate, "Pretraining learning rate")->capture_default_str();
  app.add_option("--optimizer", rc.optimizer, "sgd or adam")
      ->capture_default_str()
      ->check(CLI::IsMember({"sgd", "adam"}));
  app.add_option("--warmup", rc.warmup, "Fraction of pretraining steps spent warming up the learning rate")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--decay", rc.decay, "Decay the learning rate linearly to zero after warmup")
      ->capture_default_str();
  app.add_option("--clone-size", rc.clone_size, "Synthetic clone pairs")->capture_default_str();
  app.add_option("--train-fraction", rc.train_fraction, "Share of pairs used to train the head")
      ->capture_default_str();
  app.add_option("--head-epochs", rc.head_epochs, "Clone head epochs")->capture_default_str();
  app.add_option("--head-lr", rc.head_lr, "Clone head learning rate")->capture_default_str();
  app.add_option("--head-l2", rc.head_l2, "Clone head L2 penalty")->capture_default_str();

  app.add_subcommand("prepare", "Strip comments, lex, persist the corpus and train the vocabulary");
  app.add_subcommand("pretrain", "Pretrain the encoder with masked-token and next-sentence objectives");
  app.add_subcommand("analyze", "Run the attention analyses and write their CSVs");
  app.add_subcommand("probe", "Mask each syntactic type and score the predicted types");
  app.add_subcommand("clone", "Clone detection sweep over CLS and identifier-weighted embeddings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  rc.command = app.get_subcommands().front()->get_name();

  try {
    fs::create_directories(out_dir(rc));
    if (rc.command == "prepare") return cmd_prepare(rc);
    if (rc.command == "pretrain") return cmd_pretrain(rc);
    if (rc.command == "analyze") return cmd_analyze(rc);
    if (rc.command == "probe") return cmd_probe(rc);
    return cmd_clone(rc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
