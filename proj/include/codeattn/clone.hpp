#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "codeattn/corpus.hpp"
#include "codeattn/encoder.hpp"
#include "codeattn/rng.hpp"
#include "codeattn/subtok.hpp"

namespace codeattn {

struct ClonePair {
  std::string code_a;
  std::string code_b;
  bool is_clone = false;
};

struct PairInput {
  FramedSequence framed;
  std::vector<bool> identifier;  // per alignment word
};

// [CLS] A [SEP] B [SEP] with segments 0/1; comments are stripped before lexing.
PairInput build_pair_input(const ClonePair& pair, const Vocab& vocab, std::size_t max_len);

enum class EmbeddingSource { Cls, Idf };
inline constexpr int kPooledLayer = -1;

struct EmbeddingSpec {
  EmbeddingSource source = EmbeddingSource::Cls;
  int layer = kPooledLayer;  // 1..num_layers, or kPooledLayer

  std::string source_label() const { return source == EmbeddingSource::Cls ? "CLS" : "IDF"; }
  std::string layer_label() const { return layer == kPooledLayer ? "pooled" : std::to_string(layer); }
};

// CLS and IDF specs for every layer plus pooled, in that order per source.
std::vector<EmbeddingSpec> all_specs(int num_layers, std::span<const EmbeddingSource> sources);

RowVector cls_embedding(const ForwardOutput& forward, const EmbeddingSpec& spec);

struct IdfEmbedding {
  RowVector vector;
  std::vector<double> weights;  // normalised, one per identifier word
  bool fallback = false;        // no identifiers: the CLS vector was used
};

// Sum of w_i * h_i with w_i = a_i / sum(a). Rows of states are the h_i.
RowVector weighted_identifier_sum(std::span<const double> attention_received, const Matrix& states);

// word_attention is the word-level aggregate of forward.attention.
IdfEmbedding idf_weighted_embedding(const ForwardOutput& forward, const AttentionTensor& word_attention,
                                    const PairInput& input, const EmbeddingSpec& spec, const Encoder& encoder);

// Every spec's embedding of one pair, from a single forward pass.
struct PairEmbeddings {
  std::vector<RowVector> vectors;  // parallel to the spec list
  bool idf_fallback = false;
};

PairEmbeddings embed_pair(const ClonePair& pair, const Vocab& vocab, const Encoder& encoder,
                          std::span<const EmbeddingSpec> specs);

// Affine map plus sigmoid over standardised features.
struct LogisticHead {
  RowVector mean;
  RowVector scale;
  RowVector weights;
  double bias = 0.0;

  double probability(const RowVector& x) const;
  bool predict(const RowVector& x) const { return probability(x) >= 0.5; }
};

struct HeadOptions {
  int epochs = 3;
  double learning_rate = 0.1;
  double l2 = 0.0;
  std::uint64_t seed = 42;
};

// Per-example gradient descent on binary cross-entropy. Throws on single-class data.
LogisticHead train_head(std::span<const RowVector> features, std::span<const int> labels,
                        const HeadOptions& options = {});

struct CloneMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
};

// Metrics on the clone class; undefined ratios are reported as 0.
CloneMetrics binary_metrics(std::span<const int> predictions, std::span<const int> labels);
CloneMetrics evaluate(const LogisticHead& head, std::span<const RowVector> features, std::span<const int> labels);

// Positive pairs: a function and a consistently renamed, re-spaced copy.
// Negative pairs: two different functions, the second equally renamed and
// re-spaced. Labels alternate, so an even size is exactly balanced.
std::vector<ClonePair> make_synthetic_clone_set(const std::vector<Document>& documents, std::uint64_t seed,
                                                std::size_t size);

// Renames identifiers that start with a lowercase letter and are not member
// selections (preceded by '.'), and varies the whitespace between tokens.
std::string rename_and_perturb(const std::string& source, Rng& rng);

// One record per line: label TAB codeA TAB codeB, with \n, \t and \\ escaped.
void write_pairs(std::ostream& out, const std::vector<ClonePair>& pairs);
std::vector<ClonePair> read_pairs(std::istream& in);

struct CloneResult {
  EmbeddingSpec spec;
  CloneMetrics metrics;
};

struct CloneSweep {
  std::vector<CloneResult> results;
  std::size_t idf_fallbacks = 0;
};

// Trains one head per spec on train and scores it on test.
CloneSweep run_clone_sweep(const std::vector<ClonePair>& train, const std::vector<ClonePair>& test,
                           const Vocab& vocab, const Encoder& encoder, std::span<const EmbeddingSpec> specs,
                           const HeadOptions& options = {});

// source,layer,precision,recall,f1,n
void write_clone_results_csv(std::ostream& out, const std::vector<CloneResult>& results);

}  // namespace codeattn
