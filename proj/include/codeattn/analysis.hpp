#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeattn/attention.hpp"
#include "codeattn/corpus.hpp"
#include "codeattn/encoder.hpp"
#include "codeattn/subtok.hpp"

namespace codeattn {

// Word classes used by the attention analyses. SEPS groups Java punctuation
// separators; SEP is the framing token.
enum class WordClass { Cls, Sep, Idf, Seps, Op, Dtp, Key, Mod, Other };

inline constexpr WordClass kConstructClasses[] = {WordClass::Idf, WordClass::Seps, WordClass::Op,
                                                  WordClass::Dtp, WordClass::Key,  WordClass::Mod};

std::string_view class_label(WordClass c);
WordClass word_class(TokenType type);
inline bool is_special(WordClass c) { return c == WordClass::Cls || c == WordClass::Sep; }

// One word-level attention tensor with a class per word.
struct AnalysisSequence {
  AttentionTensor attention;
  std::vector<WordClass> classes;
};

// Encodes one document as [CLS] tokens [SEP] and aggregates attention to words.
AnalysisSequence build_analysis_sequence(const Document& document, const Vocab& vocab, const Encoder& encoder);

// Word classes of a framed sequence, in word order.
std::vector<WordClass> word_classes(const AlignmentMap& map, std::span<const Token> kept_tokens);

inline constexpr int kAllHeads = 0;

struct AnalysisRecord {
  std::string analysis;
  int layer = 1;           // 1-based
  int head = kAllHeads;    // 1-based; kAllHeads when averaged over heads
  std::string label;
  std::string mode;        // "mass" or "occurrence"
  double value = 0.0;
  std::size_t n = 0;
};

// Compensated summation.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// Attention directed to [CLS] and [SEP]. Mass mode: per sequence, the mean over
// all source rows of the mass sent to the token class. Occurrence mode: per
// sequence, total mass received divided by the number of occurrences. Both
// are averaged over the sequences containing the class.
std::vector<AnalysisRecord> special_token_attention(std::span<const AnalysisSequence> corpus);

// Mean A[i,i], A[i,i-1] and A[i,i+1] over non-special source words, pooled over
// the corpus. A source lacking a neighbour is left out of that statistic.
std::vector<AnalysisRecord> relative_position_attention(std::span<const AnalysisSequence> corpus);

// Base-2 Jensen-Shannon divergence; 0 log 0 is taken as 0.
double jensen_shannon(std::span<const double> p, std::span<const double> q);

// Square matrix over heads flattened layer-major: entry (a, b) is the mean over
// every source word of the corpus of the JSD between the two heads' rows.
struct RedundancyMatrix {
  int num_layers = 0;
  int num_heads = 0;
  Matrix values;
  std::size_t rows_compared = 0;

  std::string head_label(int flat) const;
};

RedundancyMatrix head_redundancy(std::span<const AnalysisSequence> corpus);

// Records form of the matrix: one record per ordered head pair.
std::vector<AnalysisRecord> redundancy_records(const RedundancyMatrix& matrix);

// Attention received by each construct class from non-special sources, in
// both modes (see special_token_attention).
std::vector<AnalysisRecord> construct_attention(std::span<const AnalysisSequence> corpus);

// Outgoing mass from identifier rows to each construct class, plus a residual
// label for specials and other tokens, averaged over heads per layer.
std::vector<AnalysisRecord> identifier_relationship(std::span<const AnalysisSequence> corpus);

// CSV with columns analysis,layer,head,class,mode,value,n.
void write_records_csv(std::ostream& out, const std::vector<AnalysisRecord>& records);
std::vector<AnalysisRecord> read_records_csv(std::istream& in);

// Square CSV with an "L{l}H{h}" header row and column.
void write_redundancy_csv(std::ostream& out, const RedundancyMatrix& matrix);

}  // namespace codeattn
