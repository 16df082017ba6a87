#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codeattn/corpus.hpp"
#include "codeattn/encoder.hpp"
#include "codeattn/java_lexer.hpp"
#include "codeattn/subtok.hpp"

namespace codeattn {

struct MaskedProbe {
  FramedSequence framed;                    // unmasked framing and alignment
  std::vector<int> masked_ids;              // every piece of every target token replaced by [MASK]
  std::vector<std::size_t> word_positions;  // alignment word indices of the masked tokens
  bool empty = false;                       // target type absent from the kept tokens
};

MaskedProbe mask_by_type(std::span<const Token> tokens, TokenType target, const Vocab& vocab, std::size_t max_len);

// Joins pieces (dropping continuation prefixes) and classifies the text as a
// standalone Java token; anything that is not exactly one token is Other.
TokenType classify_predicted(std::string_view text);
TokenType classify_predicted(std::span<const int> pieces, const Vocab& vocab);

struct ProbeRecord {
  std::size_t sequence = 0;
  std::size_t position = 0;  // word index within the framed sequence
  TokenType gold = TokenType::Other;
  std::string predicted_text;
  TokenType predicted = TokenType::Other;
};

// Rows: gold probe type; columns: predicted probe type, with a final column
// for every other prediction. Counts aggregate over all runs, so a false
// positive for type t is a prediction of t inside another type's run.
class TypeConfusion {
 public:
  static constexpr std::size_t kTypes = std::size(kProbeTypes);
  static constexpr std::size_t kOther = kTypes;

  static std::size_t index_of(TokenType type);

  void add(TokenType gold, TokenType predicted);
  void add(std::size_t gold_index, std::size_t predicted_index, std::size_t count = 1);
  std::size_t at(std::size_t gold_index, std::size_t predicted_index) const { return counts_[gold_index][predicted_index]; }
  std::size_t total() const;

 private:
  std::array<std::array<std::size_t, kTypes + 1>, kTypes + 1> counts_{};
};

TypeConfusion confusion_from_records(std::span<const ProbeRecord> records);

// Undefined ratios (zero denominator) are empty optionals.
struct TypeScore {
  TokenType type = TokenType::Other;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t n = 0;  // masked positions whose gold type is this type
};

std::vector<TypeScore> score(const TypeConfusion& confusion);

struct MicroScore {
  double precision = 0.0;
  double recall = 0.0;
};
MicroScore micro_score(const TypeConfusion& confusion);

struct ProbeResult {
  std::vector<ProbeRecord> records;
  TypeConfusion confusion;
  std::size_t empty_runs = 0;
};

// Seven runs per document, one per probe type; each masked word is predicted
// piece by piece with a single argmax.
ProbeResult run_probe(const std::vector<Document>& documents, const Vocab& vocab, const Encoder& encoder);

// type,precision,recall,f1,n with "NA" for undefined values.
void write_probe_results_csv(std::ostream& out, const std::vector<TypeScore>& scores);
// sequence,position,gold,predicted_text,predicted_type
void write_probe_raw_csv(std::ostream& out, const std::vector<ProbeRecord>& records);

}  // namespace codeattn
