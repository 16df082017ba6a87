#include "codeattn/probing.hpp"

#include <algorithm>
#include <ostream>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {

MaskedProbe mask_by_type(std::span<const Token> tokens, TokenType target, const Vocab& vocab, std::size_t max_len) {
  MaskedProbe probe;
  probe.framed = tokenize(tokens, vocab, max_len);
  probe.masked_ids = probe.framed.ids;
  const auto& words = probe.framed.alignment.words;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (words[w].kind != WordKind::Token) continue;
    if (tokens[static_cast<std::size_t>(words[w].token_index)].type != target) continue;
    std::fill(probe.masked_ids.begin() + static_cast<std::ptrdiff_t>(words[w].first),
              probe.masked_ids.begin() + static_cast<std::ptrdiff_t>(words[w].last), kMaskId);
    probe.word_positions.push_back(w);
  }
  probe.empty = probe.word_positions.empty();
  return probe;
}

TokenType classify_predicted(std::string_view text) {
  if (text.empty()) return TokenType::Other;
  return classify_text(text);
}

TokenType classify_predicted(std::span<const int> pieces, const Vocab& vocab) {
  for (int id : pieces) {
    if (Vocab::is_reserved(id)) return TokenType::Other;
  }
  return classify_predicted(join_pieces(pieces, vocab));
}

std::size_t TypeConfusion::index_of(TokenType type) {
  const auto it = std::find(std::begin(kProbeTypes), std::end(kProbeTypes), type);
  return it == std::end(kProbeTypes) ? kOther : static_cast<std::size_t>(it - std::begin(kProbeTypes));
}

void TypeConfusion::add(TokenType gold, TokenType predicted) {
  const std::size_t g = index_of(gold);
  if (g == kOther) throw Error("probe gold type must be one of the seven probe types");
  add(g, index_of(predicted));
}

void TypeConfusion::add(std::size_t gold_index, std::size_t predicted_index, std::size_t count) {
  if (gold_index > kOther || predicted_index > kOther) throw Error("confusion index out of range");
  counts_[gold_index][predicted_index] += count;
}

std::size_t TypeConfusion::total() const {
  std::size_t t = 0;
  for (const auto& row : counts_) {
    for (std::size_t c : row) t += c;
  }
  return t;
}

TypeConfusion confusion_from_records(std::span<const ProbeRecord> records) {
  TypeConfusion confusion;
  for (const auto& r : records) confusion.add(r.gold, r.predicted);
  return confusion;
}

std::vector<TypeScore> score(const TypeConfusion& confusion) {
  if (confusion.total() == 0) throw Error("cannot score an empty confusion matrix");
  std::vector<TypeScore> scores;
  for (std::size_t t = 0; t < TypeConfusion::kTypes; ++t) {
    const std::size_t tp = confusion.at(t, t);
    std::size_t row = 0, column = 0;
    for (std::size_t k = 0; k <= TypeConfusion::kOther; ++k) {
      row += confusion.at(t, k);
      column += confusion.at(k, t);
    }
    TypeScore s;
    s.type = kProbeTypes[t];
    s.n = row;
    if (column > 0) s.precision = static_cast<double>(tp) / static_cast<double>(column);
    if (row > 0) s.recall = static_cast<double>(tp) / static_cast<double>(row);
    if (s.precision && s.recall && *s.precision + *s.recall > 0.0) {
      s.f1 = 2.0 * *s.precision * *s.recall / (*s.precision + *s.recall);
    }
    scores.push_back(s);
  }
  return scores;
}

MicroScore micro_score(const TypeConfusion& confusion) {
  const std::size_t total = confusion.total();
  if (total == 0) throw Error("cannot score an empty confusion matrix");
  std::size_t tp = 0, predicted = 0, gold = 0;
  for (std::size_t a = 0; a <= TypeConfusion::kOther; ++a) {
    tp += confusion.at(a, a);
    for (std::size_t b = 0; b <= TypeConfusion::kOther; ++b) {
      predicted += confusion.at(b, a);
      gold += confusion.at(a, b);
    }
  }
  return {static_cast<double>(tp) / static_cast<double>(predicted), static_cast<double>(tp) / static_cast<double>(gold)};
}

ProbeResult run_probe(const std::vector<Document>& documents, const Vocab& vocab, const Encoder& encoder) {
  ProbeResult result;
  const auto max_len = static_cast<std::size_t>(encoder.config().max_seq_len);
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const auto& tokens = documents[d].tokens;
    for (TokenType target : kProbeTypes) {
      const MaskedProbe probe = mask_by_type(tokens, target, vocab, max_len);
      if (probe.empty) {
        ++result.empty_runs;
        continue;
      }
      std::vector<std::size_t> positions;
      for (std::size_t w : probe.word_positions) {
        const auto& word = probe.framed.alignment.words[w];
        for (std::size_t p = word.first; p < word.last; ++p) positions.push_back(p);
      }
      const std::vector<int> predicted = encoder.predict(probe.masked_ids, probe.framed.segments, positions);
      std::size_t k = 0;
      for (std::size_t w : probe.word_positions) {
        const auto& word = probe.framed.alignment.words[w];
        const std::span<const int> pieces(predicted.data() + k, word.width());
        k += word.width();
        ProbeRecord record;
        record.sequence = d;
        record.position = w;
        record.gold = target;
        record.predicted_text = join_pieces(pieces, vocab);
        record.predicted = classify_predicted(pieces, vocab);
        result.confusion.add(record.gold, record.predicted);
        result.records.push_back(std::move(record));
      }
    }
  }
  return result;
}

namespace {

std::string optional_value(const std::optional<double>& v) { return v ? csv::format_double(*v) : "NA"; }

}  // namespace

void write_probe_results_csv(std::ostream& out, const std::vector<TypeScore>& scores) {
  out << "type,precision,recall,f1,n\n";
  for (const auto& s : scores) {
    out << to_string(s.type) << ',' << optional_value(s.precision) << ',' << optional_value(s.recall) << ','
        << optional_value(s.f1) << ',' << s.n << '\n';
  }
}

void write_probe_raw_csv(std::ostream& out, const std::vector<ProbeRecord>& records) {
  out << "sequence,position,gold,predicted_text,predicted_type\n";
  for (const auto& r : records) {
    out << r.sequence << ',' << r.position << ',' << to_string(r.gold) << ',' << csv::quote(r.predicted_text) << ','
        << to_string(r.predicted) << '\n';
  }
}

}  // namespace codeattn
