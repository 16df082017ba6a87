#include "codeattn/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {

std::string_view class_label(WordClass c) {
  switch (c) {
    case WordClass::Cls: return "CLS";
    case WordClass::Sep: return "SEP";
    case WordClass::Idf: return "IDF";
    case WordClass::Seps: return "SEPS";
    case WordClass::Op: return "OP";
    case WordClass::Dtp: return "DTP";
    case WordClass::Key: return "KEY";
    case WordClass::Mod: return "MOD";
    case WordClass::Other: return "OTHER";
  }
  return "OTHER";
}

WordClass word_class(TokenType type) {
  switch (type) {
    case TokenType::Identifier: return WordClass::Idf;
    case TokenType::Separator: return WordClass::Seps;
    case TokenType::Operator: return WordClass::Op;
    case TokenType::BasicType: return WordClass::Dtp;
    case TokenType::Keyword: return WordClass::Key;
    case TokenType::Modifier: return WordClass::Mod;
    default: return WordClass::Other;
  }
}

std::vector<WordClass> word_classes(const AlignmentMap& map, std::span<const Token> kept_tokens) {
  std::vector<WordClass> classes;
  classes.reserve(map.words.size());
  for (const auto& word : map.words) {
    switch (word.kind) {
      case WordKind::Cls: classes.push_back(WordClass::Cls); break;
      case WordKind::Sep: classes.push_back(WordClass::Sep); break;
      case WordKind::Token:
        classes.push_back(word_class(kept_tokens[static_cast<std::size_t>(word.token_index)].type));
        break;
    }
  }
  return classes;
}

AnalysisSequence build_analysis_sequence(const Document& document, const Vocab& vocab, const Encoder& encoder) {
  const FramedSequence framed =
      tokenize(document.tokens, vocab, static_cast<std::size_t>(encoder.config().max_seq_len));
  const ForwardOutput out = encoder.encode(framed.ids, framed.segments);
  AnalysisSequence seq;
  seq.attention = aggregate_attention(out.attention, framed.alignment);
  seq.classes = word_classes(framed.alignment, std::span(document.tokens).first(framed.kept_first));
  return seq;
}

namespace {

struct Mean {
  KahanSum sum;
  std::size_t n = 0;
  void add(double x) {
    sum.add(x);
    ++n;
  }
  double value() const { return n == 0 ? 0.0 : sum.value() / static_cast<double>(n); }
};

void require_corpus(std::span<const AnalysisSequence> corpus, std::string_view analysis) {
  if (corpus.empty()) throw Error(std::string(analysis) + ": corpus is empty");
  const auto& first = corpus.front().attention;
  for (const auto& seq : corpus) {
    if (seq.attention.layers() != first.layers() || seq.attention.heads() != first.heads()) {
      throw ShapeError(std::string(analysis) + ": sequences disagree on layer or head count");
    }
    if (seq.classes.size() != seq.attention.seq_len()) {
      throw ShapeError(std::string(analysis) + ": class list length differs from attention length");
    }
  }
}

std::size_t class_index(WordClass c) { return static_cast<std::size_t>(c); }
constexpr std::size_t kClassCount = 9;

// Received-attention statistics per class for one head of one sequence.
// Sources are all rows, or only non-special rows when skip_special_sources.
struct Received {
  std::array<double, kClassCount> mass{};   // mean over sources of mass sent to the class
  std::array<double, kClassCount> total{};  // total mass received by the class
  std::array<std::size_t, kClassCount> occurrences{};
  std::size_t sources = 0;
};

Received received_by_class(const AnalysisSequence& seq, std::size_t l, std::size_t h, bool skip_special_sources) {
  Received r;
  const std::size_t n = seq.attention.seq_len();
  for (std::size_t j = 0; j < n; ++j) ++r.occurrences[class_index(seq.classes[j])];
  std::array<KahanSum, kClassCount> totals;
  for (std::size_t i = 0; i < n; ++i) {
    if (skip_special_sources && is_special(seq.classes[i])) continue;
    ++r.sources;
    const auto row = seq.attention.row(l, h, i);
    for (std::size_t j = 0; j < n; ++j) totals[class_index(seq.classes[j])].add(row[j]);
  }
  for (std::size_t c = 0; c < kClassCount; ++c) {
    r.total[c] = totals[c].value();
    r.mass[c] = r.sources == 0 ? 0.0 : r.total[c] / static_cast<double>(r.sources);
  }
  return r;
}

std::vector<AnalysisRecord> received_records(std::span<const AnalysisSequence> corpus, std::string_view analysis,
                                             std::span<const WordClass> targets, bool skip_special_sources) {
  const std::size_t layers = corpus.front().attention.layers();
  const std::size_t heads = corpus.front().attention.heads();
  std::vector<AnalysisRecord> records;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      std::vector<Mean> mass(targets.size()), occurrence(targets.size());
      for (const auto& seq : corpus) {
        const Received r = received_by_class(seq, l, h, skip_special_sources);
        if (r.sources == 0) continue;
        for (std::size_t t = 0; t < targets.size(); ++t) {
          const std::size_t c = class_index(targets[t]);
          if (r.occurrences[c] == 0) continue;
          mass[t].add(r.mass[c]);
          occurrence[t].add(r.total[c] / static_cast<double>(r.occurrences[c]));
        }
      }
      for (std::size_t t = 0; t < targets.size(); ++t) {
        if (mass[t].n == 0) continue;
        const std::string label(class_label(targets[t]));
        const int layer = static_cast<int>(l) + 1, head = static_cast<int>(h) + 1;
        records.push_back({std::string(analysis), layer, head, label, "mass", mass[t].value(), mass[t].n});
        records.push_back(
            {std::string(analysis), layer, head, label, "occurrence", occurrence[t].value(), occurrence[t].n});
      }
    }
  }
  return records;
}

}  // namespace

std::vector<AnalysisRecord> special_token_attention(std::span<const AnalysisSequence> corpus) {
  require_corpus(corpus, "special_token_attention");
  constexpr WordClass targets[] = {WordClass::Cls, WordClass::Sep};
  return received_records(corpus, "special_token", targets, false);
}

std::vector<AnalysisRecord> construct_attention(std::span<const AnalysisSequence> corpus) {
  require_corpus(corpus, "construct_attention");
  return received_records(corpus, "construct", kConstructClasses, true);
}

std::vector<AnalysisRecord> relative_position_attention(std::span<const AnalysisSequence> corpus) {
  require_corpus(corpus, "relative_position_attention");
  const std::size_t layers = corpus.front().attention.layers();
  const std::size_t heads = corpus.front().attention.heads();
  std::vector<AnalysisRecord> records;
  bool any_eligible = false;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t h = 0; h < heads; ++h) {
      Mean self, prev, next;
      for (const auto& seq : corpus) {
        const std::size_t n = seq.attention.seq_len();
        if (n < 2) continue;
        for (std::size_t i = 0; i < n; ++i) {
          if (is_special(seq.classes[i])) continue;
          self.add(seq.attention.at(l, h, i, i));
          if (i > 0) prev.add(seq.attention.at(l, h, i, i - 1));
          if (i + 1 < n) next.add(seq.attention.at(l, h, i, i + 1));
        }
      }
      if (self.n == 0) continue;
      any_eligible = true;
      const int layer = static_cast<int>(l) + 1, head = static_cast<int>(h) + 1;
      records.push_back({"relative_position", layer, head, "self", "mass", self.value(), self.n});
      if (prev.n) records.push_back({"relative_position", layer, head, "prev", "mass", prev.value(), prev.n});
      if (next.n) records.push_back({"relative_position", layer, head, "next", "mass", next.value(), next.n});
    }
  }
  if (!any_eligible) throw Error("relative_position_attention: no sequence with two or more words");
  return records;
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("jensen_shannon: distributions differ in length");
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) kl_p += p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) kl_q += q[i] * std::log2(q[i] / m);
  }
  return std::clamp(0.5 * (kl_p + kl_q), 0.0, 1.0);
}

std::string RedundancyMatrix::head_label(int flat) const {
  return "L" + std::to_string(flat / num_heads + 1) + "H" + std::to_string(flat % num_heads + 1);
}

RedundancyMatrix head_redundancy(std::span<const AnalysisSequence> corpus) {
  require_corpus(corpus, "head_redundancy");
  RedundancyMatrix out;
  out.num_layers = static_cast<int>(corpus.front().attention.layers());
  out.num_heads = static_cast<int>(corpus.front().attention.heads());
  const std::size_t heads = static_cast<std::size_t>(out.num_heads);
  const std::size_t k = static_cast<std::size_t>(out.num_layers) * heads;

  std::vector<KahanSum> sums(k * k);
  for (const auto& seq : corpus) {
    const std::size_t n = seq.attention.seq_len();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < k; ++a) {
        const auto pa = seq.attention.row(a / heads, a % heads, i);
        for (std::size_t b = a + 1; b < k; ++b) {
          sums[a * k + b].add(jensen_shannon(pa, seq.attention.row(b / heads, b % heads, i)));
        }
      }
    }
    out.rows_compared += n;
  }
  if (out.rows_compared == 0) throw Error("head_redundancy: corpus holds no tokens");

  out.values = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const double v = sums[a * k + b].value() / static_cast<double>(out.rows_compared);
      out.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      out.values(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  return out;
}

std::vector<AnalysisRecord> redundancy_records(const RedundancyMatrix& matrix) {
  std::vector<AnalysisRecord> records;
  const auto k = matrix.values.rows();
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      records.push_back({"head_redundancy", static_cast<int>(a) / matrix.num_heads + 1,
                         static_cast<int>(a) % matrix.num_heads + 1, matrix.head_label(static_cast<int>(b)),
                         "mass", matrix.values(a, b), matrix.rows_compared});
    }
  }
  return records;
}

std::vector<AnalysisRecord> identifier_relationship(std::span<const AnalysisSequence> corpus) {
  require_corpus(corpus, "identifier_relationship");
  const std::size_t layers = corpus.front().attention.layers();
  const std::size_t heads = corpus.front().attention.heads();
  constexpr std::size_t kTargets = std::size(kConstructClasses);
  std::vector<AnalysisRecord> records;
  bool any_identifier = false;
  for (std::size_t l = 0; l < layers; ++l) {
    std::array<Mean, kTargets + 1> means;  // last slot: residual
    for (const auto& seq : corpus) {
      const std::size_t n = seq.attention.seq_len();
      std::array<KahanSum, kTargets + 1> sums;
      std::size_t rows = 0;
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
          if (seq.classes[i] != WordClass::Idf) continue;
          ++rows;
          std::array<double, kClassCount> by_class{};
          const auto row = seq.attention.row(l, h, i);
          for (std::size_t j = 0; j < n; ++j) by_class[class_index(seq.classes[j])] += row[j];
          double assigned = 0.0;
          for (std::size_t t = 0; t < kTargets; ++t) {
            const double v = by_class[class_index(kConstructClasses[t])];
            sums[t].add(v);
            assigned += v;
          }
          double row_total = 0.0;
          for (double v : by_class) row_total += v;
          sums[kTargets].add(row_total - assigned);
        }
      }
      if (rows == 0) continue;
      for (std::size_t t = 0; t <= kTargets; ++t) means[t].add(sums[t].value() / static_cast<double>(rows));
    }
    if (means[0].n == 0) continue;
    any_identifier = true;
    const int layer = static_cast<int>(l) + 1;
    for (std::size_t t = 0; t < kTargets; ++t) {
      records.push_back({"identifier_relationship", layer, kAllHeads, std::string(class_label(kConstructClasses[t])),
                         "mass", means[t].value(), means[t].n});
    }
    records.push_back(
        {"identifier_relationship", layer, kAllHeads, "residual", "mass", means[kTargets].value(), means[kTargets].n});
  }
  if (!any_identifier) throw Error("identifier_relationship: corpus contains no identifiers");
  return records;
}

void write_records_csv(std::ostream& out, const std::vector<AnalysisRecord>& records) {
  out << "analysis,layer,head,class,mode,value,n\n";
  for (const auto& r : records) {
    out << r.analysis << ',' << r.layer << ',' << (r.head == kAllHeads ? std::string("all") : std::to_string(r.head))
        << ',' << csv::escape(r.label) << ',' << r.mode << ',' << csv::format_double(r.value) << ',' << r.n << '\n';
  }
}

std::vector<AnalysisRecord> read_records_csv(std::istream& in) {
  std::vector<AnalysisRecord> records;
  std::vector<std::string> fields;
  bool header = true;
  while (csv::read_record(in, fields)) {
    if (header) {
      header = false;
      continue;
    }
    if (fields.size() != 7) throw Error("analysis CSV row has " + std::to_string(fields.size()) + " fields");
    AnalysisRecord r;
    r.analysis = fields[0];
    r.layer = std::stoi(fields[1]);
    r.head = fields[2] == "all" ? kAllHeads : std::stoi(fields[2]);
    r.label = fields[3];
    r.mode = fields[4];
    r.value = std::stod(fields[5]);
    r.n = std::stoull(fields[6]);
    records.push_back(std::move(r));
  }
  return records;
}

void write_redundancy_csv(std::ostream& out, const RedundancyMatrix& matrix) {
  const auto k = static_cast<int>(matrix.values.rows());
  out << "head";
  for (int b = 0; b < k; ++b) out << ',' << matrix.head_label(b);
  out << '\n';
  for (int a = 0; a < k; ++a) {
    out << matrix.head_label(a);
    for (int b = 0; b < k; ++b) out << ',' << csv::format_double(matrix.values(a, b));
    out << '\n';
  }
}

}  // namespace codeattn
