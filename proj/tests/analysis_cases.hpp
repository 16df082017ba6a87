#pragma once

// Hand-computed analysis values on small fixed matrices. Expected numbers are
// written out as arithmetic on the matrix entries, not taken from the code.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "codeattn/analysis.hpp"

namespace codeattn::cases {

struct Check {
  std::string name;
  double actual = 0.0;
  double expected = 0.0;
};

// Rows are source words.
inline const double kHand[3][3] = {{.5, .3, .2}, {.1, .6, .3}, {.2, .2, .6}};

inline AttentionTensor single_head(const std::vector<std::vector<double>>& rows) {
  AttentionTensor att(1, 1, rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) att.at(0, 0, i, j) = rows[i][j];
  }
  return att;
}

inline AttentionTensor hand_tensor() {
  return single_head({{kHand[0][0], kHand[0][1], kHand[0][2]},
                      {kHand[1][0], kHand[1][1], kHand[1][2]},
                      {kHand[2][0], kHand[2][1], kHand[2][2]}});
}

inline AttentionTensor uniform_tensor(std::size_t n) {
  return single_head(std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0 / static_cast<double>(n))));
}

inline AttentionTensor identity_tensor(std::size_t n) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) rows[i][i] = 1.0;
  return single_head(rows);
}

inline std::optional<double> find(const std::vector<AnalysisRecord>& records, const std::string& label,
                                  const std::string& mode, int layer = 1, int head = 1) {
  for (const auto& r : records) {
    if (r.label == label && r.mode == mode && r.layer == layer && r.head == head) return r.value;
  }
  return std::nullopt;
}

inline double value_or_nan(const std::optional<double>& v) { return v ? *v : std::nan(""); }

// Entropy-form JSD in bits, H(m) - (H(p) + H(q)) / 2; independent of the
// KL form used in the library.
inline double entropy_bits(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

inline double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return entropy_bits(m) - 0.5 * (entropy_bits(p) + entropy_bits(q));
}

inline std::vector<Check> special_token_checks() {
  using W = WordClass;
  std::vector<Check> out;
  {
    const std::vector<AnalysisSequence> corpus{{uniform_tensor(4), {W::Cls, W::Idf, W::Op, W::Sep}}};
    const auto r = special_token_attention(corpus);
    out.push_back({"special_token uniform n=4 CLS mass", value_or_nan(find(r, "CLS", "mass")), 1.0 / 4.0});
  }
  const std::vector<AnalysisSequence> corpus{{hand_tensor(), {W::Cls, W::Idf, W::Sep}}};
  const auto r = special_token_attention(corpus);
  const double cls_column = kHand[0][0] + kHand[1][0] + kHand[2][0];  // 0.8
  const double sep_column = kHand[0][2] + kHand[1][2] + kHand[2][2];  // 1.1
  out.push_back({"special_token hand CLS mass", value_or_nan(find(r, "CLS", "mass")), cls_column / 3.0});
  out.push_back({"special_token hand CLS occurrence", value_or_nan(find(r, "CLS", "occurrence")), cls_column / 1.0});
  out.push_back({"special_token hand SEP mass", value_or_nan(find(r, "SEP", "mass")), sep_column / 3.0});
  return out;
}

inline std::vector<Check> relative_position_checks() {
  using W = WordClass;
  std::vector<Check> out;
  {
    const std::vector<AnalysisSequence> corpus{{uniform_tensor(5), std::vector<W>(5, W::Idf)}};
    const auto r = relative_position_attention(corpus);
    for (const char* label : {"self", "prev", "next"}) {
      out.push_back({std::string("relative_position uniform n=5 ") + label, value_or_nan(find(r, label, "mass")), 0.2});
    }
  }
  {
    const std::vector<AnalysisSequence> corpus{{identity_tensor(4), std::vector<W>(4, W::Op)}};
    const auto r = relative_position_attention(corpus);
    out.push_back({"relative_position identity self", value_or_nan(find(r, "self", "mass")), 1.0});
    out.push_back({"relative_position identity prev", value_or_nan(find(r, "prev", "mass")), 0.0});
    out.push_back({"relative_position identity next", value_or_nan(find(r, "next", "mass")), 0.0});
  }
  const std::vector<AnalysisSequence> corpus{{hand_tensor(), {W::Idf, W::Op, W::Idf}}};
  const auto r = relative_position_attention(corpus);
  out.push_back({"relative_position hand self", value_or_nan(find(r, "self", "mass")),
                 (kHand[0][0] + kHand[1][1] + kHand[2][2]) / 3.0});
  out.push_back({"relative_position hand prev", value_or_nan(find(r, "prev", "mass")), (kHand[1][0] + kHand[2][1]) / 2.0});
  out.push_back({"relative_position hand next", value_or_nan(find(r, "next", "mass")), (kHand[0][1] + kHand[1][2]) / 2.0});
  return out;
}

inline std::vector<Check> redundancy_checks() {
  using W = WordClass;
  std::vector<Check> out;
  // Two heads in one layer; second head is the hand matrix with rows reversed.
  AttentionTensor att(1, 2, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      att.at(0, 0, i, j) = kHand[i][j];
      att.at(0, 1, i, j) = kHand[i][2 - j];
    }
  }
  const std::vector<AnalysisSequence> corpus{{att, std::vector<W>(3, W::Idf)}};
  const auto m = head_redundancy(corpus);
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    expected += jsd_oracle({kHand[i][0], kHand[i][1], kHand[i][2]}, {kHand[i][2], kHand[i][1], kHand[i][0]});
  }
  expected /= 3.0;
  out.push_back({"head_redundancy hand pair", m.values(0, 1), expected});
  out.push_back({"head_redundancy diagonal", m.values(0, 0), 0.0});

  AttentionTensor spot(1, 2, 2);
  spot.at(0, 0, 0, 0) = spot.at(0, 0, 0, 1) = spot.at(0, 0, 1, 0) = spot.at(0, 0, 1, 1) = 0.5;
  spot.at(0, 1, 0, 0) = spot.at(0, 1, 1, 0) = 1.0;
  const std::vector<AnalysisSequence> spot_corpus{{spot, {W::Idf, W::Idf}}};
  out.push_back({"head_redundancy p=[.5,.5] q=[1,0]", head_redundancy(spot_corpus).values(0, 1),
                 jsd_oracle({0.5, 0.5}, {1.0, 0.0})});

  AttentionTensor disjoint(1, 2, 2);
  disjoint.at(0, 0, 0, 0) = disjoint.at(0, 0, 1, 0) = 1.0;
  disjoint.at(0, 1, 0, 1) = disjoint.at(0, 1, 1, 1) = 1.0;
  const std::vector<AnalysisSequence> disjoint_corpus{{disjoint, {W::Idf, W::Idf}}};
  out.push_back({"head_redundancy disjoint one-hot", head_redundancy(disjoint_corpus).values(0, 1), 1.0});
  return out;
}

inline std::vector<Check> construct_checks() {
  using W = WordClass;
  std::vector<Check> out;
  {
    const std::vector<AnalysisSequence> corpus{{hand_tensor(), std::vector<W>(3, W::Idf)}};
    out.push_back({"construct all-IDF mass", value_or_nan(find(construct_attention(corpus), "IDF", "mass")), 1.0});
  }
  {
    const std::vector<AnalysisSequence> corpus{{hand_tensor(), {W::Idf, W::Op, W::Idf}}};
    const auto r = construct_attention(corpus);
    const double idf_total = kHand[0][0] + kHand[0][2] + kHand[1][0] + kHand[1][2] + kHand[2][0] + kHand[2][2];
    const double op_total = kHand[0][1] + kHand[1][1] + kHand[2][1];
    out.push_back({"construct (IDF,OP,IDF) IDF mass", value_or_nan(find(r, "IDF", "mass")), idf_total / 3.0});
    out.push_back({"construct (IDF,OP,IDF) OP mass", value_or_nan(find(r, "OP", "mass")), op_total / 3.0});
    out.push_back({"construct (IDF,OP,IDF) IDF occurrence", value_or_nan(find(r, "IDF", "occurrence")), idf_total / 2.0});
    out.push_back({"construct (IDF,OP,IDF) OP occurrence", value_or_nan(find(r, "OP", "occurrence")), op_total / 1.0});
  }
  {
    // [CLS] row is not a source.
    const std::vector<AnalysisSequence> corpus{{hand_tensor(), {W::Cls, W::Idf, W::Op}}};
    const auto r = construct_attention(corpus);
    out.push_back({"construct (CLS,IDF,OP) IDF mass", value_or_nan(find(r, "IDF", "mass")), (kHand[1][1] + kHand[2][1]) / 2.0});
    out.push_back({"construct (CLS,IDF,OP) OP mass", value_or_nan(find(r, "OP", "mass")), (kHand[1][2] + kHand[2][2]) / 2.0});
  }
  return out;
}

inline std::vector<Check> identifier_checks() {
  using W = WordClass;
  std::vector<Check> out;
  {
    const std::vector<AnalysisSequence> corpus{{hand_tensor(), std::vector<W>(3, W::Idf)}};
    const auto r = identifier_relationship(corpus);
    out.push_back({"identifier all-IDF IDF", value_or_nan(find(r, "IDF", "mass", 1, kAllHeads)), 1.0});
    out.push_back({"identifier all-IDF SEPS", value_or_nan(find(r, "SEPS", "mass", 1, kAllHeads)), 0.0});
    out.push_back({"identifier all-IDF residual", value_or_nan(find(r, "residual", "mass", 1, kAllHeads)), 0.0});
  }
  {
    const std::vector<AnalysisSequence> corpus{{hand_tensor(), {W::Idf, W::Seps, W::Idf}}};
    const auto r = identifier_relationship(corpus);
    out.push_back({"identifier (IDF,SEPS,IDF) IDF", value_or_nan(find(r, "IDF", "mass", 1, kAllHeads)),
                   ((kHand[0][0] + kHand[0][2]) + (kHand[2][0] + kHand[2][2])) / 2.0});
    out.push_back({"identifier (IDF,SEPS,IDF) SEPS", value_or_nan(find(r, "SEPS", "mass", 1, kAllHeads)),
                   (kHand[0][1] + kHand[2][1]) / 2.0});
    out.push_back({"identifier (IDF,SEPS,IDF) OP", value_or_nan(find(r, "OP", "mass", 1, kAllHeads)), 0.0});
  }
  {
    const std::vector<AnalysisSequence> corpus{{hand_tensor(), {W::Cls, W::Idf, W::Seps}}};
    const auto r = identifier_relationship(corpus);
    out.push_back({"identifier (CLS,IDF,SEPS) residual", value_or_nan(find(r, "residual", "mass", 1, kAllHeads)), kHand[1][0]});
  }
  return out;
}

inline std::vector<Check> all_checks() {
  std::vector<Check> out;
  for (auto&& group : {special_token_checks(), relative_position_checks(), redundancy_checks(), construct_checks(),
                       identifier_checks()}) {
    out.insert(out.end(), group.begin(), group.end());
  }
  return out;
}

}  // namespace codeattn::cases
