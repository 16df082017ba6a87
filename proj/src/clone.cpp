#include "codeattn/clone.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <map>
#include <set>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {

PairInput build_pair_input(const ClonePair& pair, const Vocab& vocab, std::size_t max_len) {
  const std::vector<Token> a = lex(strip_comments(pair.code_a));
  const std::vector<Token> b = lex(strip_comments(pair.code_b));
  if (a.empty() || b.empty()) throw Error("clone pair has an empty side after lexing");

  PairInput input;
  input.framed = frame_pair(segment_words(a, vocab), segment_words(b, vocab), max_len);
  for (const auto& word : input.framed.alignment.words) {
    bool ident = false;
    if (word.kind == WordKind::Token) {
      // token_index counts across both sides.
      const auto index = static_cast<std::size_t>(word.token_index);
      const Token& token = word.segment == 0 ? a.at(index) : b.at(index - input.framed.kept_first);
      ident = token.type == TokenType::Identifier;
    }
    input.identifier.push_back(ident);
  }
  return input;
}

std::vector<EmbeddingSpec> all_specs(int num_layers, std::span<const EmbeddingSource> sources) {
  std::vector<EmbeddingSpec> specs;
  for (EmbeddingSource source : sources) {
    for (int l = 1; l <= num_layers; ++l) specs.push_back({source, l});
    specs.push_back({source, kPooledLayer});
  }
  return specs;
}

namespace {

void check_layer(const ForwardOutput& forward, const EmbeddingSpec& spec) {
  const int layers = static_cast<int>(forward.hidden_states.size()) - 1;
  if (spec.layer != kPooledLayer && (spec.layer < 1 || spec.layer > layers)) {
    throw Error("embedding layer " + std::to_string(spec.layer) + " is outside 1.." + std::to_string(layers));
  }
}

}  // namespace

RowVector cls_embedding(const ForwardOutput& forward, const EmbeddingSpec& spec) {
  check_layer(forward, spec);
  if (spec.layer == kPooledLayer) return forward.pooled;
  return forward.hidden_states[static_cast<std::size_t>(spec.layer)].row(0);
}

RowVector weighted_identifier_sum(std::span<const double> attention_received, const Matrix& states) {
  if (attention_received.size() != static_cast<std::size_t>(states.rows())) {
    throw ShapeError("one attention value is needed per identifier state");
  }
  const double total = std::accumulate(attention_received.begin(), attention_received.end(), 0.0);
  if (!(total > 0.0)) throw Error("identifier attention sums to zero");
  RowVector out = RowVector::Zero(states.cols());
  for (std::size_t i = 0; i < attention_received.size(); ++i) {
    out += (attention_received[i] / total) * states.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

IdfEmbedding idf_weighted_embedding(const ForwardOutput& forward, const AttentionTensor& word_attention,
                                    const PairInput& input, const EmbeddingSpec& spec, const Encoder& encoder) {
  check_layer(forward, spec);
  const auto& words = input.framed.alignment.words;
  if (word_attention.seq_len() != words.size() || input.identifier.size() != words.size()) {
    throw ShapeError("word attention does not match the pair alignment");
  }
  const int layers = static_cast<int>(forward.hidden_states.size()) - 1;
  const int layer = spec.layer == kPooledLayer ? layers : spec.layer;
  const Matrix& states = forward.hidden_states[static_cast<std::size_t>(layer)];
  const std::size_t att_layer = static_cast<std::size_t>(layer - 1);

  std::vector<double> received;
  std::vector<std::size_t> idents;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (!input.identifier[w]) continue;
    double sum = 0.0;
    for (std::size_t h = 0; h < word_attention.heads(); ++h) {
      for (std::size_t i = 0; i < words.size(); ++i) sum += word_attention.at(att_layer, h, i, w);
    }
    received.push_back(sum / static_cast<double>(word_attention.heads()));
    idents.push_back(w);
  }

  IdfEmbedding out;
  if (idents.empty()) {
    out.fallback = true;
    out.vector = cls_embedding(forward, spec);
    return out;
  }
  Matrix word_states(static_cast<Eigen::Index>(idents.size()), states.cols());
  for (std::size_t k = 0; k < idents.size(); ++k) {
    const auto& word = words[idents[k]];
    word_states.row(static_cast<Eigen::Index>(k)) =
        states.middleRows(static_cast<Eigen::Index>(word.first), static_cast<Eigen::Index>(word.width()))
            .colwise()
            .mean();
  }
  out.vector = weighted_identifier_sum(received, word_states);
  const double total = std::accumulate(received.begin(), received.end(), 0.0);
  for (double a : received) out.weights.push_back(a / total);
  if (spec.layer == kPooledLayer) out.vector = encoder.pool(out.vector);
  return out;
}

PairEmbeddings embed_pair(const ClonePair& pair, const Vocab& vocab, const Encoder& encoder,
                          std::span<const EmbeddingSpec> specs) {
  const PairInput input = build_pair_input(pair, vocab, static_cast<std::size_t>(encoder.config().max_seq_len));
  const ForwardOutput forward = encoder.encode(input.framed.ids, input.framed.segments);
  const bool need_idf = std::any_of(specs.begin(), specs.end(),
                                    [](const EmbeddingSpec& s) { return s.source == EmbeddingSource::Idf; });
  AttentionTensor word_attention;
  if (need_idf) word_attention = aggregate_attention(forward.attention, input.framed.alignment);

  PairEmbeddings out;
  for (const auto& spec : specs) {
    if (spec.source == EmbeddingSource::Cls) {
      out.vectors.push_back(cls_embedding(forward, spec));
    } else {
      IdfEmbedding e = idf_weighted_embedding(forward, word_attention, input, spec, encoder);
      out.idf_fallback = out.idf_fallback || e.fallback;
      out.vectors.push_back(std::move(e.vector));
    }
  }
  return out;
}

// --- linear head -------------------------------------------------------------

double LogisticHead::probability(const RowVector& x) const {
  const RowVector z = (x - mean).cwiseProduct(scale);
  const double logit = z.dot(weights) + bias;
  return 1.0 / (1.0 + std::exp(-logit));
}

LogisticHead train_head(std::span<const RowVector> features, std::span<const int> labels,
                        const HeadOptions& options) {
  if (features.size() != labels.size()) throw ShapeError("one label is needed per feature vector");
  if (features.empty()) throw Error("clone head training set is empty");
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg) throw Error("clone head training set holds a single class");

  const Eigen::Index dim = features.front().size();
  const double count = static_cast<double>(features.size());
  LogisticHead head;
  head.mean = RowVector::Zero(dim);
  for (const auto& x : features) head.mean += x;
  head.mean /= count;
  RowVector var = RowVector::Zero(dim);
  for (const auto& x : features) var += (x - head.mean).cwiseAbs2();
  var /= count;
  head.scale = var.unaryExpr([](double v) { return v > 1e-24 ? 1.0 / std::sqrt(v) : 1.0; });
  head.weights = RowVector::Zero(dim);

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t i : order) {
      const RowVector z = (features[i] - head.mean).cwiseProduct(head.scale);
      const double p = 1.0 / (1.0 + std::exp(-(z.dot(head.weights) + head.bias)));
      const double g = p - static_cast<double>(labels[i]);
      head.weights -= options.learning_rate * (g * z + options.l2 * head.weights);
      head.bias -= options.learning_rate * g;
    }
  }
  return head;
}

CloneMetrics binary_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("one label is needed per prediction");
  if (predictions.empty()) throw Error("clone test set is empty");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && labels[i]) ++tp;
    if (predictions[i] && !labels[i]) ++fp;
    if (!predictions[i] && labels[i]) ++fn;
  }
  CloneMetrics m;
  m.n = predictions.size();
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

CloneMetrics evaluate(const LogisticHead& head, std::span<const RowVector> features, std::span<const int> labels) {
  std::vector<int> predictions;
  predictions.reserve(features.size());
  for (const auto& x : features) predictions.push_back(head.predict(x) ? 1 : 0);
  return binary_metrics(predictions, labels);
}

// --- synthetic clone set -------------------------------------------------------

namespace {

constexpr std::string_view kNamePool[] = {"alpha", "beta",  "gamma", "delta", "item", "value", "count",
                                          "temp",  "node",  "data",  "left",  "right", "acc",   "cur",
                                          "idx",   "val",   "res",   "buf",   "key",   "elem",  "total",
                                          "part",  "entry", "unit",  "slot",  "mark",  "step",  "span"};

bool renamable(const std::vector<Token>& tokens, std::size_t k) {
  const Token& t = tokens[k];
  if (t.type != TokenType::Identifier) return false;
  const unsigned char first = static_cast<unsigned char>(t.text.front());
  if (!(first >= 'a' && first <= 'z')) return false;
  return k == 0 || tokens[k - 1].text != ".";
}

std::string perturb_gap(std::string_view gap, Rng& rng) {
  if (gap.empty()) return {};  // adjacency is meaningful (">" ">" vs ">>")
  const auto newlines = static_cast<std::size_t>(std::count(gap.begin(), gap.end(), '\n'));
  if (newlines == 0) {
    constexpr std::string_view kSpaces[] = {" ", "  ", "\t"};
    return std::string(kSpaces[rng.below(3)]);
  }
  std::string out(newlines, '\n');
  out.append(rng.below(9), ' ');
  return out;
}

}  // namespace

std::string rename_and_perturb(const std::string& source, Rng& rng) {
  const std::string stripped = strip_comments(source);
  const std::vector<Token> tokens = lex(stripped);
  std::set<std::string> taken;
  for (const auto& t : tokens) {
    if (t.type == TokenType::Identifier) taken.insert(t.text);
  }

  std::map<std::string, std::string> renames;
  std::vector<std::string_view> pool(std::begin(kNamePool), std::end(kNamePool));
  rng.shuffle(pool.begin(), pool.end());
  std::size_t next_name = 0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (!renamable(tokens, k) || renames.count(tokens[k].text)) continue;
    std::string name;
    do {
      const std::size_t round = next_name / pool.size();
      name = std::string(pool[next_name % pool.size()]) + (round == 0 ? "" : std::to_string(round + 1));
      ++next_name;
    } while (taken.count(name));
    taken.insert(name);
    renames.emplace(tokens[k].text, name);
  }

  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k > 0) {
      out += perturb_gap(std::string_view(stripped).substr(tokens[k - 1].end, tokens[k].begin - tokens[k - 1].end), rng);
    }
    const auto it = renamable(tokens, k) ? renames.find(tokens[k].text) : renames.end();
    out += it != renames.end() ? it->second : tokens[k].text;
  }
  out += '\n';
  return out;
}

std::vector<ClonePair> make_synthetic_clone_set(const std::vector<Document>& documents, std::uint64_t seed,
                                                std::size_t size) {
  if (documents.size() < 2) throw Error("synthetic clone set needs at least two functions");
  if (size < 2) throw Error("synthetic clone set size must be at least 2");
  Rng rng(seed);
  std::vector<std::size_t> order(documents.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());

  std::vector<ClonePair> pairs;
  pairs.reserve(size);
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t a = order[cursor++ % order.size()];
    ClonePair pair;
    pair.code_a = documents[a].source;
    pair.is_clone = k % 2 == 0;
    std::size_t b = a;
    if (!pair.is_clone) {
      b = rng.below(documents.size() - 1);
      if (b >= a) ++b;
    }
    pair.code_b = rename_and_perturb(documents[b].source, rng);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// --- files ------------------------------------------------------------------------

namespace {

std::string escape_code(std::string_view code) {
  std::string out;
  for (char c : code) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_code(std::string_view field) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\' || i + 1 == field.size()) {
      out += field[i];
      continue;
    }
    switch (field[++i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += field[i];
    }
  }
  return out;
}

}  // namespace

void write_pairs(std::ostream& out, const std::vector<ClonePair>& pairs) {
  for (const auto& p : pairs) {
    out << (p.is_clone ? 1 : 0) << '\t' << escape_code(p.code_a) << '\t' << escape_code(p.code_b) << '\n';
  }
}

std::vector<ClonePair> read_pairs(std::istream& in) {
  std::vector<ClonePair> pairs;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line.front() == '#') continue;
    const auto first = line.find('\t');
    const auto second = first == std::string::npos ? first : line.find('\t', first + 1);
    if (second == std::string::npos || line.find('\t', second + 1) != std::string::npos) {
      throw Error("pair file line " + std::to_string(number) + " does not have three tab-separated fields");
    }
    const std::string label = line.substr(0, first);
    if (label != "0" && label != "1") throw Error("pair file line " + std::to_string(number) + " has label " + label);
    pairs.push_back({unescape_code(line.substr(first + 1, second - first - 1)), unescape_code(line.substr(second + 1)),
                     label == "1"});
  }
  return pairs;
}

CloneSweep run_clone_sweep(const std::vector<ClonePair>& train, const std::vector<ClonePair>& test,
                           const Vocab& vocab, const Encoder& encoder, std::span<const EmbeddingSpec> specs,
                           const HeadOptions& options) {
  CloneSweep sweep;
  auto embed_all = [&](const std::vector<ClonePair>& pairs, std::vector<std::vector<RowVector>>& by_spec,
                       std::vector<int>& labels) {
    by_spec.assign(specs.size(), {});
    for (const auto& pair : pairs) {
      PairEmbeddings e = embed_pair(pair, vocab, encoder, specs);
      if (e.idf_fallback) ++sweep.idf_fallbacks;
      for (std::size_t s = 0; s < specs.size(); ++s) by_spec[s].push_back(std::move(e.vectors[s]));
      labels.push_back(pair.is_clone ? 1 : 0);
    }
  };
  std::vector<std::vector<RowVector>> train_features, test_features;
  std::vector<int> train_labels, test_labels;
  embed_all(train, train_features, train_labels);
  embed_all(test, test_features, test_labels);

  for (std::size_t s = 0; s < specs.size(); ++s) {
    const LogisticHead head = train_head(train_features[s], train_labels, options);
    sweep.results.push_back({specs[s], evaluate(head, test_features[s], test_labels)});
  }
  return sweep;
}

void write_clone_results_csv(std::ostream& out, const std::vector<CloneResult>& results) {
  out << "source,layer,precision,recall,f1,n\n";
  for (const auto& r : results) {
    out << r.spec.source_label() << ',' << r.spec.layer_label() << ',' << csv::format_double(r.metrics.precision)
        << ',' << csv::format_double(r.metrics.recall) << ',' << csv::format_double(r.metrics.f1) << ','
        << r.metrics.n << '\n';
  }
}

}  // namespace codeattn
