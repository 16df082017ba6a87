#include <gtest/gtest.h>

#include <cctype>
#include <map>
#include <sstream>

#include "codeattn/clone.hpp"
#include "codeattn/error.hpp"
#include "test_support.hpp"

using namespace codeattn;

namespace {

std::vector<TokenType> types_of(const std::string& code) {
  std::vector<TokenType> out;
  for (const auto& t : lex(strip_comments(code))) out.push_back(t.type);
  return out;
}

const std::vector<Document>& toy_docs() {
  static const auto docs = load_java_directory(CODEATTN_TOY_CORPUS);
  return docs;
}

struct SmallModel {
  Vocab vocab = train_vocab(word_counts(toy_docs()), 400);
  EncoderConfig config = fixtures::tiny_config(2, 2, 8, vocab.size(), 128);
  EncoderParams params = fixtures::noisy_params<float>(config, 31, 0.2);
};

}  // namespace

TEST(WeightedSum, HandCase) {
  Matrix h(2, 2);
  h << 1, 0, 0, 1;
  const RowVector out = weighted_identifier_sum(std::vector<double>{0.3, 0.1}, h);
  EXPECT_NEAR(out(0), 0.75, 1e-12);
  EXPECT_NEAR(out(1), 0.25, 1e-12);
}

TEST(WeightedSum, ScaleInvariant) {
  Rng rng(3);
  Matrix h(4, 5);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rng.normal();
  const std::vector<double> a{0.1, 0.7, 0.05, 0.3};
  std::vector<double> scaled;
  for (double x : a) scaled.push_back(x * 37.5);
  EXPECT_LT((weighted_identifier_sum(a, h) - weighted_identifier_sum(scaled, h)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedSum, SingleAndEqualWeights) {
  Matrix h(2, 3);
  h << 1, 2, 3, 5, 6, 7;
  const Matrix one = h.topRows(1);
  EXPECT_EQ(weighted_identifier_sum(std::vector<double>{0.42}, one), RowVector(one.row(0)));
  const RowVector mean = h.colwise().mean();
  EXPECT_LT((weighted_identifier_sum(std::vector<double>{0.2, 0.2}, h) - mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WeightedSum, Errors) {
  Matrix h = Matrix::Ones(2, 2);
  EXPECT_THROW(weighted_identifier_sum(std::vector<double>{1.0}, h), ShapeError);
  EXPECT_THROW(weighted_identifier_sum(std::vector<double>{0.0, 0.0}, h), Error);
}

TEST(PairInput, OneTokenSides) {
  Vocab v;
  v.add("a");
  v.add("b");
  const auto input = build_pair_input({"a", "b", true}, v, 32);
  EXPECT_EQ(input.framed.ids, (std::vector<int>{kClsId, v.id("a"), kSepId, v.id("b"), kSepId}));
  EXPECT_EQ(input.framed.segments, (std::vector<int>{0, 0, 0, 1, 1}));
  EXPECT_EQ(input.identifier, (std::vector<bool>{false, true, false, true, false}));
}

TEST(PairInput, SecondSideIdentifiersUseTheirOwnTokens) {
  Vocab v;
  for (const char* w : {"int", "x", ";", "y", "=", "1"}) v.add(w);
  const auto input = build_pair_input({"int x ;", "y = 1 ;", false}, v, 32);
  EXPECT_EQ(input.identifier,
            (std::vector<bool>{false, false, true, false, false, true, false, false, false, false}));
}

TEST(PairInput, IdenticalSidesDifferInSegment) {
  Vocab v;
  for (const char* w : {"x", "=", "1", ";"}) v.add(w);
  const auto input = build_pair_input({"x = 1;", "x = 1;", true}, v, 32);
  ASSERT_EQ(input.framed.ids.size(), 11u);
  EXPECT_EQ(input.framed.ids[1], input.framed.ids[6]);
  EXPECT_NE(input.framed.segments[1], input.framed.segments[6]);
}

TEST(PairInput, OversizedPairIsTruncatedToMaxLen) {
  const SmallModel m;
  const auto input = build_pair_input({toy_docs()[0].source, toy_docs()[1].source, false}, m.vocab, 24);
  EXPECT_EQ(input.framed.ids.size(), 24u);
  EXPECT_EQ(input.framed.ids.back(), kSepId);
  EXPECT_TRUE(input.framed.truncated);
}

TEST(PairInput, EmptySideThrows) {
  Vocab v;
  v.add("a");
  EXPECT_THROW(build_pair_input({"a", "// only a comment", true}, v, 32), Error);
}

TEST(Embeddings, ClsSpecs) {
  const SmallModel m;
  const Encoder encoder(m.params, m.config);
  const auto input = build_pair_input({toy_docs()[0].source, toy_docs()[1].source, false}, m.vocab, 128);
  const auto forward = encoder.encode(input.framed.ids, input.framed.segments);
  EXPECT_EQ(cls_embedding(forward, {EmbeddingSource::Cls, kPooledLayer}), forward.pooled);
  EXPECT_EQ(cls_embedding(forward, {EmbeddingSource::Cls, 1}), RowVector(forward.hidden_states[1].row(0)));
  EXPECT_THROW(cls_embedding(forward, {EmbeddingSource::Cls, 3}), Error);
  EXPECT_THROW(cls_embedding(forward, {EmbeddingSource::Cls, 0}), Error);
  const EmbeddingSource both[] = {EmbeddingSource::Cls, EmbeddingSource::Idf};
  const auto specs = all_specs(m.config.num_layers, both);
  EXPECT_EQ(specs.size(), 6u);
  const auto e = embed_pair({toy_docs()[0].source, toy_docs()[1].source, false}, m.vocab, encoder, specs);
  for (const auto& v : e.vectors) EXPECT_EQ(v.size(), m.config.hidden_dim);
}

TEST(Embeddings, IdfWeightsNormalisedAndPooled) {
  const SmallModel m;
  const Encoder encoder(m.params, m.config);
  const auto input = build_pair_input({toy_docs()[2].source, toy_docs()[3].source, false}, m.vocab, 128);
  const auto forward = encoder.encode(input.framed.ids, input.framed.segments);
  const auto words = aggregate_attention(forward.attention, input.framed.alignment);
  const auto last = idf_weighted_embedding(forward, words, input, {EmbeddingSource::Idf, 2}, encoder);
  ASSERT_FALSE(last.fallback);
  double total = 0.0;
  for (double w : last.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-6);
  const auto pooled = idf_weighted_embedding(forward, words, input, {EmbeddingSource::Idf, kPooledLayer}, encoder);
  EXPECT_LT((pooled.vector - encoder.pool(last.vector)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Embeddings, IdfFallsBackToClsWithoutIdentifiers) {
  Vocab v;
  for (const char* w : {"return", "1", "2", ";"}) v.add(w);
  const EncoderConfig config = fixtures::tiny_config(1, 2, 8, v.size(), 16);
  const Encoder encoder(init_params(config), config);
  const EmbeddingSpec specs[] = {{EmbeddingSource::Cls, 1}, {EmbeddingSource::Idf, 1}};
  const auto e = embed_pair({"return 1;", "return 2;", false}, v, encoder, specs);
  EXPECT_TRUE(e.idf_fallback);
  EXPECT_EQ(e.vectors[0], e.vectors[1]);
}

TEST(Head, SeparableDataReachesHighTrainingF1) {
  Rng rng(5);
  std::vector<RowVector> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    RowVector v(6);
    for (Eigen::Index k = 0; k < 6; ++k) v(k) = rng.normal();
    const int label = i % 2;
    v(2) += label ? 3.0 : -3.0;  // margin along one axis
    x.push_back(v);
    y.push_back(label);
  }
  const auto head = train_head(x, y);
  EXPECT_GE(evaluate(head, x, y).f1, 0.99);
  EXPECT_EQ(HeadOptions{}.epochs, 3);
}

TEST(Head, SingleClassThrows) {
  const std::vector<RowVector> x(3, RowVector::Ones(2));
  EXPECT_THROW(train_head(x, std::vector<int>{1, 1, 1}), Error);
}

TEST(Metrics, HandCounts) {
  // 3 TP, 1 FP, 1 FN, 1 TN.
  const std::vector<int> pred{1, 1, 1, 1, 0, 0};
  const std::vector<int> gold{1, 1, 1, 0, 1, 0};
  const auto m = binary_metrics(pred, gold);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.75);
  EXPECT_DOUBLE_EQ(m.f1, 0.75);
  const auto perfect = binary_metrics(gold, gold);
  EXPECT_DOUBLE_EQ(perfect.f1, 1.0);
  EXPECT_THROW(binary_metrics(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST(SyntheticSet, BalancedDeterministicAndTypePreserving) {
  const auto pairs = make_synthetic_clone_set(toy_docs(), 7, 120);
  ASSERT_EQ(pairs.size(), 120u);
  std::size_t positives = 0;
  for (const auto& p : pairs) positives += p.is_clone;
  EXPECT_EQ(positives, 60u);
  const auto again = make_synthetic_clone_set(toy_docs(), 7, 120);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i].code_b, again[i].code_b);
    if (pairs[i].is_clone) {
      EXPECT_EQ(types_of(pairs[i].code_a), types_of(pairs[i].code_b));
    } else {
      EXPECT_NE(strip_comments(pairs[i].code_a), strip_comments(pairs[i].code_b));
    }
  }
  EXPECT_NE(make_synthetic_clone_set(toy_docs(), 8, 120)[0].code_b, pairs[0].code_b);
}

TEST(SyntheticSet, RenameMapIsConsistent) {
  for (const auto& doc : toy_docs()) {
    Rng rng(11);
    const std::string renamed = rename_and_perturb(doc.source, rng);
    const auto a = lex(strip_comments(doc.source));
    const auto b = lex(renamed);
    ASSERT_EQ(a.size(), b.size()) << doc.name;
    std::map<std::string, std::string> forward, backward;
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].type, b[k].type);
      // Member selections and capitalised names are kept as is.
      const bool member = k > 0 && a[k - 1].text == ".";
      if (a[k].type != TokenType::Identifier || member || std::isupper(static_cast<unsigned char>(a[k].text[0]))) {
        EXPECT_EQ(a[k].text, b[k].text);
        continue;
      }
      const auto [f, fresh] = forward.emplace(a[k].text, b[k].text);
      EXPECT_EQ(f->second, b[k].text) << doc.name << " " << a[k].text;
      const auto [r, rfresh] = backward.emplace(b[k].text, a[k].text);
      EXPECT_EQ(r->second, a[k].text) << doc.name << " " << b[k].text;
    }
  }
}

TEST(SyntheticSet, TooSmallCorpusThrows) {
  const std::vector<Document> one(toy_docs().begin(), toy_docs().begin() + 1);
  EXPECT_THROW(make_synthetic_clone_set(one, 1, 10), Error);
}

TEST(PairFile, RoundTripWithEscapes) {
  const std::vector<ClonePair> pairs{{"int a;\n\treturn a;", "x\\y\r\nz", true}, {"f()", "g()", false}};
  std::stringstream buffer;
  write_pairs(buffer, pairs);
  const auto back = read_pairs(buffer);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].code_a, pairs[i].code_a);
    EXPECT_EQ(back[i].code_b, pairs[i].code_b);
    EXPECT_EQ(back[i].is_clone, pairs[i].is_clone);
  }
}

TEST(PairFile, MalformedLineThrows) {
  std::istringstream bad("1\tonly two fields\n");
  EXPECT_THROW(read_pairs(bad), Error);
  std::istringstream label("2\ta\tb\n");
  EXPECT_THROW(read_pairs(label), Error);
}

TEST(CloneSweep, OneRowPerLayerPlusPooledAndEncoderFrozen) {
  const SmallModel m;
  const Encoder encoder(m.params, m.config);
  const auto pairs = make_synthetic_clone_set(toy_docs(), 3, 40);
  const std::vector<ClonePair> train(pairs.begin(), pairs.begin() + 30), test(pairs.begin() + 30, pairs.end());
  const EmbeddingSource both[] = {EmbeddingSource::Cls, EmbeddingSource::Idf};
  const auto specs = all_specs(m.config.num_layers, both);
  const auto before = checksum(encoder.params());
  const auto stored = checksum(m.params);
  const auto sweep = run_clone_sweep(train, test, m.vocab, encoder, specs);
  EXPECT_EQ(checksum(encoder.params()), before);
  EXPECT_EQ(checksum(m.params), stored);
  ASSERT_EQ(sweep.results.size(), 2u * (m.config.num_layers + 1));
  std::ostringstream out;
  write_clone_results_csv(out, sweep.results);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "source,layer,precision,recall,f1,n");
  EXPECT_NE(out.str().find("IDF,pooled,"), std::string::npos);
}
