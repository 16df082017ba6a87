#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "codeattn/checkpoint.hpp"
#include "codeattn/corpus.hpp"
#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"
#include "test_support.hpp"

using namespace codeattn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("codeattn_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST(Corpus, LoadsToyCorpusSorted) {
  LoadReport report;
  const auto docs = load_java_directory(CODEATTN_TOY_CORPUS, &report);
  ASSERT_EQ(docs.size(), 50u);
  EXPECT_EQ(report.files_seen, 50u);
  EXPECT_TRUE(report.warnings.empty());
  for (std::size_t i = 1; i < docs.size(); ++i) EXPECT_LT(docs[i - 1].name, docs[i].name);
  for (const auto& d : docs) {
    EXPECT_FALSE(d.tokens.empty()) << d.name;
    EXPECT_GE(d.sentences().size(), 2u) << d.name;
  }
}

TEST(Corpus, CommentOnlyAndBrokenFilesAreDropped) {
  const fs::path dir = scratch("drop");
  write(dir / "A.java", "int f() { return 1; }\n");
  write(dir / "B.java", "// nothing here\n/* or here */\n");
  write(dir / "C.java", "int g() { return #; }\n");
  write(dir / "notes.txt", "not java");
  LoadReport report;
  const auto docs = load_java_directory(dir, &report);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].name, "A");
  EXPECT_EQ(report.warnings.size(), 2u);
  fs::remove_all(dir);
}

TEST(Corpus, MissingDirectoryThrows) {
  EXPECT_THROW(load_java_directory("/nonexistent/codeattn/dir"), Error);
}

TEST(Corpus, PreparedRoundTrip) {
  const auto docs = load_java_directory(CODEATTN_TOY_CORPUS);
  const fs::path dir = scratch("prepared");
  write_prepared_corpus(dir, docs);
  EXPECT_TRUE(fs::exists(dir / "manifest.csv"));
  const auto back = read_prepared_corpus(dir);
  ASSERT_EQ(back.size(), docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    EXPECT_EQ(back[i].name, docs[i].name);
    EXPECT_EQ(back[i].source, docs[i].source);
    EXPECT_EQ(back[i].tokens, docs[i].tokens);
  }
  fs::remove_all(dir);
}

TEST(Corpus, ReadingUnpreparedDirectoryNamesTheFix) {
  const fs::path dir = scratch("empty");
  try {
    read_prepared_corpus(dir);
    FAIL() << "expected Error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("codeattn prepare"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Corpus, WordCountsCoverEveryToken) {
  const auto docs = load_java_directory(CODEATTN_TOY_CORPUS);
  std::size_t tokens = 0;
  for (const auto& d : docs) tokens += d.tokens.size();
  std::size_t counted = 0;
  for (const auto& [word, n] : word_counts(docs)) counted += n;
  EXPECT_EQ(counted, tokens);
}

TEST(CheckpointFile, SaveLoadBitIdentical) {
  const EncoderConfig config = fixtures::tiny_config(2, 2, 8, 20, 12);
  const auto params = fixtures::noisy_params<float>(config, 2, 0.4);
  const fs::path dir = scratch("ckpt");
  save_checkpoint(dir / "e.ckpt", params, config);
  const auto back = load_checkpoint(dir / "e.ckpt");
  EXPECT_EQ(back.config, config);
  EXPECT_TRUE(bit_identical(back.params, params));
  fs::remove_all(dir);
}

TEST(CheckpointFile, CorruptHeaderThrows) {
  EXPECT_THROW(deserialize_checkpoint("not a checkpoint\n"), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/e.ckpt"), Error);
}
