#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string output;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI with stdout and stderr captured to a file.
CliRun cli(const std::string& args, const fs::path& log) {
  const std::string command = "\""s + CODEATTN_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int raw = std::system(command.c_str());
  CliRun r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.output = slurp(log);
  return r;
}

std::size_t data_rows(const fs::path& csv) {
  std::istringstream in(slurp(csv));
  std::string line;
  std::size_t rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "codeattn_cli_pipeline";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string common() {
    return "--out \"" + dir_.string() + "\" --layers 1 --heads 2 --hidden 16 --max-len 96 --vocab-size 400 --seed 3";
  }
  static fs::path log() { return dir_ / "log.txt"; }

  static inline fs::path dir_;
};

}  // namespace

TEST(Cli, UnknownFlagExitsWithUsageError) {
  const fs::path log = fs::temp_directory_path() / "codeattn_cli_usage.txt";
  const CliRun r = cli("prepare --no-such-flag", log);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("Usage"), std::string::npos);
  fs::remove(log);
}

TEST(Cli, MissingPrerequisiteNamesTheCommand) {
  const fs::path dir = fs::temp_directory_path() / "codeattn_cli_missing";
  fs::remove_all(dir);
  const CliRun r = cli("analyze --out \"" + dir.string() + "\"", fs::temp_directory_path() / "codeattn_cli_missing.txt");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("run `codeattn pretrain` first"), std::string::npos) << r.output;
  fs::remove_all(dir);
}

TEST_F(CliPipeline, EndToEnd) {
  const std::string corpus = " --corpus \""s + CODEATTN_TOY_CORPUS + "\"";
  CliRun r = cli("prepare" + corpus + " " + common(), log());
  ASSERT_EQ(r.status, 0) << r.output;
  const std::string vocab = slurp(dir_ / "vocab.txt");
  ASSERT_FALSE(vocab.empty());
  ASSERT_TRUE(fs::exists(dir_ / "corpus" / "manifest.csv"));

  // Re-preparing the same corpus yields the same vocabulary bytes.
  r = cli("prepare" + corpus + " " + common(), log());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(slurp(dir_ / "vocab.txt"), vocab);

  r = cli("pretrain " + common() + " --epochs 1", log());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir_ / "encoder.ckpt"));
  EXPECT_EQ(data_rows(dir_ / "metrics.csv"), 1u);

  r = cli("analyze " + common(), log());
  ASSERT_EQ(r.status, 0) << r.output;
  for (const char* name : {"special_tokens.csv", "relative_position.csv", "head_redundancy.csv",
                           "construct_attention.csv", "identifier_relationship.csv", "redundancy_matrix.csv"}) {
    const fs::path path = dir_ / name;
    ASSERT_TRUE(fs::exists(path)) << name;
    EXPECT_EQ(slurp(path).rfind("# codeattn ", 0), 0u) << name;
    EXPECT_GT(data_rows(path), 0u) << name;
  }
  EXPECT_EQ(data_rows(dir_ / "redundancy_matrix.csv"), 2u);

  r = cli("probe " + common(), log());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(data_rows(dir_ / "probe_results.csv"), 7u);
  EXPECT_GT(data_rows(dir_ / "probe_raw.csv"), 0u);

  r = cli("clone " + common() + " --clone-size 60 --head-epochs 1", log());
  ASSERT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(data_rows(dir_ / "clone_results.csv"), 4u);
  const std::string pairs = slurp(dir_ / "clone_pairs.tsv");
  EXPECT_EQ(std::count(pairs.begin(), pairs.end(), '\n'), 60);
  EXPECT_EQ(slurp(dir_ / "clone_results.csv").rfind("# codeattn ", 0), 0u);
}
