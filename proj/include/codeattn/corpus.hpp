#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "codeattn/java_lexer.hpp"

namespace codeattn {

// One comment-stripped, lexed source file (a function in the toy corpus).
struct Document {
  std::string name;
  std::string source;
  std::vector<Token> tokens;

  // Line-based sentences; lines without tokens are dropped.
  std::vector<std::vector<Token>> sentences() const { return group_by_line(tokens); }
};

struct LoadReport {
  std::vector<std::string> warnings;
  std::size_t files_seen = 0;
};

Document make_document(std::string name, std::string_view raw_source);

// Loads every *.java file under dir (sorted by path). Files that fail to lex
// or hold only comments are dropped with a warning.
std::vector<Document> load_java_directory(const std::filesystem::path& dir, LoadReport* report = nullptr);

std::map<std::string, std::size_t> word_counts(const std::vector<Document>& documents);

// Prepared corpus layout: manifest.csv (document,sentences,tokens),
// sources/<document>.java (comment-stripped) and tokens/<document>.csv
// (token dump format).
void write_prepared_corpus(const std::filesystem::path& dir, const std::vector<Document>& documents);
std::vector<Document> read_prepared_corpus(const std::filesystem::path& dir);

}  // namespace codeattn
