#include "codeattn/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {

Document make_document(std::string name, std::string_view raw_source) {
  Document doc;
  doc.name = std::move(name);
  doc.source = strip_comments(raw_source);
  doc.tokens = lex(doc.source);
  return doc;
}

std::vector<Document> load_java_directory(const std::filesystem::path& dir, LoadReport* report) {
  if (!std::filesystem::is_directory(dir)) throw Error("corpus directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".java") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Document> documents;
  for (const auto& file : files) {
    if (report) ++report->files_seen;
    std::string name = std::filesystem::relative(file, dir).replace_extension().generic_string();
    std::replace(name.begin(), name.end(), '/', '.');
    try {
      Document doc = make_document(name, csv::read_file(file));
      if (doc.tokens.empty()) {
        if (report) report->warnings.push_back(file.string() + ": no code after stripping comments; dropped");
        continue;
      }
      documents.push_back(std::move(doc));
    } catch (const LexError& e) {
      if (report) report->warnings.push_back(file.string() + ": " + e.what() + "; dropped");
    }
  }
  return documents;
}

std::map<std::string, std::size_t> word_counts(const std::vector<Document>& documents) {
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : documents) {
    for (const auto& token : doc.tokens) ++counts[token.text];
  }
  return counts;
}

void write_prepared_corpus(const std::filesystem::path& dir, const std::vector<Document>& documents) {
  std::ostringstream manifest;
  manifest << "document,sentences,tokens\n";
  for (const auto& doc : documents) {
    manifest << csv::escape(doc.name) << ',' << doc.sentences().size() << ',' << doc.tokens.size() << '\n';
    csv::write_file_atomic(dir / "sources" / (doc.name + ".java"), doc.source);
    std::ostringstream tokens;
    write_token_csv(tokens, doc.tokens);
    csv::write_file_atomic(dir / "tokens" / (doc.name + ".csv"), tokens.str());
  }
  csv::write_file_atomic(dir / "manifest.csv", manifest.str());
}

std::vector<Document> read_prepared_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.csv";
  std::ifstream manifest(manifest_path);
  if (!manifest) {
    throw Error("prepared corpus manifest " + manifest_path.string() + " not found; run `codeattn prepare` first");
  }
  std::vector<Document> documents;
  std::vector<std::string> fields;
  bool header = true;
  while (csv::read_record(manifest, fields)) {
    if (header) {
      header = false;
      continue;
    }
    if (fields.empty()) continue;
    Document doc;
    doc.name = fields[0];
    doc.source = csv::read_file(dir / "sources" / (doc.name + ".java"));
    std::ifstream tokens(dir / "tokens" / (doc.name + ".csv"));
    if (!tokens) throw Error("missing token dump for document " + doc.name);
    const std::vector<Token> dumped = read_token_csv(tokens);
    // Spans are recomputed from the stored source; the dump must agree with it.
    doc.tokens = lex(doc.source);
    if (dumped.size() != doc.tokens.size()) throw Error("token dump for " + doc.name + " is out of date");
    documents.push_back(std::move(doc));
  }
  return documents;
}

}  // namespace codeattn
