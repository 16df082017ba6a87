#include "codeattn/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "codeattn/error.hpp"

namespace codeattn::csv {

std::string quote(std::string_view field) {
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  return quote(field);
}

bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int c = in.peek();
  // Skip comment lines and blank lines between records.
  while (c != EOF && (c == '#' || c == '\n' || c == '\r')) {
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
    } else {
      in.get();
    }
    c = in.peek();
  }
  if (c == EOF) return false;

  std::string field;
  bool quoted = false;
  while (true) {
    c = in.get();
    if (c == EOF) {
      if (quoted) throw Error("unterminated quoted CSV field");
      fields.push_back(std::move(field));
      return true;
    }
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
}

std::string format_double(double value) {
  // Shortest form that reads back to the same double.
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace codeattn::csv
