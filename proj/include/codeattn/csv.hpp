#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace codeattn::csv {

// Always quotes; embedded quotes are doubled.
std::string quote(std::string_view field);

// Quotes only when the field contains a comma, quote, or line break.
std::string escape(std::string_view field);

// Reads one record, honouring quoted fields that span lines. Lines starting
// with '#' outside a record are treated as comments and skipped.
// Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields);

std::string format_double(double value);

// Writes via a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace codeattn::csv
