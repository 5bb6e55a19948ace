#pragma once

// Minimal CSV support: comma separated, mandatory header row, LF line
// endings on output, '.' decimal separator. No quoting.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qfc::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string source;  // file name for diagnostics

  // Index of a column; throws InputError if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  // Parses row r (zero-based, excluding the header) of column c as a double;
  // diagnostics name the file, line and column.
  double number(std::size_t r, std::size_t c) const;
  const std::string& text(std::size_t r, std::size_t c) const;
};

// Blank lines are skipped; CRLF is accepted. Throws InputError on ragged
// rows or a missing header.
CsvTable parse_csv(std::string_view content, std::string source = "<csv>");
CsvTable read_csv(const std::filesystem::path& path);

// General format with 17 significant digits, so the text parses back to the
// identical double; 0.1 becomes "0.10000000000000001".
std::string format_number(double value);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);
  const std::string& str() const { return out_; }

 private:
  std::size_t columns_;
  std::string out_;
};

}  // namespace qfc::cli
