#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace triage::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line_number = 0;  // 1-based physical line where the record starts
  std::string raw;              // record text without the terminating newline
  bool malformed = false;       // unterminated or misplaced quote
};

/// RFC-4180 record reader. Quoted fields may span lines; blank lines outside
/// quotes are skipped. Holds one record at a time, so memory does not grow
/// with input length.
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delimiter_(delimiter) {}

  // False at end of input.
  bool next(Record& record);

 private:
  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 0;
};

// Quotes only when the field holds the delimiter, a quote, CR or LF.
std::string escape(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, std::span<const std::string> fields, char delimiter = ',');
std::string join_row(std::span<const std::string> fields, char delimiter = ',');

std::vector<std::string_view> split_plain(std::string_view line, char delimiter);

}  // namespace triage::csv
