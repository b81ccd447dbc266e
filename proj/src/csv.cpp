#include "triage/csv.hpp"

namespace triage::csv {

bool Reader::next(Record& record) {
  record.fields.clear();
  record.raw.clear();
  record.malformed = false;

  std::string line;
  // skip blank lines between records
  for (;;) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  record.line_number = line_;
  record.raw = line;

  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool after_closing_quote = false;
  std::size_t i = 0;
  for (;;) {
    if (i == line.size()) {
      if (in_quotes) {
        std::string more;
        if (!std::getline(in_, more)) {
          record.malformed = true;
          record.fields.push_back(std::move(field));
          return true;
        }
        ++line_;
        field.push_back('\n');
        record.raw.push_back('\n');
        record.raw += more;
        line = std::move(more);
        i = 0;
        continue;
      }
      record.fields.push_back(std::move(field));
      return true;
    }

    const char c = line[i++];
    if (in_quotes) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
          after_closing_quote = true;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == delimiter_) {
      record.fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
      after_closing_quote = false;
      continue;
    }
    if (after_closing_quote) {
      // text between a closing quote and the next delimiter
      record.malformed = true;
      field.push_back(c);
      continue;
    }
    if (c == '"' && field.empty() && !field_was_quoted) {
      in_quotes = true;
      field_was_quoted = true;
      continue;
    }
    field.push_back(c);
  }
}

std::string escape(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\r', '\n'}) == std::string_view::npos)
    return std::string(field);
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

std::string join_row(std::span<const std::string> fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(delimiter);
    out += escape(fields[i], delimiter);
  }
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields, char delimiter) {
  out << join_row(fields, delimiter) << '\n';
}

std::vector<std::string_view> split_plain(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace triage::csv
