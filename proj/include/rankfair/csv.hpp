#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "rankfair/errors.hpp"

namespace rankfair::csv {

// Quotes a field if it holds a delimiter, quote, or line break; doubles any
// embedded quotes.
inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos)
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

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

// Record-at-a-time reader for comma-separated files: handles quoted fields
// with embedded commas, doubled quotes, and line breaks inside quotes, and
// accepts both LF and CRLF endings. Fully blank lines are skipped.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Line (1-based) where the most recently returned record began.
  std::size_t line() const { return record_line_; }

  // Reads the next record into fields; returns false at end of input.
  bool next(std::vector<std::string>& fields) {
    for (;;) {
      if (!read_record(fields)) return false;
      if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
      return true;
    }
  }

 private:
  bool read_record(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == std::char_traits<char>::eof()) return false;
    record_line_ = line_;
    std::string field;
    bool quoted = false;
    bool closed = false;  // a quoted field just ended; only , or EOL may follow
    for (;;) {
      if (c == std::char_traits<char>::eof()) {
        if (quoted)
          throw ValidationError("line " + std::to_string(record_line_) +
                                ": unterminated quoted field");
        fields.push_back(std::move(field));
        return true;
      }
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          const int peek = in_.peek();
          if (peek == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
            closed = true;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
      } else if (closed && ch != ',' && ch != '\r' && ch != '\n') {
        throw ValidationError("line " + std::to_string(line_) +
                              ": text after closing quote");
      } else if (ch == '"') {
        if (!field.empty())
          throw ValidationError("line " + std::to_string(line_) +
                                ": quote inside unquoted field");
        quoted = true;
      } else if (ch == ',') {
        closed = false;
        fields.push_back(std::move(field));
        field.clear();
      } else if (ch == '\n' || ch == '\r') {
        if (ch == '\r' && in_.peek() == '\n') in_.get();
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(ch);
      }
      c = in_.get();
    }
  }

  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 1;
};

}  // namespace rankfair::csv
