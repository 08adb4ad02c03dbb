#pragma once

// Minimal CSV plumbing shared by ingest and io. Handles RFC-style quoting,
// reports 1-based line numbers, and formats doubles as shortest round-trip
// decimal via std::to_chars so serialize/parse is exact and byte-stable.

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fp/errors.hpp"

namespace fp::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line number of the row start
};

// Reads one logical CSV row (quoted fields may span lines). Returns false on
// clean EOF. `line` is advanced as physical lines are consumed.
inline bool read_row(std::istream& in, Row& row, std::size_t& line) {
  row.fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  row.line = line + 1;
  std::string field;
  bool quoted = false;
  bool any = false;
  auto push = [&] {
    row.fields.push_back(field);
    field.clear();
  };
  for (;;) {
    if (c == EOF) {
      if (quoted) throw DataError("line " + std::to_string(row.line) + ": unterminated quoted field");
      push();
      ++line;
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        const int next = in.peek();
        if (next == '"') {
          in.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
    } else if (ch == '"' && field.empty() && !any) {
      quoted = true;
      any = true;
    } else if (ch == ',') {
      push();
      any = false;
    } else if (ch == '\r') {
      // swallow; row ends at the following '\n'
    } else if (ch == '\n') {
      push();
      ++line;
      return true;
    } else {
      field += ch;
      any = true;
    }
    c = in.get();
  }
}

inline std::string quote(std::string_view s) {
  bool needs = false;
  for (char ch : s)
    if (ch == ',' || ch == '"' || ch == '\n' || ch == '\r') needs = true;
  if (!needs) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericalError("failed to format floating-point value");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw DataError("line " + std::to_string(line) + ": malformed " + std::string(what) + " '" +
                    std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_index(std::string_view s, std::size_t line, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("line " + std::to_string(line) + ": malformed " + std::string(what) + " '" +
                    std::string(s) + "'");
  return v;
}

}  // namespace fp::csv
