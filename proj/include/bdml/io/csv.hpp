#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bdml/error.hpp"

namespace bdml::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::ptrdiff_t column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<std::ptrdiff_t>(j);
    }
    return -1;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and line
/// breaks. Unquoted fields are trimmed; blank lines are skipped.
inline CsvTable parse_csv(std::string_view text, const std::string& source = "<csv>") {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, was_quoted = false, any = false;
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(was_quoted ? field : detail::trim(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty() && !any;
    if (!blank) records.push_back(std::move(record));
    record.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!detail::trim(field).empty()) {
          throw DataError(source + ":" + std::to_string(line) + ": stray quote inside a field");
        }
        field.clear();
        quoted = was_quoted = any = true;
        break;
      case ',':
        any = true;
        end_field();
        break;
      case '\n':
        end_record();
        ++line;
        break;
      case '\r':
        break;
      default:
        field += c;
    }
  }
  if (quoted) throw DataError(source + ": unterminated quoted field");
  if (!field.empty() || !record.empty() || any) end_record();

  CsvTable t;
  if (records.empty()) throw DataError(source + ": missing header row");
  t.header = std::move(records.front());
  for (const auto& h : t.header) {
    if (h.empty()) throw DataError(source + ": empty column name in header");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw DataError(source + ": data row " + std::to_string(r) + " has " +
                      std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

/// Parses a numeric cell; `where` is used in the error message.
inline double parse_number(const std::string& raw, const std::string& where) {
  const std::string cell = detail::trim(raw);
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (cell.empty()) throw DataError(where + ": empty cell");
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError(where + ": '" + cell + "' is not a finite number");
  }
  return v;
}

/// 12 significant digits; NaN prints as NA.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Incremental CSV text builder.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) : width_(header.size()) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw ConfigError("CSV row width does not match header");
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j) out_ += ',';
      out_ += quote_field(fields[j]);
    }
    out_ += '\n';
  }

  const std::string& str() const noexcept { return out_; }

 private:
  std::size_t width_;
  std::string out_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace bdml::io
