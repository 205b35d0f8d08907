// Tabular command output serialized as JSON or CSV.
//
// Numbers are written with 17 significant digits. Non-finite values become
// the strings "inf", "-inf" and "nan" (quoted in JSON, bare in CSV).
#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "seqstop/errors.hpp"

namespace seqstop {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

struct OutputRecord {
  using Value = std::variant<double, std::string>;

  std::string command;
  std::vector<std::pair<std::string, Value>> parameters;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  OutputRecord(std::string cmd, std::vector<std::string> cols) : command(std::move(cmd)), columns(std::move(cols)) {
    std::set<std::string> seen;
    for (const auto& c : columns) {
      if (!seen.insert(c).second) throw DomainError("OutputRecord: duplicate column '" + c + "'");
    }
  }

  void param(std::string key, double v) { parameters.emplace_back(std::move(key), v); }
  void param(std::string key, std::string v) { parameters.emplace_back(std::move(key), std::move(v)); }
  template <class T>
    requires std::is_arithmetic_v<T>
  void param(std::string key, T v) {
    param(std::move(key), static_cast<double>(v));
  }

  void add_row(std::vector<double> row) {
    if (row.size() != columns.size()) throw DomainError("OutputRecord: row width does not match columns");
    rows.push_back(std::move(row));
  }
};

namespace detail {

inline std::string json_number(double x) {
  const std::string s = format_number(x);
  return std::isfinite(x) ? s : "\"" + s + "\"";
}

}  // namespace detail

inline void write_json(std::ostream& os, const OutputRecord& rec) {
  os << "{\"command\":\"" << json_escape(rec.command) << "\",\"parameters\":{";
  for (std::size_t i = 0; i < rec.parameters.size(); ++i) {
    if (i) os << ',';
    os << '"' << json_escape(rec.parameters[i].first) << "\":";
    const auto& v = rec.parameters[i].second;
    if (const auto* d = std::get_if<double>(&v)) {
      os << detail::json_number(*d);
    } else {
      os << '"' << json_escape(std::get<std::string>(v)) << '"';
    }
  }
  os << "},\"rows\":[";
  for (std::size_t r = 0; r < rec.rows.size(); ++r) {
    if (r) os << ',';
    os << '{';
    for (std::size_t c = 0; c < rec.columns.size(); ++c) {
      if (c) os << ',';
      os << '"' << json_escape(rec.columns[c]) << "\":" << detail::json_number(rec.rows[r][c]);
    }
    os << '}';
  }
  os << "]}\n";
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline void write_csv(std::ostream& os, const OutputRecord& rec) {
  for (std::size_t c = 0; c < rec.columns.size(); ++c) os << (c ? "," : "") << csv_field(rec.columns[c]);
  os << '\n';
  for (const auto& row : rec.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
}

}  // namespace seqstop
