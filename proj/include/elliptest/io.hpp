#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "elliptest/error.hpp"
#include "elliptest/matrix.hpp"
#include "elliptest/null_model.hpp"

namespace elliptest {

/// Shortest round-trip decimal form; keeps emitted CSV/JSON byte-stable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

inline bool parse_finite(const std::string& field, double& out) {
  std::size_t begin = field.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return false;
  const std::size_t end = field.find_last_not_of(" \t\r") + 1;
  const char* first = field.data() + begin;
  const char* last = field.data() + end;
  // from_chars rejects an explicit plus sign, strtod-style inputs allow it
  if (first != last && *first == '+') {
    ++first;
    if (first == last || *first == '+' || *first == '-') return false;
  }
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last && std::isfinite(out);
}

/// RFC-4180-style record splitter: quoted fields may hold commas, doubled
/// quotes and line breaks. Bare CR, LF and CRLF all end a record.
inline std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !field_started) {
          quoted = true;
          field_started = true;
        } else {
          throw input_error("csv: stray quote inside unquoted field");
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw input_error("csv: unterminated quoted field");
  if (field_started || !record.empty() || !field.empty()) end_record();
  return records;
}

}  // namespace detail

/// Strict numeric CSV reader: optional single header row, rectangular body,
/// every cell a finite number. NaN and infinities are data corruption here,
/// not values, and are rejected loudly.
inline matrix read_csv_matrix(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::vector<std::vector<std::string>> records = detail::split_csv(buffer.str());
  if (records.empty()) throw input_error("csv: file holds no records");

  double value = 0.0;
  bool header = false;
  for (const std::string& cell : records.front()) {
    if (!detail::parse_finite(cell, value)) {
      header = true;
      break;
    }
  }
  const std::size_t first_row = header ? 1 : 0;
  if (records.size() <= first_row) throw input_error("csv: header without data rows");

  const std::size_t p = records[first_row].size();
  if (p == 0) throw input_error("csv: empty record");
  matrix out(records.size() - first_row, p);
  for (std::size_t r = first_row; r < records.size(); ++r) {
    if (records[r].size() != p)
      throw input_error("csv: row " + std::to_string(r + 1) + " has " +
                        std::to_string(records[r].size()) + " fields, expected " +
                        std::to_string(p));
    for (std::size_t c = 0; c < p; ++c) {
      if (!detail::parse_finite(records[r][c], value))
        throw input_error("csv: row " + std::to_string(r + 1) + ", column " +
                          std::to_string(c + 1) + " is not a finite number: '" +
                          records[r][c] + "'");
      out(r - first_row, c) = value;
    }
  }
  return out;
}

inline matrix read_csv_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open input file: " + path);
  return read_csv_matrix(in);
}

/// Flat key=value configuration; '#' lines are comments, later keys win.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw input_error("config: line " + std::to_string(lineno) + " is not key=value");
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty())
      throw input_error("config: line " + std::to_string(lineno) + " has an empty key");
    out[key] = trim(stripped.substr(eq + 1));
  }
  return out;
}

inline nlohmann::json matrix_to_json(const matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline const char* statistic_kind_name(statistic_kind kind) {
  return kind == statistic_kind::ajne ? "ajne" : "gine";
}

inline const char* ajne_variant_name(ajne_variant v) {
  switch (v) {
    case ajne_variant::factorial: return "factorial";
    case ajne_variant::literal: return "literal";
    default: return "auto";
  }
}

inline nlohmann::json null_model_to_json(const null_model& model) {
  nlohmann::json terms = nlohmann::json::array();
  for (const mixture_term& t : model.terms)
    terms.push_back({{"weight", t.weight}, {"dof", t.dof}});
  return nlohmann::json{{"kind", statistic_kind_name(model.kind)},
                        {"p", model.p},
                        {"truncation_q", model.truncation_q},
                        {"terms", std::move(terms)},
                        {"tail_mass_bound", model.tail_mass_bound},
                        {"ajne_variant", ajne_variant_name(model.resolved_variant)}};
}

inline null_model null_model_from_json(const nlohmann::json& j) {
  null_model model;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ajne")
    model.kind = statistic_kind::ajne;
  else if (kind == "gine")
    model.kind = statistic_kind::gine;
  else
    throw input_error("null model json: unknown kind '" + kind + "'");
  model.p = j.at("p").get<int>();
  model.truncation_q = j.at("truncation_q").get<int>();
  model.tail_mass_bound = j.at("tail_mass_bound").get<double>();
  const std::string variant = j.value("ajne_variant", "factorial");
  model.resolved_variant =
      variant == "literal" ? ajne_variant::literal : ajne_variant::factorial;
  for (const nlohmann::json& t : j.at("terms")) {
    mixture_term term;
    term.weight = t.at("weight").get<double>();
    term.dof = t.at("dof").get<std::int64_t>();
    if (!(term.weight > 0.0) || term.dof < 1)
      throw input_error("null model json: invalid mixture term");
    model.terms.push_back(term);
  }
  if (model.terms.empty()) throw input_error("null model json: no terms");
  return model;
}

}  // namespace elliptest
