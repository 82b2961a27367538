// SPDX-License-Identifier: Apache-2.0
//
// Result tables and their CSV/JSON encodings.

#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvqkd/format.hpp"
#include "cvqkd/scenario.hpp"

#ifndef CVQKD_VERSION_STRING
#define CVQKD_VERSION_STRING "0.0.0"
#endif

namespace cvqkd {

inline constexpr const char* library_version = CVQKD_VERSION_STRING;
inline constexpr const char* results_schema_version = "1.0";

using Cell = std::variant<double, std::int64_t, std::string>;

struct ResultTable {
  std::string command;  // rate | sweep | simulate | coverage
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::uint64_t seed = 0;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw std::out_of_range("no column '" + std::string(name) + "'");
  }
};

inline std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return format_int(*i);
  return std::get<std::string>(c);
}

/// CSV with a '#'-prefixed provenance preamble, then header and rows. LF endings.
inline void write_csv(std::ostream& os, const ResultTable& t, const Scenario& sc) {
  if (t.rows.empty()) throw std::invalid_argument("write_csv: empty result table");
  os << "# cvqkd " << library_version << '\n';
  os << "# command " << t.command << '\n';
  os << "# scenario_hash " << sc.hash_hex() << '\n';
  os << "# seed " << t.seed << '\n';
  for (const auto& [k, v] : sc.derived) os << "# derived " << k << " = " << format_double(v) << '\n';
  std::istringstream canon(sc.canonical);
  for (std::string line; std::getline(canon, line);) os << "# config " << line << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_field(t.columns[i]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(cell_text(row[i]));
    os << '\n';
  }
}

inline nlohmann::ordered_json to_json(const ResultTable& t, const Scenario& sc) {
  using nlohmann::ordered_json;
  if (t.rows.empty()) throw std::invalid_argument("to_json: empty result table");
  ordered_json j;
  j["schema_version"] = results_schema_version;
  j["generator"] = {{"name", "cvqkd"}, {"version", library_version}};
  j["command"] = t.command;
  ordered_json scenario;
  scenario["name"] = sc.name;
  scenario["hash"] = sc.hash_hex();
  scenario["seed"] = t.seed;
  ordered_json config = ordered_json::array();
  std::istringstream canon(sc.canonical);
  for (std::string line; std::getline(canon, line);) config.push_back(line);
  scenario["config"] = config;
  ordered_json derived = ordered_json::object();
  for (const auto& [k, v] : sc.derived) derived[k] = v;
  scenario["derived"] = derived;
  j["scenario"] = scenario;
  j["columns"] = t.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows) {
    ordered_json r = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>) {
              if (std::isfinite(v)) r[t.columns[i]] = v;
              else r[t.columns[i]] = nullptr;
            } else {
              r[t.columns[i]] = v;
            }
          },
          row[i]);
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = rows;
  return j;
}

inline void write_json(std::ostream& os, const ResultTable& t, const Scenario& sc) {
  os << to_json(t, sc).dump(2) << '\n';
}

/// Writes to `path`, or to `fallback` when path is empty or "-".
inline void emit_results(const ResultTable& t, const Scenario& sc, const std::string& format, const std::string& path,
                         std::ostream& fallback) {
  if (format != "csv" && format != "json") throw std::invalid_argument("emit_results: format must be csv or json");
  auto write = [&](std::ostream& os) {
    if (format == "csv") write_csv(os, t, sc);
    else write_json(os, t, sc);
  };
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write(out);
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

/// Minimal RFC-4180 reader for tables written above; skips '#' lines.
inline ResultTable read_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(std::move(cur));
    return out;
  };
  ResultTable t;
  bool header = true;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line);
    if (header) {
      t.columns = std::move(fields);
      header = false;
      continue;
    }
    if (fields.size() != t.columns.size()) throw std::runtime_error("read_csv: ragged row");
    std::vector<Cell> row;
    for (auto& f : fields) row.emplace_back(std::move(f));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace cvqkd
