#pragma once
//
// CSV ingestion and emission (RFC 4180 dialect: quoted fields, doubled
// quotes as escapes, CRLF or LF line ends, first record is the header).
// All cells must parse as finite numbers; failures are reported with
// 1-based row/column coordinates. The target column is selected by name;
// a target whose values are all 0/1 is treated as binary classification
// unless the caller forces a task.
//
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lofi/dataset.hpp"
#include "lofi/errors.hpp"

namespace lofi {

namespace detail {

/// Splits raw CSV text into records of fields, honoring quotes.
inline std::vector<std::vector<std::string>> parse_csv_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(record);
    record.clear();
  };
  while (i < n) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      field.push_back(c);
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        require_data(field.empty() && !field_was_quoted,
                     "malformed CSV: quote inside unquoted field (record " +
                         std::to_string(records.size() + 1) + ")");
        in_quotes = true;
        field_was_quoted = true;
        ++i;
        break;
      case ',':
        end_field();
        ++i;
        break;
      case '\r':
        if (i + 1 < n && text[i + 1] == '\n') ++i;
        end_record();
        ++i;
        break;
      case '\n':
        end_record();
        ++i;
        break;
      default:
        field.push_back(c);
        ++i;
        break;
    }
  }
  require_data(!in_quotes, "malformed CSV: unterminated quoted field");
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();
  return records;
}

inline double parse_cell(const std::string& cell, std::size_t row1, std::size_t col1,
                         const std::string& col_name) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  require_data(res.ec == std::errc() && res.ptr == last && std::isfinite(v),
               "row " + std::to_string(row1) + ", column '" + col_name +
                   "' (#" + std::to_string(col1) + "): cannot parse '" + cell +
                   "' as a finite number");
  return v;
}

}  // namespace detail

/// Reads a CSV file into a Dataset with the named target column.
inline Dataset read_csv(const std::string& path, const std::string& target,
                        std::optional<Task> forced_task = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  require_data(in.good(), "cannot open CSV file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto records = detail::parse_csv_records(buf.str());
  require_data(records.size() >= 2, "CSV '" + path + "' needs a header and at least one data row");

  const auto& header = records.front();
  std::size_t target_col = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == target) target_col = j;
  require_data(target_col < header.size(),
               "target column '" + target + "' not found in CSV header");

  std::vector<std::string> names;
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == target_col) continue;
    names.push_back(header[j]);
    feature_cols.push_back(j);
  }
  require_data(!names.empty(), "CSV must contain at least one feature column");

  const std::size_t n = records.size() - 1;
  Matrix x(n, names.size());
  std::vector<double> y(n);
  bool binary = true;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    require_data(rec.size() == header.size(),
                 "row " + std::to_string(r + 2) + ": expected " +
                     std::to_string(header.size()) + " fields, found " +
                     std::to_string(rec.size()));
    for (std::size_t c = 0; c < feature_cols.size(); ++c)
      x(r, c) = detail::parse_cell(rec[feature_cols[c]], r + 2, feature_cols[c] + 1,
                                   names[c]);
    y[r] = detail::parse_cell(rec[target_col], r + 2, target_col + 1, target);
    if (y[r] != 0.0 && y[r] != 1.0) binary = false;
  }
  const Task task = forced_task.value_or(binary ? Task::binary_classification
                                                : Task::regression);
  return Dataset(std::move(names), std::move(x), std::move(y), task);
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes a Dataset as CSV: feature columns then the target column.
inline void write_csv(const std::string& path, const Dataset& d,
                      const std::string& target_name = "y") {
  std::ofstream out(path, std::ios::binary);
  require_data(out.good(), "cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < d.p(); ++j)
    out << detail::csv_escape(d.feature_names[j]) << ',';
  out << detail::csv_escape(target_name) << '\n';
  for (std::size_t i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.p(); ++j)
      out << detail::format_double(d.x(i, j)) << ',';
    out << detail::format_double(d.y[i]) << '\n';
  }
  require_data(out.good(), "write failure on '" + path + "'");
}

}  // namespace lofi
