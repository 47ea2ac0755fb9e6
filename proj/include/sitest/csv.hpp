#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sitest/core_data.hpp"
#include "sitest/errors.hpp"

namespace sitest {

/// Column naming used by load_csv/write_csv. Covariates are `<x_prefix>1 .. <x_prefix>d`.
struct CsvSchema {
  std::string x_prefix = "x";
  std::string y_column = "y";
  std::string z_column = "z";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline Dataset read_csv(std::istream& in, const CsvSchema& schema = {},
                        const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file (no header row)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = detail::split_commas(line);
  std::optional<std::size_t> y_col, z_col;
  std::map<std::size_t, std::size_t> x_cols;  // covariate number -> column
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = header[c];
    if (name == schema.y_column) {
      y_col = c;
    } else if (name == schema.z_column) {
      z_col = c;
    } else if (name.size() > schema.x_prefix.size() && name.starts_with(schema.x_prefix)) {
      const auto suffix = name.substr(schema.x_prefix.size());
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), idx);
      if (ec == std::errc() && ptr == suffix.data() + suffix.size() && idx >= 1) x_cols[idx] = c;
    }
  }
  if (!y_col) throw DataError(source + ": missing column '" + schema.y_column + "'");
  if (!z_col) throw DataError(source + ": missing column '" + schema.z_column + "'");
  if (x_cols.empty()) {
    throw DataError(source + ": missing covariate columns '" + schema.x_prefix + "1'...");
  }
  const std::size_t d = x_cols.size();
  for (std::size_t j = 1; j <= d; ++j) {
    if (!x_cols.contains(j)) {
      throw DataError(source + ": missing column '" + schema.x_prefix + std::to_string(j) + "'");
    }
  }

  std::vector<double> xs;
  std::vector<std::uint8_t> ys;
  std::vector<double> zs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    auto number = [&](std::size_t col) {
      const auto v = detail::parse_double(cells[col]);
      const std::string where =
          "row " + std::to_string(row) + ", column '" + std::string(header[col]) + "'";
      if (!v) throw DataError(source + ": non-numeric value '" + std::string(cells[col]) + "' at " + where);
      if (!std::isfinite(*v)) throw DataError(source + ": non-finite value at " + where);
      return *v;
    };
    for (std::size_t j = 1; j <= d; ++j) xs.push_back(number(x_cols[j]));
    const double yv = number(*y_col);
    if (yv != 0.0 && yv != 1.0) {
      throw DataError(source + ": non-binary y value '" + std::string(cells[*y_col]) + "' at row " +
                      std::to_string(row) + ", column '" + schema.y_column + "'");
    }
    ys.push_back(static_cast<std::uint8_t>(yv));
    zs.push_back(number(*z_col));
  }
  if (row < 2) {
    throw DataError(source + ": need at least 2 data rows, found " + std::to_string(row));
  }
  return Dataset(std::move(xs), d, std::move(ys), std::move(zs));
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, schema, path);
}

inline void write_csv(std::ostream& out, const Dataset& ds, const CsvSchema& schema = {}) {
  for (std::size_t j = 1; j <= ds.dim(); ++j) out << schema.x_prefix << j << ',';
  out << schema.y_column << ',' << schema.z_column << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) out << detail::format_double(ds.x(i, j)) << ',';
    out << ds.y(i) << ',' << detail::format_double(ds.z(i)) << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& ds, const CsvSchema& schema = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, ds, schema);
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace sitest
