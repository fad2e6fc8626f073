#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "paae/error.hpp"

namespace paae {

struct DelimitedRow {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

/// ',' for .csv files, '\t' otherwise.
inline char delimiter_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? ',' : '\t';
}

inline std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

/// Reads a delimited text file. Blank lines and lines starting with '#' are
/// skipped; trailing '\r' is stripped.
inline std::vector<DelimitedRow> read_delimited(const std::filesystem::path& path,
                                                char delim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<DelimitedRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    rows.push_back({lineno, split_fields(line, delim)});
  }
  return rows;
}

inline std::vector<DelimitedRow> read_delimited(const std::filesystem::path& path) {
  return read_delimited(path, delimiter_for(path));
}

/// Strict finite-real parse; the whole field must be consumed.
inline double parse_real(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"')) s.remove_suffix(1);
  if (s.empty()) throw ParseError(where + ": empty numeric cell");
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(where + ": not a finite number: '" + std::string(s) + "'");
  return v;
}

inline std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace paae
