#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "paae/data/delimited.hpp"
#include "paae/data/expression.hpp"
#include "paae/error.hpp"

namespace paae {

/// Sample → class label, in file order.
struct LabelTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> labels;
  std::vector<std::string> vocabulary;  // sorted distinct labels

  std::size_t size() const noexcept { return sample_ids.size(); }
};

namespace detail {

inline std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                               const std::filesystem::path& path) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  std::string avail;
  for (const auto& h : header) avail += (avail.empty() ? "" : ", ") + h;
  throw ParseError(path.string() + ": column '" + name + "' not found; available: " + avail);
}

inline std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && issp(s[i])) ++i;
  return s.substr(i);
}

}  // namespace detail

inline std::vector<std::string> make_vocabulary(const std::vector<std::string>& labels) {
  std::set<std::string> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

/// Reads `column` of a delimited clinical file. The sample id is taken from
/// `id_column` (first column when empty). Empty labels and labels listed in
/// `drop_values` are removed.
inline LabelTable load_labels(const std::filesystem::path& path, const std::string& column,
                              const std::set<std::string>& drop_values = {},
                              const std::string& id_column = "") {
  auto rows = read_delimited(path);
  if (rows.empty()) throw ParseError(path.string() + ": empty label file");
  const auto& header = rows.front().fields;
  const std::size_t col = detail::find_column(header, column, path);
  const std::size_t id = id_column.empty() ? 0 : detail::find_column(header, id_column, path);
  LabelTable t;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != header.size())
      throw ParseError(location(path, rows[r].line) + ": ragged row");
    std::string label = detail::trim(f[col]);
    if (label.empty() || drop_values.count(label)) continue;
    if (!seen.insert(f[id]).second)
      throw ParseError(location(path, rows[r].line) + ": duplicate sample id '" + f[id] + "'");
    t.sample_ids.push_back(f[id]);
    t.labels.push_back(std::move(label));
  }
  t.vocabulary = make_vocabulary(t.labels);
  return t;
}

/// Keeps the samples of `table` that carry a label, in table order, and
/// returns the aligned labels.
inline std::pair<ExpressionTable, std::vector<std::string>> align_labels(
    const ExpressionTable& table, const LabelTable& labels) {
  std::map<std::string, std::string> lookup;
  for (std::size_t i = 0; i < labels.size(); ++i)
    lookup.emplace(labels.sample_ids[i], labels.labels[i]);
  std::vector<std::size_t> rows;
  std::vector<std::string> aligned;
  for (std::size_t r = 0; r < table.sample_count(); ++r) {
    auto it = lookup.find(table.sample_ids[r]);
    if (it == lookup.end()) continue;
    rows.push_back(r);
    aligned.push_back(it->second);
  }
  if (rows.empty()) throw DataError("no sample of the expression table has a label");
  return {select_samples(table, rows), std::move(aligned)};
}

struct SurvivalRecord {
  double time = 0.0;   // days
  bool event = false;  // true = death observed
  friend bool operator==(const SurvivalRecord&, const SurvivalRecord&) = default;
};

struct SurvivalTable {
  std::vector<std::string> sample_ids;
  std::vector<SurvivalRecord> records;
  std::size_t size() const noexcept { return records.size(); }
};

/// Accepts 1/0, true/false, dead/alive, deceased/living and cBioPortal's
/// "1:DECEASED" / "0:LIVING".
inline bool parse_event(std::string s, const std::string& where) {
  s = detail::trim(s);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (auto colon = s.find(':'); colon != std::string::npos) s = s.substr(0, colon);
  if (s == "1" || s == "true" || s == "dead" || s == "deceased") return true;
  if (s == "0" || s == "false" || s == "alive" || s == "living") return false;
  throw ParseError(where + ": unrecognized event value '" + s + "'");
}

/// Reads time/event columns; rows with an empty time or event are skipped.
/// `time_scale` converts the file's unit to days (30.4375 for months).
inline SurvivalTable load_survival(const std::filesystem::path& path,
                                   const std::string& time_column,
                                   const std::string& event_column,
                                   const std::string& id_column = "", double time_scale = 1.0) {
  auto rows = read_delimited(path);
  if (rows.empty()) throw ParseError(path.string() + ": empty survival file");
  const auto& header = rows.front().fields;
  const std::size_t tc = detail::find_column(header, time_column, path);
  const std::size_t ec = detail::find_column(header, event_column, path);
  const std::size_t id = id_column.empty() ? 0 : detail::find_column(header, id_column, path);
  SurvivalTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != header.size())
      throw ParseError(location(path, rows[r].line) + ": ragged row");
    if (detail::trim(f[tc]).empty() || detail::trim(f[ec]).empty()) continue;
    const std::string where = location(path, rows[r].line);
    SurvivalRecord rec{parse_real(f[tc], where) * time_scale, parse_event(f[ec], where)};
    if (rec.time < 0.0) throw ParseError(where + ": negative survival time");
    t.sample_ids.push_back(f[id]);
    t.records.push_back(rec);
  }
  return t;
}

}  // namespace paae
