#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <spdlog/spdlog.h>

#include "paae/core/matrix.hpp"
#include "paae/data/delimited.hpp"
#include "paae/error.hpp"

namespace paae {

/// How stored values relate to linear expression.
struct ValueScale {
  // kNormalized marks z-scored or percentile values, which have no linear
  // interpretation.
  enum class Kind { kLog2Plus1, kLog2PlusOffset, kLinear, kNormalized };
  Kind kind = Kind::kLog2Plus1;
  double offset = 1.0;  // c in log2(x + c); 1 for kLog2Plus1

  static ValueScale log2_plus1() { return {Kind::kLog2Plus1, 1.0}; }
  static ValueScale log2_plus_offset(double c) { return {Kind::kLog2PlusOffset, c}; }
  static ValueScale linear() { return {Kind::kLinear, 0.0}; }
  static ValueScale normalized() { return {Kind::kNormalized, 0.0}; }

  bool is_log() const noexcept {
    return kind == Kind::kLog2Plus1 || kind == Kind::kLog2PlusOffset;
  }

  double to_linear(double v) const {
    if (kind == Kind::kNormalized)
      throw DataError("normalized values have no linear-scale interpretation");
    return is_log() ? std::exp2(v) - offset : v;
  }
  double from_linear(double x) const { return is_log() ? std::log2(x + offset) : x; }

  std::string name() const {
    switch (kind) {
      case Kind::kLog2Plus1: return "log2_plus1";
      case Kind::kLog2PlusOffset: return "log2_plus_offset(" + std::to_string(offset) + ")";
      case Kind::kLinear: return "linear";
      case Kind::kNormalized: return "normalized";
    }
    return "?";
  }
  friend bool operator==(const ValueScale&, const ValueScale&) = default;
};

/// Parses "log2_plus1", "linear" or "log2_plus_offset:<c>".
inline ValueScale parse_value_scale(const std::string& s) {
  if (s == "log2_plus1") return ValueScale::log2_plus1();
  if (s == "linear") return ValueScale::linear();
  const std::string prefix = "log2_plus_offset:";
  if (s.rfind(prefix, 0) == 0) {
    const double c = parse_real(s.substr(prefix.size()), "scale offset");
    if (!(c > 0.0)) throw ConfigError("log2 offset must be > 0");
    return ValueScale::log2_plus_offset(c);
  }
  throw ConfigError("unknown value scale '" + s +
                    "' (expected log2_plus1, linear or log2_plus_offset:<c>)");
}

/// Samples × genes expression matrix.
struct ExpressionTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> gene_names;
  Matrix values;
  ValueScale scale;

  std::size_t sample_count() const noexcept { return sample_ids.size(); }
  std::size_t gene_count() const noexcept { return gene_names.size(); }

  void validate() const {
    if (values.rows() != sample_ids.size() || values.cols() != gene_names.size())
      throw ShapeError("expression table: values " + values.shape_string() + " but " +
                       std::to_string(sample_ids.size()) + " samples and " +
                       std::to_string(gene_names.size()) + " genes");
    std::set<std::string> seen;
    for (const auto& s : sample_ids)
      if (!seen.insert(s).second) throw DataError("duplicate sample id '" + s + "'");
    if (!values.all_finite()) throw DataError("expression table contains non-finite values");
  }

  std::size_t gene_index(const std::string& name) const {
    for (std::size_t i = 0; i < gene_names.size(); ++i)
      if (gene_names[i] == name) return i;
    throw DataError("gene '" + name + "' not in table");
  }

  friend bool operator==(const ExpressionTable&, const ExpressionTable&) = default;
};

enum class Orientation { kGenesAsRows, kSamplesAsRows };

inline Orientation parse_orientation(const std::string& s) {
  if (s == "genes_as_rows") return Orientation::kGenesAsRows;
  if (s == "samples_as_rows") return Orientation::kSamplesAsRows;
  throw ConfigError("unknown orientation '" + s +
                    "' (expected genes_as_rows or samples_as_rows)");
}

/// Reads a delimited matrix whose first row and first column hold identifiers.
inline ExpressionTable load_expression_tsv(const std::filesystem::path& path,
                                           Orientation orientation,
                                           ValueScale scale = ValueScale::log2_plus1()) {
  auto rows = read_delimited(path);
  if (rows.empty()) throw ParseError(path.string() + ": empty file");
  const auto& header = rows.front();
  const std::size_t width = header.fields.size();
  if (width < 2) throw ParseError(location(path, header.line) + ": header has no data columns");

  std::vector<std::string> col_ids(header.fields.begin() + 1, header.fields.end());
  std::vector<std::string> row_ids;
  std::vector<double> vals;
  vals.reserve((rows.size() - 1) * (width - 1));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != width)
      throw ParseError(location(path, row.line) + ": ragged row '" + row.fields[0] + "' has " +
                       std::to_string(row.fields.size()) + " fields, header has " +
                       std::to_string(width));
    row_ids.push_back(row.fields[0]);
    for (std::size_t c = 1; c < width; ++c)
      vals.push_back(parse_real(row.fields[c], location(path, row.line) + " column " +
                                                   std::to_string(c + 1)));
  }

  ExpressionTable t;
  t.scale = scale;
  Matrix m(row_ids.size(), col_ids.size(), std::move(vals));
  if (orientation == Orientation::kGenesAsRows) {
    t.gene_names = std::move(row_ids);
    t.sample_ids = std::move(col_ids);
    t.values = m.transpose();
  } else {
    t.sample_ids = std::move(row_ids);
    t.gene_names = std::move(col_ids);
    t.values = std::move(m);
  }
  std::set<std::string> seen;
  for (const auto& s : t.sample_ids)
    if (!seen.insert(s).second)
      throw ParseError(path.string() + ": duplicate sample id '" + s + "'");
  return t;
}

/// Writes samples as rows, genes as columns, values at full round-trip precision.
inline void write_expression_tsv(const std::filesystem::path& path, const ExpressionTable& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const char d = delimiter_for(path);
  out << "sample";
  for (const auto& g : t.gene_names) out << d << g;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < t.sample_count(); ++r) {
    out << t.sample_ids[r];
    for (std::size_t c = 0; c < t.gene_count(); ++c) out << d << t.values(r, c);
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

inline ExpressionTable select_samples(const ExpressionTable& t,
                                      const std::vector<std::size_t>& rows) {
  ExpressionTable out;
  out.gene_names = t.gene_names;
  out.scale = t.scale;
  out.values = select_rows(t.values, rows);
  for (std::size_t r : rows) out.sample_ids.push_back(t.sample_ids[r]);
  return out;
}

inline ExpressionTable select_genes(const ExpressionTable& t,
                                    const std::vector<std::size_t>& cols) {
  ExpressionTable out;
  out.sample_ids = t.sample_ids;
  out.scale = t.scale;
  out.values = select_columns(t.values, cols);
  for (std::size_t c : cols) out.gene_names.push_back(t.gene_names[c]);
  return out;
}

/// Two-column id → name table. A header row is read as one more entry, which
/// only matters if a gene id equals the header's first field.
inline std::unordered_map<std::string, std::string> load_gene_mapping(
    const std::filesystem::path& path) {
  auto rows = read_delimited(path);
  std::unordered_map<std::string, std::string> mapping;
  for (const auto& row : rows) {
    if (row.fields.size() < 2)
      throw ParseError(location(path, row.line) + ": expected two columns");
    if (row.fields[1].empty()) continue;
    mapping.emplace(row.fields[0], row.fields[1]);
  }
  return mapping;
}

/// Renames the gene axis; unmapped ids are dropped. Several ids may map to
/// the same name; those columns are kept for merge_duplicate_genes.
inline ExpressionTable map_gene_ids(const ExpressionTable& t,
                                    const std::unordered_map<std::string, std::string>& mapping,
                                    std::size_t* dropped_out = nullptr) {
  std::vector<std::size_t> keep;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < t.gene_count(); ++c) {
    auto it = mapping.find(t.gene_names[c]);
    if (it == mapping.end()) continue;
    keep.push_back(c);
    names.push_back(it->second);
  }
  const std::size_t dropped = t.gene_count() - keep.size();
  if (dropped_out) *dropped_out = dropped;
  if (dropped > 0) spdlog::info("gene mapping dropped {} unmapped ids", dropped);
  if (keep.empty()) throw DataError("gene mapping left no genes");
  ExpressionTable out = select_genes(t, keep);
  out.gene_names = std::move(names);
  return out;
}

/// Averages duplicate gene columns in linear space: log2(mean(2^v − c) + c).
/// Output keeps each gene at its first occurrence.
inline ExpressionTable merge_duplicate_genes(const ExpressionTable& t) {
  if (!t.scale.is_log())
    throw DataError("merge_duplicate_genes requires a log-scaled table, got " + t.scale.name());
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t c = 0; c < t.gene_count(); ++c) {
    auto [it, inserted] = groups.try_emplace(t.gene_names[c]);
    if (inserted) order.push_back(t.gene_names[c]);
    it->second.push_back(c);
  }
  if (order.size() == t.gene_count()) return t;

  ExpressionTable out;
  out.sample_ids = t.sample_ids;
  out.scale = t.scale;
  out.gene_names = order;
  out.values = Matrix(t.sample_count(), order.size());
  for (std::size_t g = 0; g < order.size(); ++g) {
    const auto& cols = groups[order[g]];
    for (std::size_t r = 0; r < t.sample_count(); ++r) {
      if (cols.size() == 1) {
        out.values(r, g) = t.values(r, cols[0]);
        continue;
      }
      double acc = 0.0;
      for (std::size_t c : cols) acc += t.scale.to_linear(t.values(r, c));
      out.values(r, g) = t.scale.from_linear(acc / static_cast<double>(cols.size()));
    }
  }
  return out;
}

/// Restricts both tables to their common genes, in `a`'s order.
inline std::pair<ExpressionTable, ExpressionTable> intersect_genes(const ExpressionTable& a,
                                                                   const ExpressionTable& b) {
  std::unordered_map<std::string, std::size_t> b_index;
  for (std::size_t c = 0; c < b.gene_count(); ++c) b_index.emplace(b.gene_names[c], c);
  std::vector<std::size_t> keep_a, keep_b;
  for (std::size_t c = 0; c < a.gene_count(); ++c) {
    auto it = b_index.find(a.gene_names[c]);
    if (it == b_index.end()) continue;
    keep_a.push_back(c);
    keep_b.push_back(it->second);
  }
  if (keep_a.empty()) throw DataError("gene intersection is empty");
  return {select_genes(a, keep_a), select_genes(b, keep_b)};
}

/// Values converted to linear space.
inline ExpressionTable to_linear(const ExpressionTable& t) {
  ExpressionTable out = t;
  for (double& v : out.values.values()) v = t.scale.to_linear(v);
  out.scale = ValueScale::linear();
  return out;
}

/// Values converted from linear space to log2(x + 1).
inline ExpressionTable to_log2_plus1(const ExpressionTable& t) {
  ExpressionTable out = to_linear(t);
  for (double& v : out.values.values()) v = std::log2(v + 1.0);
  out.scale = ValueScale::log2_plus1();
  return out;
}

namespace detail {
inline ExpressionTable per_million_log(const ExpressionTable& t, const char* what) {
  ExpressionTable lin = to_linear(t);
  for (std::size_t r = 0; r < lin.sample_count(); ++r) {
    auto row = lin.values.row(r);
    double total = 0.0;
    for (double v : row) total += v;
    if (!(total > 0.0))
      throw DataError(std::string(what) + ": sample '" + lin.sample_ids[r] +
                      "' has a non-positive total; cannot normalize per million");
    for (double& v : row) v = v * 1e6 / total;
  }
  return lin;
}
}  // namespace detail

/// Per-sample parts-per-million in linear space (scale tag: linear).
inline ExpressionTable per_million_linear(const ExpressionTable& t) {
  return detail::per_million_log(t, "per_million");
}

/// log2(FPKM+1) → log2(TPM+1).
inline ExpressionTable fpkm_to_tpm_log(const ExpressionTable& t) {
  return to_log2_plus1(detail::per_million_log(t, "fpkm_to_tpm_log"));
}

/// log2(intensity+1) → log2(IPM+1), IPM_g = I_g·10⁶ / Σ_g I_g.
inline ExpressionTable intensity_to_ipm_log(const ExpressionTable& t) {
  return to_log2_plus1(detail::per_million_log(t, "intensity_to_ipm_log"));
}

}  // namespace paae
