#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "paae/data/delimited.hpp"
#include "paae/error.hpp"
#include "paae/models/arch.hpp"

namespace paae {

struct Pathway {
  std::string name;
  std::vector<std::string> genes;
  friend bool operator==(const Pathway&, const Pathway&) = default;
};

/// Named gene lists in file order.
struct PathwaySet {
  std::vector<Pathway> pathways;
  std::size_t size() const noexcept { return pathways.size(); }
  bool empty() const noexcept { return pathways.empty(); }
  friend bool operator==(const PathwaySet&, const PathwaySet&) = default;
};

/// GMT: `name<TAB>description<TAB>gene…` per line.
inline PathwaySet parse_gmt(const std::filesystem::path& path) {
  PathwaySet set;
  std::set<std::string> names;
  for (const auto& row : read_delimited(path, '\t')) {
    if (row.fields.size() < 3)
      throw ParseError(location(path, row.line) + ": GMT line needs name, description and "
                       "at least one gene");
    Pathway p{row.fields[0], {}};
    for (std::size_t i = 2; i < row.fields.size(); ++i)
      if (!row.fields[i].empty()) p.genes.push_back(row.fields[i]);
    if (p.name.empty()) throw ParseError(location(path, row.line) + ": empty set name");
    if (p.genes.empty())
      throw ParseError(location(path, row.line) + ": set '" + p.name + "' lists no genes");
    if (!names.insert(p.name).second)
      throw ParseError(location(path, row.line) + ": duplicate set name '" + p.name + "'");
    set.pathways.push_back(std::move(p));
  }
  return set;
}

/// MSigDB JSON export: `{ "SET": { "geneSymbols": [...], ... }, ... }`.
inline PathwaySet parse_msigdb_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(path.string() + ": top level must be an object");
  PathwaySet set;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& body = it.value();
    if (!body.is_object() || !body.contains("geneSymbols") || !body["geneSymbols"].is_array())
      throw ParseError(path.string() + ": set '" + it.key() + "' has no geneSymbols array");
    Pathway p{it.key(), {}};
    for (const auto& g : body["geneSymbols"]) {
      if (!g.is_string())
        throw ParseError(path.string() + ": set '" + it.key() + "' has a non-string gene");
      if (!g.get<std::string>().empty()) p.genes.push_back(g.get<std::string>());
    }
    if (p.genes.empty())
      throw ParseError(path.string() + ": set '" + it.key() + "' lists no genes");
    set.pathways.push_back(std::move(p));
  }
  return set;
}

/// Dispatches on extension: .json → MSigDB JSON, anything else → GMT.
inline PathwaySet load_pathways(const std::filesystem::path& path,
                                const std::string& format = "auto") {
  if (format == "json" || (format == "auto" && path.extension() == ".json"))
    return parse_msigdb_json(path);
  if (format == "gmt" || format == "auto") return parse_gmt(path);
  throw ConfigError("unknown pathway format '" + format + "' (expected gmt, json or auto)");
}

struct PathwayResolution {
  struct Entry {
    std::string name;
    std::size_t present = 0;
    std::size_t missing = 0;
  };
  std::vector<PathwayMask> masks;
  std::vector<Entry> entries;               // one per input pathway
  std::vector<std::string> dropped;         // pathways with no present gene
};

/// Resolves gene symbols to column indices of `gene_names`. Missing genes
/// are counted; pathways with none present are dropped with a warning.
inline PathwayResolution resolve_pathways(const PathwaySet& set,
                                          const std::vector<std::string>& gene_names) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < gene_names.size(); ++i) index.emplace(gene_names[i], i);
  PathwayResolution r;
  for (const auto& p : set.pathways) {
    PathwayResolution::Entry e{p.name, 0, 0};
    PathwayMask mask{p.name, {}};
    std::set<std::size_t> seen;
    for (const auto& g : p.genes) {
      auto it = index.find(g);
      if (it == index.end()) {
        ++e.missing;
        continue;
      }
      if (seen.insert(it->second).second) mask.columns.push_back(it->second);
    }
    e.present = mask.columns.size();
    r.entries.push_back(e);
    if (mask.columns.empty()) {
      spdlog::warn("pathway '{}' has none of its {} genes in the table; dropped", p.name,
                   p.genes.size());
      r.dropped.push_back(p.name);
      continue;
    }
    r.masks.push_back(std::move(mask));
  }
  if (r.masks.empty())
    throw ConfigError("no pathway has any gene present in the expression table");
  return r;
}

}  // namespace paae
