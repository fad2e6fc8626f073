#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"
#include "paae/models/model.hpp"

namespace paae {

/// Product of a pathway encoder's weight matrices, W_1·W_2·…·W_k, as a
/// vector over the pathway's genes. The final width must be 1.
inline std::vector<double> neural_path_weights(const LayerStack& encoder) {
  if (encoder.empty()) throw InvalidArgument("neural_path_weights: empty encoder");
  Matrix p = encoder.front().W;
  for (std::size_t i = 1; i < encoder.size(); ++i) {
    if (p.cols() != encoder[i].W.rows())
      throw ShapeError("neural_path_weights: layer " + std::to_string(i) + " expects " +
                       std::to_string(encoder[i].W.rows()) + " inputs, previous yields " +
                       std::to_string(p.cols()));
    p = matmul(p, encoder[i].W);
  }
  if (p.cols() != 1)
    throw ShapeError("neural_path_weights: final width is " + std::to_string(p.cols()) +
                     ", expected 1");
  return p.column(0);
}

inline std::vector<double> anpw(std::vector<double> npw) {
  for (double& v : npw) v = std::abs(v);
  return npw;
}

struct GeneWeight {
  std::string gene;
  double npw = 0.0;  // signed
};

/// "ST3GAL3 +0.62"
inline std::string format_gene_weight(const GeneWeight& g, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f", digits, g.npw);
  return g.gene + " " + buf;
}

/// Genes of pathway `j` ranked by |NPW| descending, ties by gene name.
inline std::vector<GeneWeight> top_genes_by_anpw(const Model& model, std::size_t j,
                                                 std::size_t k = 10) {
  if (j >= model.masks.size())
    throw InvalidArgument("top_genes_by_anpw: pathway index " + std::to_string(j) +
                          " out of range");
  const auto npw = neural_path_weights(model.params.pathway_encoders[j]);
  const auto& cols = model.masks[j].columns;
  std::vector<GeneWeight> genes;
  for (std::size_t i = 0; i < cols.size(); ++i)
    genes.push_back({model.gene_names.at(cols[i]), npw[i]});
  std::sort(genes.begin(), genes.end(), [](const GeneWeight& a, const GeneWeight& b) {
    const double x = std::abs(a.npw), y = std::abs(b.npw);
    return x != y ? x > y : a.gene < b.gene;
  });
  if (k > genes.size()) {
    spdlog::warn("top_genes_by_anpw: k={} exceeds pathway '{}' size {}; clamped", k,
                 model.masks[j].name, genes.size());
    k = genes.size();
  }
  genes.resize(k);
  return genes;
}

}  // namespace paae
