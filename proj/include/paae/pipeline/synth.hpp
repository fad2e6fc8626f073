#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "paae/core/matrix.hpp"
#include "paae/core/rng.hpp"
#include "paae/data/clinical.hpp"
#include "paae/data/expression.hpp"
#include "paae/data/pathways.hpp"
#include "paae/error.hpp"

namespace paae {

/// Pathway-structured fixture: class centers in a latent factor space,
/// pathway gene blocks loading on those factors, off-pathway genes that are
/// factor-driven too, plus Gaussian noise. Values are on the log2(x+1) scale.
struct SynthConfig {
  std::size_t classes = 5;
  std::size_t factors = 8;
  std::size_t pathways = 20;
  std::size_t genes = 400;
  std::size_t off_pathway = 150;
  std::size_t train_samples = 600;
  std::size_t test_samples = 400;
  double separation = 1.5;    // sd of class centers per factor
  double noise = 0.5;         // gene-level noise sd
  double test_scale = 1.0;    // test = scale·value + shift
  double test_shift = 0.0;
  double survival_effect = 0.0;  // log-hazard per unit of factor 0
  std::uint64_t seed = 1;

  void validate() const {
    if (classes < 2) throw ConfigError("synth: need at least 2 classes");
    if (factors == 0 || pathways == 0) throw ConfigError("synth: factors and pathways must be >= 1");
    if (off_pathway >= genes) throw ConfigError("synth: off-pathway genes must leave room for pathways");
    if (genes - off_pathway < pathways) throw ConfigError("synth: fewer pathway genes than pathways");
    if (train_samples < classes || test_samples < classes)
      throw ConfigError("synth: need at least one sample per class in each split");
  }
};

struct SynthData {
  ExpressionTable train, test;
  std::vector<std::string> train_labels, test_labels;
  PathwaySet pathways;
  SurvivalTable train_survival, test_survival;
  std::vector<std::size_t> pathway_factor;  // primary factor of each pathway
};

namespace detail {

struct SynthModel {
  std::vector<std::vector<double>> centers;  // class × factor
  std::vector<double> base;                  // per gene
  std::vector<std::size_t> factor;           // per gene
  std::vector<double> loading;               // per gene
  std::vector<std::size_t> secondary;        // per gene
  std::vector<double> secondary_loading;
};

inline void synth_split(const SynthConfig& c, const SynthModel& m, std::size_t n,
                        const std::string& prefix, double scale, double shift, Rng& rng,
                        ExpressionTable& table, std::vector<std::string>& labels,
                        SurvivalTable& survival, const std::vector<std::string>& gene_names) {
  table.gene_names = gene_names;
  table.values = Matrix(n, c.genes);
  table.scale = ValueScale::log2_plus1();
  std::vector<double> f(c.factors);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % c.classes;
    char id[32];
    std::snprintf(id, sizeof id, "%s%04zu", prefix.c_str(), i + 1);
    table.sample_ids.push_back(id);
    labels.push_back("C" + std::to_string(y + 1));
    for (std::size_t k = 0; k < c.factors; ++k) f[k] = m.centers[y][k] + rng.normal();
    for (std::size_t g = 0; g < c.genes; ++g) {
      const double v = m.base[g] + m.loading[g] * f[m.factor[g]] +
                       m.secondary_loading[g] * f[m.secondary[g]] + c.noise * rng.normal();
      table.values(i, g) = std::max(0.0, scale * v + shift);
    }
    const double rate = std::exp(c.survival_effect * f[0]) / 1500.0;
    const double death = -std::log(1.0 - rng.uniform()) / rate;
    const double censor = 3000.0 * rng.uniform();
    survival.sample_ids.push_back(id);
    survival.records.push_back({std::round(std::min(death, censor)), death <= censor});
  }
}

}  // namespace detail

inline SynthData generate_synthetic(const SynthConfig& c) {
  c.validate();
  Rng rng(c.seed);
  detail::SynthModel m;
  m.centers.assign(c.classes, std::vector<double>(c.factors));
  for (auto& row : m.centers)
    for (double& v : row) v = c.separation * rng.normal();

  // Column order is a random permutation; the first `in_pathway` slots of
  // the permutation belong to pathway blocks.
  std::vector<std::size_t> perm(c.genes);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  const std::size_t in_pathway = c.genes - c.off_pathway;
  std::vector<std::string> gene_names(c.genes);
  for (std::size_t g = 0; g < c.genes; ++g) {
    char name[32];
    std::snprintf(name, sizeof name, "GENE%04zu", g + 1);
    gene_names[g] = name;
  }
  m.base.resize(c.genes);
  m.factor.resize(c.genes);
  m.loading.resize(c.genes);
  m.secondary.resize(c.genes);
  m.secondary_loading.resize(c.genes);

  SynthData d;
  d.pathway_factor.resize(c.pathways);
  std::size_t slot = 0;
  for (std::size_t j = 0; j < c.pathways; ++j) {
    const std::size_t size = in_pathway / c.pathways + (j < in_pathway % c.pathways ? 1 : 0);
    char name[32];
    std::snprintf(name, sizeof name, "PATHWAY_%02zu", j + 1);
    Pathway p{name, {}};
    d.pathway_factor[j] = j % c.factors;
    for (std::size_t i = 0; i < size; ++i, ++slot) {
      const std::size_t g = perm[slot];
      p.genes.push_back(gene_names[g]);
      m.factor[g] = j % c.factors;
      m.secondary[g] = (j + 3) % c.factors;
      m.loading[g] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
      m.secondary_loading[g] = 0.3 * rng.normal();
    }
    std::sort(p.genes.begin(), p.genes.end());
    d.pathways.pathways.push_back(std::move(p));
  }
  for (; slot < c.genes; ++slot) {
    const std::size_t g = perm[slot];
    m.factor[g] = static_cast<std::size_t>(rng.below(c.factors));
    m.secondary[g] = static_cast<std::size_t>(rng.below(c.factors));
    m.loading[g] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
    m.secondary_loading[g] = 0.3 * rng.normal();
  }
  for (double& b : m.base) b = 4.0 + 4.0 * rng.uniform();

  detail::synth_split(c, m, c.train_samples, "TR", 1.0, 0.0, rng, d.train, d.train_labels,
                      d.train_survival, gene_names);
  detail::synth_split(c, m, c.test_samples, "TE", c.test_scale, c.test_shift, rng, d.test,
                      d.test_labels, d.test_survival, gene_names);
  return d;
}

inline void write_gmt(const std::filesystem::path& path, const PathwaySet& set) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : set.pathways) {
    out << p.name << "\tsynthetic";
    for (const auto& g : p.genes) out << '\t' << g;
    out << '\n';
  }
}

inline void write_labels(const std::filesystem::path& path, const std::vector<std::string>& ids,
                         const std::vector<std::string>& labels, const std::string& column) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sample\t" << column << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << labels[i] << '\n';
}

inline void write_survival(const std::filesystem::path& path, const SurvivalTable& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sample\tOS_DAYS\tOS_STATUS\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out << t.sample_ids[i] << '\t' << t.records[i].time << '\t'
        << (t.records[i].event ? "1:DECEASED" : "0:LIVING") << '\n';
}

/// Files written by write_synthetic, relative to its directory.
struct SynthFiles {
  static constexpr const char* kTrainExpression = "train_expression.tsv";
  static constexpr const char* kTrainLabels = "train_labels.tsv";
  static constexpr const char* kTestExpression = "test_expression.tsv";
  static constexpr const char* kTestLabels = "test_labels.tsv";
  static constexpr const char* kPathways = "pathways.gmt";
  static constexpr const char* kTrainSurvival = "train_survival.tsv";
  static constexpr const char* kTestSurvival = "test_survival.tsv";
};

inline std::vector<std::filesystem::path> write_synthetic(const SynthData& d,
                                                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files{
      dir / SynthFiles::kTrainExpression, dir / SynthFiles::kTrainLabels,
      dir / SynthFiles::kTestExpression,  dir / SynthFiles::kTestLabels,
      dir / SynthFiles::kPathways,        dir / SynthFiles::kTrainSurvival,
      dir / SynthFiles::kTestSurvival};
  write_expression_tsv(files[0], d.train);
  write_labels(files[1], d.train.sample_ids, d.train_labels, "subtype");
  write_expression_tsv(files[2], d.test);
  write_labels(files[3], d.test.sample_ids, d.test_labels, "subtype");
  write_gmt(files[4], d.pathways);
  write_survival(files[5], d.train_survival);
  write_survival(files[6], d.test_survival);
  return files;
}

}  // namespace paae
