#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "paae/cli/config.hpp"
#include "paae/cli/report.hpp"
#include "paae/data/clinical.hpp"
#include "paae/data/expression.hpp"
#include "paae/data/pathways.hpp"
#include "paae/interpret/cluster.hpp"
#include "paae/interpret/npw.hpp"
#include "paae/interpret/pca.hpp"
#include "paae/interpret/plots.hpp"
#include "paae/interpret/ranking.hpp"
#include "paae/interpret/survival.hpp"
#include "paae/models/checkpoint.hpp"
#include "paae/pipeline/experiment.hpp"
#include "paae/pipeline/synth.hpp"

namespace paae {

/// Output file names inside the run directory.
struct RunFiles {
  static constexpr const char* kCheckpoint = "model.ckpt";
  static constexpr const char* kLossHistory = "loss_history.csv";
  static constexpr const char* kGridReport = "grid_report.csv";
  static constexpr const char* kBestCell = "best_cell.json";
  static constexpr const char* kReportJson = "run_report.json";
  static constexpr const char* kSummaryTable = "summary_table.csv";
  static constexpr const char* kManifest = "manifest.json";
  static constexpr const char* kSynthConfig = "config.ini";
};

/// Inputs after gene mapping, duplicate merging, gene intersection and
/// label alignment. Values are still on the file's scale.
struct LoadedInputs {
  ExpressionTable train, test;
  std::vector<std::string> vocabulary;
  std::vector<std::size_t> y_train, y_test;
  std::vector<PathwayMask> masks;
};

namespace detail {

inline ExpressionTable load_table(const ExperimentConfig& c, const std::filesystem::path& path) {
  ExpressionTable t = load_expression_tsv(
      path, c.data.orientation == "genes" ? Orientation::kGenesAsRows : Orientation::kSamplesAsRows,
      parse_value_scale(c.data.scale));
  if (!c.data.gene_mapping.empty()) t = map_gene_ids(t, load_gene_mapping(c.data.gene_mapping));
  return merge_duplicate_genes(t);
}

inline std::vector<std::string> aligned_labels(const ExperimentConfig& c, ExpressionTable& t,
                                               const std::filesystem::path& path) {
  LabelTable l = load_labels(path, c.data.label_column, c.data.drop_labels, c.data.label_id_column);
  auto [kept, labels] = align_labels(t, l);
  if (kept.sample_count() < t.sample_count())
    spdlog::info("{}: {} of {} samples carry a label", path.filename().string(),
                 kept.sample_count(), t.sample_count());
  t = std::move(kept);
  return labels;
}

}  // namespace detail

inline LoadedInputs load_inputs(const ExperimentConfig& c, const Needs& n) {
  LoadedInputs in;
  in.train = detail::load_table(c, c.data.train_expression);
  const bool with_test = n.test || !c.data.test_expression.empty();
  if (with_test) {
    in.test = detail::load_table(c, c.data.test_expression);
    auto [a, b] = intersect_genes(in.train, in.test);
    spdlog::info("gene intersection: {} genes (train {}, test {})", a.gene_count(),
                 in.train.gene_count(), in.test.gene_count());
    in.train = std::move(a);
    in.test = std::move(b);
  }
  if (n.labels) {
    EncodedLabels tr = encode_labels(detail::aligned_labels(c, in.train, c.data.train_labels));
    in.vocabulary = tr.vocabulary;
    in.y_train = tr.y;
    if (with_test) in.y_test = encode_labels(detail::aligned_labels(c, in.test, c.data.test_labels),
                                             in.vocabulary).y;
  }
  if (is_pathway(c.cell.arch.kind)) {
    PathwayResolution r = resolve_pathways(load_pathways(c.pathway_file, c.pathway_format),
                                           in.train.gene_names);
    if (r.masks.empty()) throw DataError("no pathway has a gene in the expression table");
    spdlog::info("{} pathways resolved, {} dropped", r.masks.size(), r.dropped.size());
    in.masks = std::move(r.masks);
  }
  return in;
}

/// Records the files a command wrote and maintains manifest.json, which
/// lists every file in the run directory and the hash of each command's
/// effective config.
class RunOutput {
 public:
  RunOutput(std::filesystem::path dir, std::string command, const ExperimentConfig& c)
      : dir_(std::move(dir)), command_(std::move(command)), hash_(fnv1a_hex(canonical_config(c))) {
    std::filesystem::create_directories(dir_);
  }

  std::filesystem::path path(const std::string& name) const { return dir_ / name; }
  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path add(const std::filesystem::path& p) {
    files_.insert(std::filesystem::relative(p, dir_).generic_string());
    return p;
  }

  void write_manifest() const {
    const auto mpath = dir_ / RunFiles::kManifest;
    nlohmann::json m;
    if (std::filesystem::exists(mpath)) {
      try {
        m = nlohmann::json::parse(detail::read_text(mpath));
      } catch (const nlohmann::json::exception&) {
        m = nlohmann::json::object();
      }
    }
    m["commands"][command_] = {{"config_hash", hash_}, {"files", files_}};
    std::set<std::string> all;
    for (const auto& [name, entry] : m["commands"].items())
      for (const auto& f : entry["files"])
        if (std::filesystem::exists(dir_ / f.get<std::string>())) all.insert(f.get<std::string>());
    m["config_hash"] = hash_;
    m["files"] = all;
    detail::write_text(mpath, m.dump(2) + "\n");
  }

 private:
  std::filesystem::path dir_;
  std::string command_, hash_;
  std::set<std::string> files_;
};

/// Writes the synthetic fixture and a config that points at it.
inline std::vector<std::filesystem::path> cmd_synth(const SynthConfig& sc,
                                                    const std::filesystem::path& dir) {
  sc.validate();
  SynthData d = generate_synthetic(sc);
  auto files = write_synthetic(d, dir);
  std::ostringstream ini;
  ini << "[data]\ntrain_expression = " << SynthFiles::kTrainExpression
      << "\ntrain_labels = " << SynthFiles::kTrainLabels
      << "\ntest_expression = " << SynthFiles::kTestExpression
      << "\ntest_labels = " << SynthFiles::kTestLabels
      << "\nsurvival = " << SynthFiles::kTrainSurvival
      << "\nlabel_column = subtype\n\n[pathways]\nfile = " << SynthFiles::kPathways
      << "\nlabel = SYN\n\n[run]\ndataset = synthetic\nseed = " << sc.seed << "\n";
  files.push_back(dir / RunFiles::kSynthConfig);
  detail::write_text(files.back(), ini.str());
  spdlog::info("synthetic fixture written to {}", dir.string());
  return files;
}

/// Fits the configured model on the normalized training table and writes
/// the checkpoint and the per-epoch loss.
inline Model cmd_train(const ExperimentConfig& c) {
  const Needs needs{};
  validate_config(c, needs);
  LoadedInputs in = load_inputs(c, needs);
  const Matrix x = apply_normalizer(fit_normalizer(in.train, c.normalization.kind,
                                                   c.normalization.log_offset),
                                    in.train).values;
  Rng rng(c.seed);
  Model model = build_model(c.cell.arch, x.cols(), in.masks, rng);
  model.gene_names = in.train.gene_names;
  spdlog::info("training {} ({} parameters) on {} samples x {} genes for {} epochs",
               to_string(c.cell.arch.kind), count_params(model.params), x.rows(), x.cols(),
               c.cell.train.epochs);
  FitResult fr = fit(model, x, c.cell.train, rng);

  RunOutput out(c.output_dir, "train", c);
  save_checkpoint(out.add(out.path(RunFiles::kCheckpoint)), model);
  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < fr.loss_history.size(); ++e) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", fr.loss_history[e]);
    csv << e << ',' << b << '\n';
  }
  detail::write_text(out.add(out.path(RunFiles::kLossHistory)), csv.str());
  out.write_manifest();
  if (!fr.loss_history.empty()) spdlog::info("final training loss {}", fr.loss_history.back());
  return model;
}

inline CvResult cmd_gridsearch(const ExperimentConfig& c) {
  const Needs needs{true, false, false};
  validate_config(c, needs);
  GridSpec grid = c.grid;
  grid.base = c.cell;
  for (const auto& cell : enumerate_grid(grid)) cell.validate();
  LoadedInputs in = load_inputs(c, needs);
  Dataset data{in.train, in.y_train, in.vocabulary};
  spdlog::info("grid search: {} cells x {} folds", enumerate_grid(grid).size(), grid.folds);
  CvResult res = cross_validate(data, in.masks, grid, c.seed, c.normalization, c.threads);
  RunOutput out(c.output_dir, "gridsearch", c);
  detail::write_text(out.add(out.path(RunFiles::kGridReport)), grid_csv(res));
  detail::write_text(out.add(out.path(RunFiles::kBestCell)),
                     to_json(res.cells[res.best].cell).dump(2) + "\n");
  out.write_manifest();
  spdlog::info("best cell: {} (mean AUC {:.4f})", res.cells[res.best].cell.describe(),
               res.cells[res.best].mean_auc);
  return res;
}

/// Repeated external validation for each requested space. Writes the
/// reports, then fails with a numeric error if any repeat diverged.
inline std::vector<LabelledReport> cmd_validate(const ExperimentConfig& c) {
  const Needs needs{true, true, false};
  validate_config(c, needs);
  LoadedInputs in = load_inputs(c, needs);
  Dataset train{in.train, in.y_train, in.vocabulary};
  Dataset test{in.test, in.y_test, in.vocabulary};
  std::vector<Space> spaces = c.validate_spaces;
  if (spaces.empty()) spaces.push_back(c.cell.resolved_space());
  std::vector<LabelledReport> reports;
  for (Space s : spaces) {
    Cell cell = c.cell;
    cell.space = s;
    spdlog::info("external validation: {} x {} repeats", cell.describe(), c.repeats);
    reports.push_back({c.pathway_label, external_validate(train, test, in.masks, cell, c.repeats,
                                                          c.seed, c.normalization, c.threads)});
  }
  RunOutput out(c.output_dir, "validate", c);
  write_reports_json(out.add(out.path(RunFiles::kReportJson)), reports);
  std::vector<SummaryRow> rows;
  for (const auto& r : reports) rows.push_back(summary_row(r));
  detail::write_text(out.add(out.path(RunFiles::kSummaryTable)), summary_csv(rows));
  out.write_manifest();

  std::size_t failed = 0, total = 0;
  std::string first;
  for (const auto& r : reports)
    for (const auto& rep : r.report.repeats) {
      ++total;
      if (!rep.diverged) continue;
      if (failed++ == 0) first = rep.error;
    }
  if (failed)
    throw NumericError(std::to_string(failed) + " of " + std::to_string(total) +
                       " repeats diverged (flagged in " + RunFiles::kReportJson + "); first: " + first);
  return reports;
}

namespace detail {

inline Model load_pathway_model(const std::filesystem::path& checkpoint) {
  if (!std::filesystem::is_regular_file(checkpoint))
    throw ConfigError("checkpoint not found: " + checkpoint.string());
  Model m = load_checkpoint(checkpoint);
  if (!is_pathway(m.arch.kind))
    throw ConfigError("pathway space unavailable: checkpoint holds a " + to_string(m.arch.kind) +
                      " model without pathway encoders");
  return m;
}

/// Restricts `t` to the checkpoint's gene axis, in checkpoint order.
inline ExpressionTable match_genes(const ExpressionTable& t, const Model& m) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < t.gene_count(); ++i) index.emplace(t.gene_names[i], i);
  std::vector<std::size_t> cols;
  for (const auto& g : m.gene_names) {
    auto it = index.find(g);
    if (it == index.end())
      throw DataError("gene '" + g + "' of the checkpoint is missing from the expression table");
    cols.push_back(it->second);
  }
  return select_genes(t, cols);
}

inline std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

inline std::string csv_real(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

struct InterpretInputs {
  Model model;
  ExpressionTable raw;  // matched to the model's genes, file scale
  Matrix x;             // normalized
  std::vector<std::size_t> y;
  std::vector<std::string> vocabulary;
};

inline InterpretInputs interpret_inputs(const ExperimentConfig& c,
                                        const std::filesystem::path& checkpoint, bool survival) {
  const bool on_test = c.interpret_split == "test";
  const Needs needs{true, on_test, survival};
  validate_config(c, needs);
  InterpretInputs ii{load_pathway_model(checkpoint), {}, {}, {}, {}};
  ExperimentConfig loader = c;
  loader.cell.arch.kind = ModelKind::kAE;  // the masks come from the checkpoint
  LoadedInputs in = load_inputs(loader, needs);
  ExpressionTable train = match_genes(in.train, ii.model);
  Normalizer n = fit_normalizer(train, c.normalization.kind, c.normalization.log_offset);
  if (on_test) {
    ii.raw = match_genes(in.test, ii.model);
    const Normalizer& tn = c.normalization.refit_on_test
                               ? fit_normalizer(ii.raw, c.normalization.kind, c.normalization.log_offset)
                               : n;
    ii.x = apply_normalizer(tn, ii.raw).values;
    ii.y = in.y_test;
  } else {
    ii.raw = std::move(train);
    ii.x = apply_normalizer(n, ii.raw).values;
    ii.y = in.y_train;
  }
  ii.vocabulary = in.vocabulary;
  return ii;
}

inline std::vector<std::string> pathway_names(const Model& m) {
  std::vector<std::string> names;
  for (const auto& mask : m.masks) names.push_back(mask.name);
  return names;
}

inline ExpressionTable raw_features(const ExperimentConfig& c, const ExpressionTable& t) {
  if (c.raw_renorm == "tpm") return fpkm_to_tpm_log(t);
  if (c.raw_renorm == "ipm") return intensity_to_ipm_log(t);
  return t;
}

}  // namespace detail

struct InterpretSummary {
  std::vector<RankedPathway> ranking;
  std::map<std::string, std::vector<GeneWeight>> top_genes;  // by pathway
  std::vector<std::filesystem::path> files;
};

/// Pathway-space artifacts of a trained pathway model: clustermaps of a and
/// of the latent code, PCA feature maps, the MI ranking and ANPW tables.
inline InterpretSummary cmd_interpret(const ExperimentConfig& c,
                                      const std::filesystem::path& checkpoint) {
  detail::InterpretInputs ii = detail::interpret_inputs(c, checkpoint, false);
  const Model& model = ii.model;
  const Matrix a = extract_representation(model, ii.x, Space::kA);
  const Space latent = default_space(model.arch.kind);
  const Matrix z = extract_representation(model, ii.x, latent);
  const auto names = detail::pathway_names(model);

  InterpretSummary s;
  s.ranking = rank_pathways_by_mi(a, ii.y, names, names.size());
  for (std::size_t j = 0; j < model.masks.size(); ++j)
    s.top_genes[names[j]] = top_genes_by_anpw(model, j, c.top_genes);

  RunOutput out(c.output_dir, "interpret", c);
  ArtifactNaming naming{c.dataset, detail::lower(to_string(model.arch.kind)), "a"};

  std::ostringstream mi;
  mi << "rank,pathway,mi\n";
  for (std::size_t r = 0; r < s.ranking.size(); ++r)
    mi << r + 1 << ',' << s.ranking[r].name << ',' << detail::csv_real(s.ranking[r].mi) << '\n';
  s.files.push_back(out.add(out.path(naming.name("mi_ranking", "csv"))));
  detail::write_text(s.files.back(), mi.str());

  std::ostringstream tab;
  tab << "pathway,rank,gene,npw,anpw,label\n";
  for (const auto& name : names) {
    const auto& genes = s.top_genes[name];
    for (std::size_t r = 0; r < genes.size(); ++r)
      tab << name << ',' << r + 1 << ',' << genes[r].gene << ',' << detail::csv_real(genes[r].npw)
          << ',' << detail::csv_real(std::abs(genes[r].npw)) << ',' << format_gene_weight(genes[r])
          << '\n';
  }
  s.files.push_back(out.add(out.path(naming.name("anpw", "csv"))));
  detail::write_text(s.files.back(), tab.str());

  auto clustermap = [&](const Matrix& values, const std::vector<std::string>& cols,
                        const ArtifactNaming& nm, const std::string& prefix,
                        DistanceMetric metric, bool cluster_rows, const std::string& title) {
    ClustermapInput ci;
    ci.values = &values;
    ci.sample_ids = ii.raw.sample_ids;
    ci.labels = ii.y;
    ci.vocabulary = ii.vocabulary;
    ci.column_names = cols;
    ci.row_tree = cluster_rows ? hierarchical_cluster(values, metric) : unclustered(values.rows());
    ci.col_tree = values.cols() > 1 ? hierarchical_cluster(values.transpose(), metric)
                                    : unclustered(values.cols());
    ci.title = title;
    const auto svg = out.add(out.path(nm.name(prefix, "svg")));
    emit_clustermap(ci, svg);
    auto csv = svg;
    s.files.push_back(svg);
    s.files.push_back(out.add(csv.replace_extension(".csv")));
  };
  clustermap(a, names, naming, "clustermap", c.distance, true,
             "Pathway activities (" + c.dataset + ", " + to_string(model.arch.kind) + ")");
  std::vector<std::string> latent_names;
  for (std::size_t k = 0; k < z.cols(); ++k) latent_names.push_back(to_string(latent) + std::to_string(k + 1));
  ArtifactNaming zn = naming;
  zn.space = to_string(latent);
  clustermap(z, latent_names, zn, "clustermap", c.distance, true,
             "Latent " + to_string(latent) + " (" + c.dataset + ", " + to_string(model.arch.kind) + ")");

  // Raw expression of the top genes of the top pathways, columns clustered
  // by Euclidean distance, samples kept in label order.
  std::vector<std::string> genes;
  std::set<std::string> seen;
  const std::size_t top = std::min(c.top_pathways, s.ranking.size());
  for (std::size_t r = 0; r < top; ++r)
    for (const auto& g : s.top_genes[s.ranking[r].name])
      if (seen.insert(g.gene).second) genes.push_back(g.gene);
  ExpressionTable raw = detail::raw_features(c, ii.raw);
  std::vector<std::size_t> gene_cols, rows(raw.sample_count());
  for (const auto& g : genes) gene_cols.push_back(raw.gene_index(g));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t p, std::size_t q) { return ii.y[p] < ii.y[q]; });
  {
    Matrix g = select_columns(raw.values, gene_cols);
    ClustermapInput ci;
    ci.values = &g;
    ci.sample_ids = raw.sample_ids;
    ci.labels = ii.y;
    ci.vocabulary = ii.vocabulary;
    ci.column_names = genes;
    ci.row_tree.leaf_count = rows.size();
    ci.row_tree.order = rows;
    ci.col_tree = g.cols() > 1 ? hierarchical_cluster(g.transpose(), DistanceMetric::kEuclidean)
                               : unclustered(g.cols());
    ci.title = "Top ANPW genes of the top " + std::to_string(top) + " MI pathways";
    const auto svg = out.add(out.path(naming.name("clustermap_genes", "svg")));
    emit_clustermap(ci, svg);
    auto csv = svg;
    s.files.push_back(svg);
    s.files.push_back(out.add(csv.replace_extension(".csv")));
  }

  Pca2d pa = pca_2d(a);
  FeaturemapInput fa{&pa.coords, &a, ii.y, ii.vocabulary, names, {}};
  for (std::size_t r = 0; r < top; ++r) fa.columns.push_back(s.ranking[r].column);
  for (const auto& f : emit_featuremap(fa, out.dir(), naming)) s.files.push_back(out.add(f));
  Pca2d pz = pca_2d(z);
  FeaturemapInput fz{&pz.coords, nullptr, ii.y, ii.vocabulary, latent_names, {}};
  for (const auto& f : emit_featuremap(fz, out.dir(), zn)) s.files.push_back(out.add(f));

  out.write_manifest();
  spdlog::info("interpretation artifacts: {} files in {}", s.files.size(), out.dir().string());
  return s;
}

struct SurvivalRow {
  std::string pathway, gene;
  double npw = 0.0;
  std::size_t n_low = 0, n_high = 0;
  LogrankResult logrank;
  bool significant = false;
  std::filesystem::path plot;
};

namespace detail {

/// Survival records aligned to the samples of `t`; samples without a
/// record are dropped from both.
inline std::pair<ExpressionTable, std::vector<SurvivalRecord>> align_survival(
    const ExpressionTable& t, const SurvivalTable& s) {
  std::map<std::string, SurvivalRecord> lookup;
  for (std::size_t i = 0; i < s.size(); ++i) lookup.emplace(s.sample_ids[i], s.records[i]);
  std::vector<std::size_t> rows;
  std::vector<SurvivalRecord> recs;
  for (std::size_t r = 0; r < t.sample_count(); ++r) {
    auto it = lookup.find(t.sample_ids[r]);
    if (it == lookup.end()) continue;
    rows.push_back(r);
    recs.push_back(it->second);
  }
  return {select_samples(t, rows), std::move(recs)};
}

}  // namespace detail

/// Tercile split on one gene's expression, windowed logrank test and KM
/// curves of the low and high groups.
inline SurvivalRow survival_for_gene(const std::vector<double>& expression,
                                     const std::vector<SurvivalRecord>& records, double window,
                                     double alpha, KMCurve* low_curve = nullptr,
                                     KMCurve* high_curve = nullptr) {
  SurvivalTable windowed;
  windowed.records = records;
  windowed.sample_ids.resize(records.size());
  windowed = apply_survival_window(windowed, window);
  TercileSplit split = tercile_split(expression);
  const auto low = select_records(windowed.records, split.low);
  const auto high = select_records(windowed.records, split.high);
  SurvivalRow row;
  row.n_low = low.size();
  row.n_high = high.size();
  row.logrank = logrank_test(low, high);
  row.significant = row.logrank.p_value <= alpha;
  if (low_curve) *low_curve = km_estimate(low);
  if (high_curve) *high_curve = km_estimate(high);
  return row;
}

/// Top-MI pathways → top-ANPW genes → tercile KM/logrank per gene on the
/// training set. One SVG per summary row.
inline std::vector<SurvivalRow> cmd_survival(const ExperimentConfig& c,
                                             const std::filesystem::path& checkpoint) {
  ExperimentConfig train_only = c;
  train_only.interpret_split = "train";
  detail::InterpretInputs ii = detail::interpret_inputs(train_only, checkpoint, true);
  const Model& model = ii.model;
  SurvivalTable st = load_survival(c.data.survival, c.data.survival_time_column,
                                   c.data.survival_event_column, c.data.survival_id_column,
                                   c.data.survival_time_scale);

  const Matrix a = extract_representation(model, ii.x, Space::kA);
  const auto names = detail::pathway_names(model);
  const auto ranking = rank_pathways_by_mi(a, ii.y, names, c.top_pathways);
  auto [raw, records] = detail::align_survival(detail::raw_features(c, ii.raw), st);
  if (records.size() < 3)
    throw DataError("survival analysis needs at least 3 samples with survival data, found " +
                    std::to_string(records.size()));
  spdlog::info("survival: {} samples with survival data, window {} days", records.size(),
               c.survival_window);

  RunOutput out(c.output_dir, "survival", c);
  ArtifactNaming naming{c.dataset, detail::lower(to_string(model.arch.kind)), "a"};
  std::vector<SurvivalRow> rows;
  std::set<std::string> seen;
  for (const auto& rp : ranking)
    for (const auto& g : top_genes_by_anpw(model, rp.column, c.top_genes)) {
      if (!seen.insert(g.gene).second) continue;
      KMCurve lo, hi;
      SurvivalRow row = survival_for_gene(raw.values.column(raw.gene_index(g.gene)), records,
                                          c.survival_window, c.survival_alpha, &lo, &hi);
      row.pathway = rp.name;
      row.gene = g.gene;
      row.npw = g.npw;
      row.plot = out.add(out.path(naming.name("km_" + g.gene, "svg")));
      emit_km_plot(lo, hi, g.gene + " (" + rp.name + ")", row.logrank.p_value, c.survival_window,
                   row.plot);
      rows.push_back(std::move(row));
    }

  std::ostringstream csv;
  csv << "pathway,gene,npw,n_low,n_high,statistic,p_value,significant,plot\n";
  std::size_t flagged = 0;
  for (const auto& r : rows) {
    flagged += r.significant;
    csv << r.pathway << ',' << r.gene << ',' << detail::csv_real(r.npw) << ',' << r.n_low << ','
        << r.n_high << ',' << detail::csv_real(r.logrank.statistic) << ','
        << detail::csv_real(r.logrank.p_value) << ',' << (r.significant ? 1 : 0) << ','
        << r.plot.filename().string() << '\n';
  }
  detail::write_text(out.add(out.path(naming.name("survival", "csv"))), csv.str());
  out.write_manifest();
  spdlog::info("survival: {} genes tested, {} with p <= {}", rows.size(), flagged, c.survival_alpha);
  return rows;
}

}  // namespace paae
