#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "paae/classifiers/forest.hpp"
#include "paae/classifiers/logistic.hpp"
#include "paae/core/parallel.hpp"
#include "paae/core/rng.hpp"
#include "paae/data/expression.hpp"
#include "paae/data/normalize.hpp"
#include "paae/error.hpp"
#include "paae/metrics/metrics.hpp"
#include "paae/models/model.hpp"
#include "paae/models/train.hpp"

namespace paae {

enum class Space { kZ, kMu, kA };

inline Space parse_space(const std::string& s) {
  if (s == "z") return Space::kZ;
  if (s == "mu") return Space::kMu;
  if (s == "a") return Space::kA;
  throw ConfigError("unknown representation space '" + s + "' (expected z, mu or a)");
}

inline std::string to_string(Space s) {
  switch (s) {
    case Space::kZ: return "z";
    case Space::kMu: return "mu";
    case Space::kA: return "a";
  }
  return "?";
}

/// z for deterministic models, μ for variational ones.
inline Space default_space(ModelKind k) { return is_variational(k) ? Space::kMu : Space::kZ; }

inline void check_space(ModelKind k, Space s) {
  if (s == Space::kA && !is_pathway(k))
    throw ConfigError("space a (pathway activities) requires PAAE or PAVAE, got " + to_string(k));
  if (s == Space::kMu && !is_variational(k))
    throw ConfigError("space mu requires VAE or PAVAE, got " + to_string(k));
}

/// Deterministic inference: dropout off, no sampling.
inline Matrix extract_representation(const Model& model, const Matrix& x, Space space) {
  check_space(model.arch.kind, space);
  Rng unused(0);
  if (space == Space::kA) return pathway_activity_forward(model, x, false, unused);
  ForwardOutputs out = forward(model, x, false, unused);
  return space == Space::kMu ? out.mu : out.z;
}

enum class ClassifierKind { kLR, kRF };

inline ClassifierKind parse_classifier_kind(const std::string& s) {
  if (s == "lr" || s == "LR") return ClassifierKind::kLR;
  if (s == "rf" || s == "RF") return ClassifierKind::kRF;
  throw ConfigError("unknown classifier '" + s + "' (expected lr or rf)");
}

inline std::string to_string(ClassifierKind k) { return k == ClassifierKind::kLR ? "LR" : "RF"; }

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::kLR;
  LogisticConfig lr;
  ForestConfig rf;
};

/// Fits the classifier on (x_train, y) and returns class probabilities for x_test.
inline Matrix classify(const ClassifierConfig& c, const Matrix& x_train,
                       const std::vector<std::size_t>& y, const std::vector<std::string>& vocab,
                       const Matrix& x_test, Rng& rng) {
  if (c.kind == ClassifierKind::kLR)
    return lr_predict_proba(lr_fit(x_train, y, vocab, c.lr), x_test);
  return rf_predict_proba(rf_fit(x_train, y, vocab, rng, c.rf), x_test);
}

/// One fully specified experiment: model, training, representation, classifier.
struct Cell {
  ArchitectureConfig arch;
  TrainConfig train;
  std::optional<Space> space;  // unset → default_space(arch.kind)
  ClassifierConfig classifier;

  Space resolved_space() const { return space ? *space : default_space(arch.kind); }
  void validate() const {
    arch.validate();
    train.validate();
    check_space(arch.kind, resolved_space());
    if (!(classifier.lr.C > 0.0)) throw ConfigError("classifier C must be > 0");
    if (classifier.rf.n_trees == 0) throw ConfigError("n_trees must be >= 1");
  }
  std::string describe() const;
};

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  if (v.empty()) return "-";
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace detail

inline std::string Cell::describe() const {
  std::string s = to_string(arch.kind) + " enc=[" + detail::join_sizes(arch.encoder_layer_sizes) + "]";
  if (is_pathway(arch.kind)) s += " pw=[" + detail::join_sizes(arch.pathway_hidden_sizes) + "]";
  if (is_variational(arch.kind)) {
    char b[32];
    std::snprintf(b, sizeof b, "%g", arch.beta);
    s += std::string(" beta=") + b + " sched=" + to_string(arch.schedule);
  }
  return s + " space=" + to_string(resolved_space()) + " clf=" + to_string(classifier.kind);
}

/// Option lists for the grid; an empty list keeps the base cell's value.
struct GridSpec {
  Cell base;
  std::vector<std::vector<std::size_t>> encoder_layer_sizes;
  std::vector<std::vector<std::size_t>> pathway_hidden_sizes;
  std::vector<double> betas;
  std::vector<ScheduleKind> schedules;
  std::vector<ClassifierKind> classifiers;
  std::size_t folds = 4;
};

/// Cartesian product in the order encoder → pathway hidden → β → schedule →
/// classifier. Axes that do not apply to the model kind are collapsed.
inline std::vector<Cell> enumerate_grid(const GridSpec& g) {
  auto or_base = [](auto opts, auto base) {
    if (opts.empty()) opts.push_back(base);
    return opts;
  };
  const ModelKind k = g.base.arch.kind;
  const auto encs = or_base(g.encoder_layer_sizes, g.base.arch.encoder_layer_sizes);
  const auto pws = is_pathway(k) ? or_base(g.pathway_hidden_sizes, g.base.arch.pathway_hidden_sizes)
                                 : std::vector<std::vector<std::size_t>>{g.base.arch.pathway_hidden_sizes};
  const auto betas = is_variational(k) ? or_base(g.betas, g.base.arch.beta)
                                       : std::vector<double>{g.base.arch.beta};
  const auto scheds = is_variational(k) ? or_base(g.schedules, g.base.arch.schedule)
                                        : std::vector<ScheduleKind>{g.base.arch.schedule};
  const auto clfs = or_base(g.classifiers, g.base.classifier.kind);
  std::vector<Cell> cells;
  for (const auto& e : encs)
    for (const auto& p : pws)
      for (double b : betas)
        for (ScheduleKind s : scheds)
          for (ClassifierKind c : clfs) {
            Cell cell = g.base;
            cell.arch.encoder_layer_sizes = e;
            cell.arch.pathway_hidden_sizes = p;
            cell.arch.beta = b;
            cell.arch.schedule = s;
            cell.classifier.kind = c;
            cells.push_back(std::move(cell));
          }
  if (cells.empty()) throw ConfigError("grid is empty");
  return cells;
}

/// Fold index per sample; each class is shuffled and dealt round-robin,
/// continuing the deal across classes.
inline std::vector<std::size_t> stratified_folds(const std::vector<std::size_t>& y,
                                                 std::size_t folds, Rng& rng) {
  if (folds < 2) throw ConfigError("cross validation needs at least 2 folds");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::vector<std::size_t> fold(y.size());
  std::size_t deal = 0;
  for (auto& [c, idx] : by_class) {
    if (idx.size() < folds)
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                      " samples, fewer than the " + std::to_string(folds) + " folds");
    rng.shuffle(idx);
    for (std::size_t i : idx) fold[i] = deal++ % folds;
  }
  return fold;
}

/// Inputs shared by cross validation and external validation.
struct Dataset {
  ExpressionTable table;  // raw (unnormalized) values
  std::vector<std::size_t> y;
  std::vector<std::string> vocabulary;
};

struct NormalizationPolicy {
  NormalizerKind kind = NormalizerKind::kZScore;
  double log_offset = 1e-3;
  bool refit_on_test = true;  // false → reuse training statistics
};

struct Evaluation {
  MetricsReport metrics;
  bool diverged = false;
  std::string error;
  std::vector<double> loss_history;
};

/// Trains the cell's model on `train`, fits its classifier on the chosen
/// representation and scores `test`. Training failures are returned as a
/// diverged evaluation with NaN metrics.
inline Evaluation evaluate_cell(const Cell& cell, const Matrix& x_train,
                                const std::vector<std::size_t>& y_train, const Matrix& x_test,
                                const std::vector<std::size_t>& y_test,
                                const std::vector<std::string>& vocabulary,
                                const std::vector<PathwayMask>& masks, Rng& rng) {
  Evaluation ev;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    Model model = build_model(cell.arch, x_train.cols(), masks, rng);
    ev.metrics.param_count = count_params(model.params);
    FitResult fr = fit(model, x_train, cell.train, rng);
    ev.loss_history = std::move(fr.loss_history);
    const Space space = cell.resolved_space();
    Matrix r_train = extract_representation(model, x_train, space);
    Matrix r_test = extract_representation(model, x_test, space);
    if (!r_train.all_finite() || !r_test.all_finite())
      throw NumericError("representation contains non-finite values");
    Matrix proba = classify(cell.classifier, r_train, y_train, vocabulary, r_test, rng);
    const auto pred = argmax_rows(proba);
    ConfusionMetrics cm = confusion_metrics(y_test, pred, vocabulary.size());
    ev.metrics.accuracy = cm.accuracy;
    ev.metrics.precision = cm.precision;
    ev.metrics.recall = cm.recall;
    ev.metrics.f1 = cm.f1;
    ev.metrics.roc_auc = roc_auc_macro(y_test, proba);
    ev.metrics.test_mse = reconstruction_mse(model, x_test);
    if (!std::isfinite(ev.metrics.test_mse))
      throw NumericError("test reconstruction MSE is not finite");
  } catch (const TrainingError& e) {
    ev.diverged = true;
    ev.error = e.what();
  } catch (const NumericError& e) {
    ev.diverged = true;
    ev.error = e.what();
  }
  if (ev.diverged) {
    const std::size_t params = ev.metrics.param_count;
    ev.metrics = {nan, nan, nan, nan, nan, nan, params};
    spdlog::warn("{}: {}", cell.describe(), ev.error);
  }
  return ev;
}

inline std::pair<Matrix, Matrix> normalize_pair(const ExpressionTable& train,
                                                const ExpressionTable& test,
                                                const NormalizationPolicy& p) {
  Normalizer n = fit_normalizer(train, p.kind, p.log_offset);
  Matrix tr = apply_normalizer(n, train).values;
  Matrix te = p.refit_on_test ? apply_normalizer(fit_normalizer(test, p.kind, p.log_offset), test).values
                              : apply_normalizer(n, test).values;
  return {std::move(tr), std::move(te)};
}

struct CellResult {
  Cell cell;
  std::vector<double> fold_auc;
  double mean_auc = std::numeric_limits<double>::quiet_NaN();
  std::size_t param_count = 0;
  bool diverged = false;
};

/// Highest mean AUC; ties go to fewer parameters, then grid order. Cells
/// with a NaN mean (diverged folds) are never selected.
inline std::size_t select_best(const std::vector<CellResult>& cells) {
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const CellResult& cur = cells[c];
    if (std::isnan(cur.mean_auc)) continue;
    if (!best || cur.mean_auc > cells[*best].mean_auc ||
        (cur.mean_auc == cells[*best].mean_auc && cur.param_count < cells[*best].param_count))
      best = c;
  }
  if (!best) throw TrainingError(0, "every grid cell diverged in cross validation");
  return *best;
}

struct CvResult {
  std::vector<CellResult> cells;  // grid order
  std::size_t best = 0;
  std::vector<std::size_t> folds;  // fold of each sample
};

/// k-fold stratified grid search on the training set only. Each fold fits
/// the normalizer on its training part. Cell c, fold f draws from stream
/// c·folds + f of the master seed, so results do not depend on `threads`.
inline CvResult cross_validate(const Dataset& data, const std::vector<PathwayMask>& masks,
                               const GridSpec& grid, std::uint64_t seed,
                               const NormalizationPolicy& norm = {}, std::size_t threads = 1) {
  const std::vector<Cell> cells = enumerate_grid(grid);
  for (const auto& c : cells) c.validate();
  Rng fold_rng = Rng::stream(seed, 0xF01D);
  CvResult res;
  res.folds = stratified_folds(data.y, grid.folds, fold_rng);
  const std::size_t k = grid.folds;

  std::vector<Evaluation> evals(cells.size() * k);
  parallel_for(evals.size(), threads, [&](std::size_t u) {
    const std::size_t c = u / k, f = u % k;
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < data.y.size(); ++i) (res.folds[i] == f ? va : tr).push_back(i);
    ExpressionTable ttr = select_samples(data.table, tr), tva = select_samples(data.table, va);
    NormalizationPolicy fold_norm = norm;
    fold_norm.refit_on_test = false;
    auto [xtr, xva] = normalize_pair(ttr, tva, fold_norm);
    std::vector<std::size_t> ytr, yva;
    for (std::size_t i : tr) ytr.push_back(data.y[i]);
    for (std::size_t i : va) yva.push_back(data.y[i]);
    Rng rng = Rng::stream(seed, u);
    evals[u] = evaluate_cell(cells[c], xtr, ytr, xva, yva, data.vocabulary, masks, rng);
  });

  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellResult r{cells[c], {}, 0.0, 0, false};
    for (std::size_t f = 0; f < k; ++f) {
      const Evaluation& e = evals[c * k + f];
      r.fold_auc.push_back(e.metrics.roc_auc);
      r.param_count = e.metrics.param_count;
      r.diverged = r.diverged || e.diverged;
      r.mean_auc += e.metrics.roc_auc / static_cast<double>(k);
    }
    if (r.diverged) r.mean_auc = std::numeric_limits<double>::quiet_NaN();
    res.cells.push_back(std::move(r));
  }
  res.best = select_best(res.cells);
  return res;
}

struct RepeatResult {
  std::uint64_t seed = 0;
  MetricsReport metrics;
  bool diverged = false;
  std::string error;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"test_mse", "accuracy", "precision",
                                              "recall",   "f1",       "roc_auc"};
  return names;
}

inline double metric_value(const MetricsReport& m, const std::string& name) {
  if (name == "test_mse") return m.test_mse;
  if (name == "accuracy") return m.accuracy;
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  if (name == "f1") return m.f1;
  if (name == "roc_auc") return m.roc_auc;
  throw InvalidArgument("unknown metric '" + name + "'");
}

struct RunReport {
  Cell cell;
  std::size_t param_count = 0;
  std::uint64_t base_seed = 0;
  std::vector<RepeatResult> repeats;
  std::map<std::string, MedianIqr> aggregate;  // over non-diverged repeats
  std::size_t failed = 0;

  std::vector<double> values(const std::string& metric) const {
    std::vector<double> v;
    for (const auto& r : repeats)
      if (!r.diverged) v.push_back(metric_value(r.metrics, metric));
    return v;
  }
};

inline void aggregate_report(RunReport& r) {
  r.failed = static_cast<std::size_t>(
      std::count_if(r.repeats.begin(), r.repeats.end(), [](const RepeatResult& x) { return x.diverged; }));
  r.aggregate.clear();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& name : metric_names()) {
    const auto v = r.values(name);
    r.aggregate[name] = v.empty() ? MedianIqr{nan, nan} : median_iqr(v);
  }
}

/// Repeated external validation of one chosen cell: repeat r trains with
/// seed base+r on the full training table and scores the test table.
inline RunReport external_validate(const Dataset& train, const Dataset& test,
                                   const std::vector<PathwayMask>& masks, const Cell& cell,
                                   std::size_t repeats, std::uint64_t base_seed,
                                   const NormalizationPolicy& norm = {}, std::size_t threads = 1) {
  cell.validate();
  if (repeats == 0) throw ConfigError("repeats must be >= 1");
  if (train.table.gene_names != test.table.gene_names)
    throw DataError("external_validate: train and test gene axes differ; intersect them first");
  if (train.vocabulary != test.vocabulary)
    throw DataError("external_validate: train and test label vocabularies differ");
  auto [xtr, xte] = normalize_pair(train.table, test.table, norm);
  RunReport report;
  report.cell = cell;
  report.base_seed = base_seed;
  report.repeats.resize(repeats);
  parallel_for(repeats, threads, [&](std::size_t r) {
    Rng rng(base_seed + r);
    Evaluation e = evaluate_cell(cell, xtr, train.y, xte, test.y, train.vocabulary, masks, rng);
    report.repeats[r] = {base_seed + r, e.metrics, e.diverged, e.error};
  });
  report.param_count = report.repeats.front().metrics.param_count;
  aggregate_report(report);
  return report;
}

struct Comparison {
  double p_value = 1.0;
  int direction = 0;  // +1 when a's median exceeds b's
  bool exact = false;
};

inline Comparison compare_runs(const RunReport& a, const RunReport& b, const std::string& metric) {
  const auto va = a.values(metric), vb = b.values(metric);
  if (va.size() < 2 || vb.size() < 2)
    throw InvalidArgument("compare_runs: both reports need at least 2 successful repeats");
  WilcoxonResult w = wilcoxon_rank_sum(va, vb);
  const double ma = median_iqr(va).median, mb = median_iqr(vb).median;
  return {w.p_value, ma > mb ? 1 : (ma < mb ? -1 : 0), w.exact};
}

}  // namespace paae
