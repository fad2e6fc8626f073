#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "paae/data/delimited.hpp"
#include "paae/error.hpp"
#include "paae/models/checkpoint.hpp"
#include "paae/pipeline/experiment.hpp"

namespace paae {

namespace detail {

inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline double number_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace detail

inline nlohmann::json to_json(const Cell& c) {
  nlohmann::json j;
  j["architecture"] = to_json(c.arch);
  j["train"] = {{"epochs", c.train.epochs},
                {"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size}};
  j["space"] = to_string(c.resolved_space());
  j["classifier"] = {{"kind", to_string(c.classifier.kind)},
                     {"C", c.classifier.lr.C},
                     {"max_iter", c.classifier.lr.max_iter},
                     {"n_trees", c.classifier.rf.n_trees}};
  return j;
}

inline Cell cell_from_json(const nlohmann::json& j) {
  try {
    Cell c;
    c.arch = architecture_from_json(j.at("architecture"));
    c.train.epochs = j.at("train").at("epochs").get<std::size_t>();
    c.train.learning_rate = j.at("train").at("learning_rate").get<double>();
    c.train.batch_size = j.at("train").at("batch_size").get<std::size_t>();
    c.space = parse_space(j.at("space").get<std::string>());
    const auto& k = j.at("classifier");
    c.classifier.kind = parse_classifier_kind(k.at("kind").get<std::string>());
    c.classifier.lr.C = k.at("C").get<double>();
    c.classifier.lr.max_iter = k.at("max_iter").get<std::size_t>();
    c.classifier.rf.n_trees = k.at("n_trees").get<std::size_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("cell: ") + e.what());
  }
}

inline nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j;
  for (const auto& name : metric_names()) j[name] = detail::number_or_null(metric_value(m, name));
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j, std::size_t params) {
  MetricsReport m;
  m.accuracy = detail::number_or_nan(j.at("accuracy"));
  m.precision = detail::number_or_nan(j.at("precision"));
  m.recall = detail::number_or_nan(j.at("recall"));
  m.f1 = detail::number_or_nan(j.at("f1"));
  m.roc_auc = detail::number_or_nan(j.at("roc_auc"));
  m.test_mse = detail::number_or_nan(j.at("test_mse"));
  m.param_count = params;
  return m;
}

/// Model column of the summary-table layout: the kind, plus the pathway-set label
/// for pathway models ("PAAE (KEGG)").
inline std::string model_label(const Cell& c, const std::string& pathway_label) {
  std::string s = to_string(c.arch.kind);
  if (is_pathway(c.arch.kind) && !pathway_label.empty()) s += " (" + pathway_label + ")";
  return s;
}

/// Schedule column: empty for deterministic models.
inline std::string schedule_label(const Cell& c) {
  return is_variational(c.arch.kind) ? to_string(c.arch.schedule) : "";
}

struct LabelledReport {
  std::string pathway_label;
  RunReport report;
};

inline nlohmann::json to_json(const LabelledReport& lr) {
  const RunReport& r = lr.report;
  nlohmann::json j;
  j["model"] = model_label(r.cell, lr.pathway_label);
  j["pathway_set"] = lr.pathway_label;
  j["hyperparameters"] = to_json(r.cell);
  j["param_count"] = r.param_count;
  j["base_seed"] = r.base_seed;
  j["failed_repeats"] = r.failed;
  j["repeats"] = nlohmann::json::array();
  for (const auto& rep : r.repeats) {
    nlohmann::json x;
    x["seed"] = rep.seed;
    x["diverged"] = rep.diverged;
    x["error"] = rep.error;
    x["metrics"] = to_json(rep.metrics);
    j["repeats"].push_back(std::move(x));
  }
  for (const auto& name : metric_names()) {
    const MedianIqr& m = r.aggregate.at(name);
    j["aggregate"][name] = {{"median", detail::number_or_null(m.median)},
                            {"iqr", detail::number_or_null(m.iqr)}};
  }
  return j;
}

/// Parses one report; the aggregate is recomputed from the repeats and
/// must agree with the stored one.
inline LabelledReport report_from_json(const nlohmann::json& j) {
  try {
    LabelledReport lr;
    lr.pathway_label = j.at("pathway_set").get<std::string>();
    RunReport& r = lr.report;
    r.cell = cell_from_json(j.at("hyperparameters"));
    r.param_count = j.at("param_count").get<std::size_t>();
    r.base_seed = j.at("base_seed").get<std::uint64_t>();
    for (const auto& x : j.at("repeats")) {
      RepeatResult rep;
      rep.seed = x.at("seed").get<std::uint64_t>();
      rep.diverged = x.at("diverged").get<bool>();
      rep.error = x.at("error").get<std::string>();
      rep.metrics = metrics_from_json(x.at("metrics"), r.param_count);
      r.repeats.push_back(std::move(rep));
    }
    aggregate_report(r);
    if (r.failed != j.at("failed_repeats").get<std::size_t>())
      throw ParseError("report: failed_repeats disagrees with the repeat list");
    for (const auto& name : metric_names()) {
      const auto& a = j.at("aggregate").at(name);
      const MedianIqr& m = r.aggregate.at(name);
      const double med = detail::number_or_nan(a.at("median"));
      const double iqr = detail::number_or_nan(a.at("iqr"));
      const bool same = (std::isnan(med) ? std::isnan(m.median) : med == m.median) &&
                        (std::isnan(iqr) ? std::isnan(m.iqr) : iqr == m.iqr);
      if (!same) throw ParseError("report: aggregate '" + name + "' disagrees with the repeats");
    }
    return lr;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
}

inline void write_reports_json(const std::filesystem::path& path,
                               const std::vector<LabelledReport>& reports) {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : reports) j["runs"].push_back(to_json(r));
  detail::write_text(path, j.dump(2) + "\n");
}

inline std::vector<LabelledReport> read_reports_json(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  std::vector<LabelledReport> out;
  if (!j.contains("runs") || !j["runs"].is_array()) throw ParseError(path.string() + ": missing runs");
  for (const auto& r : j["runs"]) out.push_back(report_from_json(r));
  return out;
}

inline const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h{"Model",     "schedule", "space",     "classifier",
                                          "#Param",    "Test MSE", "Accuracy",  "Precision",
                                          "Recall",    "F1",       "ROC AUC"};
  return h;
}

/// One summary-table row; metric cells are "median (iqr)" with three decimals.
struct SummaryRow {
  std::string model, schedule, space, classifier;
  std::size_t params = 0;
  std::vector<MedianIqr> cells;  // test_mse, accuracy, precision, recall, f1, roc_auc
};

inline SummaryRow summary_row(const LabelledReport& lr) {
  const RunReport& r = lr.report;
  SummaryRow row{model_label(r.cell, lr.pathway_label), schedule_label(r.cell),
                to_string(r.cell.resolved_space()), to_string(r.cell.classifier.kind),
                r.param_count, {}};
  for (const auto& name : metric_names()) row.cells.push_back(r.aggregate.at(name));
  return row;
}

inline std::string format_median_iqr(const MedianIqr& m) {
  if (std::isnan(m.median)) return "nan (nan)";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f (%.3f)", m.median, m.iqr);
  return buf;
}

inline MedianIqr parse_median_iqr(const std::string& s, const std::string& where) {
  const auto open = s.find(" ("), close = s.rfind(')');
  if (open == std::string::npos || close != s.size() - 1)
    throw ParseError(where + ": expected 'median (iqr)', got '" + s + "'");
  const std::string a = s.substr(0, open), b = s.substr(open + 2, close - open - 2);
  if (a == "nan" && b == "nan")
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  return {parse_real(a, where), parse_real(b, where)};
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream s;
  const auto& h = summary_header();
  for (std::size_t i = 0; i < h.size(); ++i) s << (i ? "," : "") << h[i];
  s << '\n';
  for (const auto& r : rows) {
    s << r.model << ',' << r.schedule << ',' << r.space << ',' << r.classifier << ',' << r.params;
    for (const auto& c : r.cells) s << ',' << format_median_iqr(c);
    s << '\n';
  }
  return s.str();
}

inline std::vector<SummaryRow> parse_summary_csv(const std::filesystem::path& path) {
  auto rows = read_delimited(path, ',');
  if (rows.empty() || rows[0].fields != summary_header())
    throw ParseError(path.string() + ": header does not match the summary-table schema");
  std::vector<SummaryRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::string where = location(path, rows[i].line);
    if (f.size() != summary_header().size()) throw ParseError(where + ": wrong field count");
    SummaryRow r{f[0], f[1], f[2], f[3], 0, {}};
    const double p = parse_real(f[4], where);
    if (!(p >= 0.0) || p != std::floor(p)) throw ParseError(where + ": bad #Param '" + f[4] + "'");
    r.params = static_cast<std::size_t>(p);
    for (std::size_t c = 5; c < f.size(); ++c) r.cells.push_back(parse_median_iqr(f[c], where));
    out.push_back(std::move(r));
  }
  return out;
}

inline const std::vector<std::string>& grid_header() {
  static const std::vector<std::string> h{"rank",  "model",      "encoder", "pathway_hidden",
                                          "beta",  "schedule",   "space",   "classifier",
                                          "params", "mean_auc",  "fold_auc", "winner"};
  return h;
}

/// Grid report rows in selection order: mean AUC descending, then fewer
/// parameters, then grid order; diverged cells last.
inline std::string grid_csv(const CvResult& res) {
  std::vector<std::size_t> order(res.cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double x = res.cells[a].mean_auc, y = res.cells[b].mean_auc;
    if (std::isnan(x) || std::isnan(y)) return !std::isnan(x) && std::isnan(y);
    if (x != y) return x > y;
    return res.cells[a].param_count < res.cells[b].param_count;
  });
  std::ostringstream s;
  const auto& h = grid_header();
  for (std::size_t i = 0; i < h.size(); ++i) s << (i ? "," : "") << h[i];
  s << '\n';
  auto sizes = [](const std::vector<std::size_t>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
    return out + "]";
  };
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const CellResult& c = res.cells[order[rank]];
    const auto& a = c.cell.arch;
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.17g", c.mean_auc);
    std::string folds;
    for (std::size_t f = 0; f < c.fold_auc.size(); ++f) {
      char b[32];
      std::snprintf(b, sizeof b, "%.17g", c.fold_auc[f]);
      folds += (f ? " " : "") + std::string(b);
    }
    char beta[32];
    std::snprintf(beta, sizeof beta, "%g", a.beta);
    s << rank + 1 << ',' << to_string(a.kind) << ',' << sizes(a.encoder_layer_sizes) << ','
      << (is_pathway(a.kind) ? sizes(a.pathway_hidden_sizes) : "") << ','
      << (is_variational(a.kind) ? beta : "") << ',' << schedule_label(c.cell) << ','
      << to_string(c.cell.resolved_space()) << ',' << to_string(c.cell.classifier.kind) << ','
      << c.param_count << ',' << mean << ',' << folds << ',' << (order[rank] == res.best ? 1 : 0)
      << '\n';
  }
  return s.str();
}

struct GridRow {
  std::size_t rank = 0;
  std::string model;
  double mean_auc = 0.0;
  std::size_t params = 0;
  bool winner = false;
};

inline std::vector<GridRow> parse_grid_csv(const std::filesystem::path& path) {
  auto rows = read_delimited(path, ',');
  if (rows.empty() || rows[0].fields != grid_header())
    throw ParseError(path.string() + ": header does not match the grid report schema");
  std::vector<GridRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    const std::string where = location(path, rows[i].line);
    if (f.size() != grid_header().size()) throw ParseError(where + ": wrong field count");
    GridRow g;
    g.rank = static_cast<std::size_t>(parse_real(f[0], where));
    g.model = f[1];
    g.params = static_cast<std::size_t>(parse_real(f[8], where));
    g.mean_auc = f[9] == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_real(f[9], where);
    g.winner = f[11] == "1";
    out.push_back(g);
  }
  return out;
}

}  // namespace paae
