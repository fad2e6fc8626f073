#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <unistd.h>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "paae/data/expression.hpp"
#include "paae/data/normalize.hpp"
#include "paae/error.hpp"
#include "paae/interpret/cluster.hpp"
#include "paae/pipeline/experiment.hpp"

namespace paae {

struct DataConfig {
  std::filesystem::path train_expression, train_labels, test_expression, test_labels;
  std::filesystem::path gene_mapping, survival;
  std::string orientation = "samples";  // samples as rows, or "genes"
  std::string scale = "log2_plus1";
  std::string label_column = "subtype";
  std::string label_id_column;
  std::set<std::string> drop_labels;
  std::string survival_time_column = "OS_DAYS";
  std::string survival_event_column = "OS_STATUS";
  std::string survival_id_column;
  double survival_time_scale = 1.0;
};

struct ExperimentConfig {
  DataConfig data;
  std::filesystem::path pathway_file;
  std::string pathway_format = "auto";
  std::string pathway_label;
  NormalizationPolicy normalization;
  Cell cell;
  GridSpec grid;
  std::size_t repeats = 16;
  std::vector<Space> validate_spaces;  // empty → the cell's space
  std::size_t top_pathways = 5;
  std::size_t top_genes = 10;
  DistanceMetric distance = DistanceMetric::kCosine;
  std::string interpret_split = "train";
  std::string raw_renorm = "none";  // none, tpm (from FPKM) or ipm (from intensity)
  double survival_window = 1825.0;
  double survival_alpha = 0.05;
  std::filesystem::path output_dir;
  std::string dataset = "data";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::filesystem::path config_path;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::string> output, model, schedule, dataset, space, classifier;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads, epochs, batch_size, repeats;
  std::optional<double> lr, beta;
};

namespace detail {

using boost::property_tree::ptree;

template <class T>
T get_or(const ptree& t, const std::string& key, T fallback) {
  auto v = t.get_optional<std::string>(key);
  if (!v) return fallback;
  if constexpr (std::is_unsigned_v<T>)
    if (!v->empty() && v->front() == '-')
      throw ConfigError("config key '" + key + "' must be non-negative, got '" + *v + "'");
  try {
    return boost::lexical_cast<T>(*v);
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + *v + "'");
  }
}

inline std::string trim_copy(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) {
    item = trim_copy(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.front() == '-')
      throw ConfigError("config key '" + key + "': '" + item + "' is not a layer width");
    out.push_back(v);
  }
  return out;
}

/// "[64], [128,64]" → {{64}, {128, 64}}; "[]" is an empty option.
inline std::vector<std::vector<std::size_t>> parse_size_options(const std::string& s,
                                                                const std::string& key) {
  std::vector<std::vector<std::size_t>> out;
  static const std::regex item(R"(\[([^\]]*)\])");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), item); it != std::sregex_iterator(); ++it)
    out.push_back(parse_sizes((*it)[1].str(), key));
  if (out.empty() && !trim_copy(s).empty())
    throw ConfigError("config key '" + key + "': expected bracketed lists like [64], [128,64]");
  return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

}  // namespace detail

/// Builds a config from an INI tree. Relative paths resolve against `base`.
inline ExperimentConfig config_from_ptree(const boost::property_tree::ptree& t,
                                          const std::filesystem::path& base) {
  using detail::get_or;
  ExperimentConfig c;
  auto path = [&](const std::string& key) {
    return std::filesystem::path(detail::resolve(base, get_or<std::string>(t, key, "")));
  };
  c.data.train_expression = path("data.train_expression");
  c.data.train_labels = path("data.train_labels");
  c.data.test_expression = path("data.test_expression");
  c.data.test_labels = path("data.test_labels");
  c.data.gene_mapping = path("data.gene_mapping");
  c.data.survival = path("data.survival");
  c.data.orientation = get_or<std::string>(t, "data.orientation", c.data.orientation);
  c.data.scale = get_or<std::string>(t, "data.scale", c.data.scale);
  c.data.label_column = get_or<std::string>(t, "data.label_column", c.data.label_column);
  c.data.label_id_column = get_or<std::string>(t, "data.label_id_column", "");
  for (const auto& v : detail::split_list(get_or<std::string>(t, "data.drop_labels", "")))
    c.data.drop_labels.insert(v);
  c.data.survival_time_column =
      get_or<std::string>(t, "data.survival_time_column", c.data.survival_time_column);
  c.data.survival_event_column =
      get_or<std::string>(t, "data.survival_event_column", c.data.survival_event_column);
  c.data.survival_id_column = get_or<std::string>(t, "data.survival_id_column", "");
  c.data.survival_time_scale = get_or<double>(t, "data.survival_time_scale", 1.0);

  c.pathway_file = path("pathways.file");
  c.pathway_format = get_or<std::string>(t, "pathways.format", "auto");
  c.pathway_label = get_or<std::string>(t, "pathways.label", "");

  c.normalization.kind = parse_normalizer_kind(get_or<std::string>(t, "normalize.kind", "zscore"));
  c.normalization.log_offset = get_or<double>(t, "normalize.log_offset", 1e-3);
  const std::string policy = get_or<std::string>(t, "normalize.test_policy", "refit");
  if (policy != "refit" && policy != "reuse")
    throw ConfigError("normalize.test_policy must be refit or reuse, got '" + policy + "'");
  c.normalization.refit_on_test = policy == "refit";

  ArchitectureConfig& a = c.cell.arch;
  a.kind = parse_model_kind(get_or<std::string>(t, "model.kind", "PAAE"));
  if (auto v = t.get_optional<std::string>("model.encoder_layers"))
    a.encoder_layer_sizes = detail::parse_sizes(*v, "model.encoder_layers");
  if (auto v = t.get_optional<std::string>("model.pathway_hidden"))
    a.pathway_hidden_sizes = detail::parse_sizes(*v, "model.pathway_hidden");
  if (auto v = t.get_optional<std::string>("model.decoder_hidden"))
    a.decoder_hidden_sizes = detail::parse_sizes(*v, "model.decoder_hidden");
  a.dropout_rate = get_or<double>(t, "model.dropout", a.dropout_rate);
  a.beta = get_or<double>(t, "model.beta", a.beta);
  a.schedule = parse_schedule_kind(get_or<std::string>(t, "model.schedule", "none"));
  a.ts = get_or<std::size_t>(t, "model.ts", a.ts);
  a.te = get_or<std::size_t>(t, "model.te", a.ts + 128);

  c.cell.train.epochs = get_or<std::size_t>(t, "train.epochs", c.cell.train.epochs);
  c.cell.train.learning_rate = get_or<double>(t, "train.learning_rate", c.cell.train.learning_rate);
  c.cell.train.batch_size = get_or<std::size_t>(t, "train.batch_size", c.cell.train.batch_size);

  c.cell.classifier.kind = parse_classifier_kind(get_or<std::string>(t, "classifier.kind", "lr"));
  c.cell.classifier.lr.C = get_or<double>(t, "classifier.C", 1.0);
  c.cell.classifier.lr.max_iter = get_or<std::size_t>(t, "classifier.max_iter", 100);
  c.cell.classifier.rf.n_trees = get_or<std::size_t>(t, "classifier.n_trees", 100);
  if (auto v = t.get_optional<std::string>("classifier.space")) c.cell.space = parse_space(*v);

  GridSpec& g = c.grid;
  g.encoder_layer_sizes =
      detail::parse_size_options(get_or<std::string>(t, "grid.encoder_layers", ""), "grid.encoder_layers");
  g.pathway_hidden_sizes =
      detail::parse_size_options(get_or<std::string>(t, "grid.pathway_hidden", ""), "grid.pathway_hidden");
  for (const auto& v : detail::split_list(get_or<std::string>(t, "grid.betas", "")))
    g.betas.push_back(detail::parse_double(v, "grid.betas"));
  for (const auto& v : detail::split_list(get_or<std::string>(t, "grid.schedules", "")))
    g.schedules.push_back(parse_schedule_kind(v));
  for (const auto& v : detail::split_list(get_or<std::string>(t, "grid.classifiers", "")))
    g.classifiers.push_back(parse_classifier_kind(v));
  g.folds = get_or<std::size_t>(t, "grid.folds", 4);

  c.repeats = get_or<std::size_t>(t, "validate.repeats", c.repeats);
  for (const auto& v : detail::split_list(get_or<std::string>(t, "validate.spaces", "")))
    c.validate_spaces.push_back(parse_space(v));

  c.top_pathways = get_or<std::size_t>(t, "interpret.top_pathways", c.top_pathways);
  c.top_genes = get_or<std::size_t>(t, "interpret.top_genes", c.top_genes);
  c.distance = parse_distance_metric(get_or<std::string>(t, "interpret.distance", "cosine"));
  c.interpret_split = get_or<std::string>(t, "interpret.split", "train");
  c.raw_renorm = get_or<std::string>(t, "interpret.raw_renorm", "none");
  c.survival_window = get_or<double>(t, "survival.window_days", c.survival_window);
  c.survival_alpha = get_or<double>(t, "survival.alpha", c.survival_alpha);

  c.output_dir = path("run.output_dir");
  c.dataset = get_or<std::string>(t, "run.dataset", c.dataset);
  c.seed = get_or<std::uint64_t>(t, "run.seed", 0);
  c.threads = get_or<std::size_t>(t, "run.threads", 1);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree t;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  ExperimentConfig c = config_from_ptree(t, std::filesystem::absolute(path).parent_path());
  c.config_path = path;
  return c;
}

/// Applies flag overrides, then fills the output directory from
/// PAAE_OUTPUT_DIR or "runs" when neither the file nor a flag set it.
inline void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  if (o.output) c.output_dir = *o.output;
  if (o.model) c.cell.arch.kind = parse_model_kind(*o.model);
  if (o.schedule) c.cell.arch.schedule = parse_schedule_kind(*o.schedule);
  if (o.dataset) c.dataset = *o.dataset;
  if (o.space) c.cell.space = parse_space(*o.space);
  if (o.classifier) c.cell.classifier.kind = parse_classifier_kind(*o.classifier);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.epochs) c.cell.train.epochs = *o.epochs;
  if (o.batch_size) c.cell.train.batch_size = *o.batch_size;
  if (o.repeats) c.repeats = *o.repeats;
  if (o.lr) c.cell.train.learning_rate = *o.lr;
  if (o.beta) c.cell.arch.beta = *o.beta;
  if (c.output_dir.empty()) {
    const char* env = std::getenv("PAAE_OUTPUT_DIR");
    c.output_dir = env && *env ? env : "runs";
  }
}

/// Which inputs a subcommand reads.
struct Needs {
  bool labels = false;
  bool test = false;
  bool survival = false;
};

namespace detail {

inline void require_file(const std::filesystem::path& p, const std::string& key) {
  if (p.empty()) throw ConfigError("config key '" + key + "' is required");
  if (!std::filesystem::is_regular_file(p))
    throw ConfigError("config key '" + key + "': file not found: " + p.string());
}

inline void require_writable_dir(const std::filesystem::path& dir) {
  std::filesystem::path p = std::filesystem::absolute(dir);
  while (!std::filesystem::exists(p) && p.has_parent_path() && p != p.parent_path())
    p = p.parent_path();
  if (!std::filesystem::is_directory(p))
    throw ConfigError("output directory '" + dir.string() + "' is not a directory");
  if (::access(p.c_str(), W_OK) != 0)
    throw ConfigError("output directory '" + dir.string() + "' is not writable");
}

}  // namespace detail

/// Full validation; runs before any file is written.
inline void validate_config(const ExperimentConfig& c, const Needs& n) {
  detail::require_file(c.data.train_expression, "data.train_expression");
  if (n.labels) detail::require_file(c.data.train_labels, "data.train_labels");
  if (n.test) {
    detail::require_file(c.data.test_expression, "data.test_expression");
    if (n.labels) detail::require_file(c.data.test_labels, "data.test_labels");
  }
  if (n.survival) detail::require_file(c.data.survival, "data.survival");
  const std::pair<const std::filesystem::path*, const char*> optional_files[] = {
      {&c.data.train_labels, "data.train_labels"}, {&c.data.test_expression, "data.test_expression"},
      {&c.data.test_labels, "data.test_labels"},   {&c.data.survival, "data.survival"},
      {&c.data.gene_mapping, "data.gene_mapping"}, {&c.pathway_file, "pathways.file"}};
  for (const auto& [p, key] : optional_files)
    if (!p->empty()) detail::require_file(*p, key);
  if (!c.data.test_expression.empty() && n.labels)
    detail::require_file(c.data.test_labels, "data.test_labels");
  if (c.data.orientation != "samples" && c.data.orientation != "genes")
    throw ConfigError("data.orientation must be samples or genes, got '" + c.data.orientation + "'");
  parse_value_scale(c.data.scale);
  if (is_pathway(c.cell.arch.kind))
    detail::require_file(c.pathway_file, "pathways.file");
  if (c.pathway_format != "auto" && c.pathway_format != "gmt" && c.pathway_format != "json")
    throw ConfigError("pathways.format must be auto, gmt or json");
  c.cell.validate();
  for (Space s : c.validate_spaces) check_space(c.cell.arch.kind, s);
  if (c.repeats == 0) throw ConfigError("validate.repeats must be >= 1");
  if (c.grid.folds < 2) throw ConfigError("grid.folds must be >= 2");
  if (c.threads == 0) throw ConfigError("threads must be >= 1");
  if (c.top_pathways == 0 || c.top_genes == 0)
    throw ConfigError("interpret.top_pathways and interpret.top_genes must be >= 1");
  if (c.interpret_split != "train" && c.interpret_split != "test")
    throw ConfigError("interpret.split must be train or test");
  if (c.raw_renorm != "none" && c.raw_renorm != "tpm" && c.raw_renorm != "ipm")
    throw ConfigError("interpret.raw_renorm must be none, tpm or ipm");
  if (c.interpret_split == "test") detail::require_file(c.data.test_expression, "data.test_expression");
  if (!(c.survival_window > 0.0)) throw ConfigError("survival.window_days must be > 0");
  if (!(c.survival_alpha > 0.0 && c.survival_alpha < 1.0))
    throw ConfigError("survival.alpha must lie in (0, 1)");
  if (!(c.data.survival_time_scale > 0.0)) throw ConfigError("data.survival_time_scale must be > 0");
  if (c.dataset.empty() || c.dataset.find_first_of("/\\ ") != std::string::npos)
    throw ConfigError("run.dataset must be a non-empty name without spaces or slashes");
  detail::require_writable_dir(c.output_dir);
}

/// Canonical text of the effective config, used for the manifest hash.
inline std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream s;
  auto sizes = [](const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
  };
  auto opts = [&](const std::vector<std::vector<std::size_t>>& v) {
    std::string out;
    for (const auto& o : v) out += "[" + sizes(o) + "]";
    return out;
  };
  const auto& a = c.cell.arch;
  s.precision(17);
  s << "data.train_expression=" << c.data.train_expression.string() << '\n'
    << "data.train_labels=" << c.data.train_labels.string() << '\n'
    << "data.test_expression=" << c.data.test_expression.string() << '\n'
    << "data.test_labels=" << c.data.test_labels.string() << '\n'
    << "data.gene_mapping=" << c.data.gene_mapping.string() << '\n'
    << "data.survival=" << c.data.survival.string() << '\n'
    << "data.orientation=" << c.data.orientation << '\n'
    << "data.scale=" << c.data.scale << '\n'
    << "data.label_column=" << c.data.label_column << '\n'
    << "pathways.file=" << c.pathway_file.string() << '\n'
    << "pathways.label=" << c.pathway_label << '\n'
    << "normalize.kind=" << to_string(c.normalization.kind) << '\n'
    << "normalize.log_offset=" << c.normalization.log_offset << '\n'
    << "normalize.refit=" << c.normalization.refit_on_test << '\n'
    << "model.kind=" << to_string(a.kind) << '\n'
    << "model.encoder_layers=" << sizes(a.encoder_layer_sizes) << '\n'
    << "model.pathway_hidden=" << sizes(a.pathway_hidden_sizes) << '\n'
    << "model.decoder_hidden=" << sizes(a.resolved_decoder_hidden()) << '\n'
    << "model.dropout=" << a.dropout_rate << '\n'
    << "model.beta=" << a.beta << '\n'
    << "model.schedule=" << to_string(a.schedule) << '\n'
    << "model.ts=" << a.ts << "\nmodel.te=" << a.te << '\n'
    << "train.epochs=" << c.cell.train.epochs << '\n'
    << "train.learning_rate=" << c.cell.train.learning_rate << '\n'
    << "train.batch_size=" << c.cell.train.batch_size << '\n'
    << "classifier=" << to_string(c.cell.classifier.kind) << ',' << c.cell.classifier.lr.C << ','
    << c.cell.classifier.lr.max_iter << ',' << c.cell.classifier.rf.n_trees << ','
    << to_string(c.cell.resolved_space()) << '\n'
    << "grid.encoder_layers=" << opts(c.grid.encoder_layer_sizes) << '\n'
    << "grid.pathway_hidden=" << opts(c.grid.pathway_hidden_sizes) << '\n'
    << "grid.folds=" << c.grid.folds << '\n'
    << "validate.repeats=" << c.repeats << '\n'
    << "interpret=" << c.top_pathways << ',' << c.top_genes << ',' << c.interpret_split << ','
    << c.raw_renorm << ',' << (c.distance == DistanceMetric::kCosine ? "cosine" : "euclidean") << '\n'
    << "survival=" << c.survival_window << ',' << c.survival_alpha << '\n'
    << "run.dataset=" << c.dataset << '\n'
    << "run.seed=" << c.seed << '\n';
  s << "grid.betas=";
  for (double b : c.grid.betas) s << b << ',';
  s << "\ngrid.schedules=";
  for (auto k : c.grid.schedules) s << to_string(k) << ',';
  s << "\ngrid.classifiers=";
  for (auto k : c.grid.classifiers) s << to_string(k) << ',';
  s << '\n';
  return s.str();
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace paae
