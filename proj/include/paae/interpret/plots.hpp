#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "paae/core/matrix.hpp"
#include "paae/error.hpp"
#include "paae/interpret/cluster.hpp"
#include "paae/interpret/survival.hpp"

namespace paae {

/// `<prefix>-<dataset>-<model>-<space>.<ext>`
struct ArtifactNaming {
  std::string dataset = "data";
  std::string model = "model";
  std::string space = "a";

  std::string name(const std::string& prefix, const std::string& ext) const {
    return prefix + "-" + dataset + "-" + model + "-" + space + "." + ext;
  }
};

namespace svg {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  return out;
}

inline std::string hex(int r, int g, int b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", std::clamp(r, 0, 255), std::clamp(g, 0, 255),
                std::clamp(b, 0, 255));
  return buf;
}

/// Categorical color for class index i.
inline std::string category(std::size_t i) {
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kPalette[i % 10];
}

/// Blue–white–red for t ∈ [−1, 1].
inline std::string diverging(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, -1.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
  return t >= 0.0 ? hex(255, fade, fade) : hex(fade, fade, 255);
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

inline std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
         "version=\"1.1\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " +
         num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n";
}

inline std::string text(double x, double y, const std::string& s, int size = 11,
                        const std::string& extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
         "\"" + extra + ">" + escape(s) + "</text>\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill) {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
         num(h) + "\" fill=\"" + fill + "\"/>\n";
}

inline std::string line(double x1, double y1, double x2, double y2,
                        const std::string& stroke = "#333333") {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
         num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
}

/// Dendrogram segments. `leaf_pos[i]` is leaf i's coordinate along the leaf
/// axis; merge heights map from `base` outward by up to `depth`.
inline std::string dendrogram(const ClusterTree& tree, const std::vector<double>& leaf_pos,
                              double base, double depth, bool vertical_leaves) {
  if (tree.merges.empty()) return "";
  const std::size_t n = tree.leaf_count;
  const double top = std::max(tree.merges.back().height, 1e-12);
  std::vector<double> pos(2 * n - 1), hgt(2 * n - 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) pos[i] = leaf_pos[i];
  std::string out;
  auto to_h = [&](double h) { return base - depth * h / top; };
  for (std::size_t m = 0; m < tree.merges.size(); ++m) {
    const Merge& mg = tree.merges[m];
    const double h = mg.height;
    pos[n + m] = 0.5 * (pos[mg.left] + pos[mg.right]);
    hgt[n + m] = h;
    const double a = pos[mg.left], b = pos[mg.right];
    const double ha = to_h(hgt[mg.left]), hb = to_h(hgt[mg.right]), hm = to_h(h);
    if (vertical_leaves) {  // leaves along x, tree grows upward
      out += line(a, ha, a, hm) + line(b, hb, b, hm) + line(a, hm, b, hm);
    } else {  // leaves along y, tree grows leftward
      out += line(ha, a, hm, a) + line(hb, b, hm, b) + line(hm, a, hm, b);
    }
  }
  return out;
}

}  // namespace svg

struct ClustermapInput {
  const Matrix* values = nullptr;               // samples × columns
  std::vector<std::string> sample_ids;
  std::vector<std::size_t> labels;              // class index per sample
  std::vector<std::string> vocabulary;
  std::vector<std::string> column_names;
  ClusterTree row_tree;                         // unclustered(n) to keep input order
  ClusterTree col_tree;
  std::string title;
};

/// Heatmap reordered by both trees with a class color strip, plus a CSV
/// sidecar (same stem, .csv) holding the reordered matrix.
inline void emit_clustermap(const ClustermapInput& in, const std::filesystem::path& svg_path) {
  const Matrix& a = *in.values;
  const std::size_t n = a.rows(), p = a.cols();
  if (in.sample_ids.size() != n || in.labels.size() != n || in.column_names.size() != p ||
      in.row_tree.order.size() != n || in.col_tree.order.size() != p)
    throw ShapeError("emit_clustermap: inconsistent dimensions");

  const double cell_w = 14.0, cell_h = std::clamp(600.0 / static_cast<double>(n), 1.0, 14.0);
  const double left = 130.0, top = 110.0, strip = 12.0;
  const double hx = left + strip + 4.0;
  const double width = hx + cell_w * static_cast<double>(p) + 150.0;
  const double height = top + cell_h * static_cast<double>(n) + 220.0;
  const double scale = std::max(max_abs(a), 1e-300);

  std::ostringstream s;
  s << svg::header(width, height);
  s << svg::text(10, 18, in.title, 14);
  std::vector<double> col_pos(p), row_pos(n);
  for (std::size_t k = 0; k < p; ++k) col_pos[in.col_tree.order[k]] = hx + cell_w * (k + 0.5);
  for (std::size_t k = 0; k < n; ++k) row_pos[in.row_tree.order[k]] = top + cell_h * (k + 0.5);
  s << svg::dendrogram(in.col_tree, col_pos, top - 4.0, 70.0, true);
  s << svg::dendrogram(in.row_tree, row_pos, left - 4.0, 110.0, false);
  for (std::size_t rk = 0; rk < n; ++rk) {
    const std::size_t r = in.row_tree.order[rk];
    const double y = top + cell_h * static_cast<double>(rk);
    s << svg::rect(left, y, strip, cell_h, svg::category(in.labels[r]));
    for (std::size_t ck = 0; ck < p; ++ck) {
      const std::size_t c = in.col_tree.order[ck];
      s << svg::rect(hx + cell_w * static_cast<double>(ck), y, cell_w, cell_h,
                     svg::diverging(a(r, c) / scale));
    }
  }
  const double label_y = top + cell_h * static_cast<double>(n) + 6.0;
  for (std::size_t ck = 0; ck < p; ++ck) {
    const double x = hx + cell_w * (static_cast<double>(ck) + 0.5);
    s << svg::text(x, label_y, in.column_names[in.col_tree.order[ck]], 9,
                   " transform=\"rotate(90 " + svg::num(x) + " " + svg::num(label_y) + ")\"");
  }
  const double legend_x = hx + cell_w * static_cast<double>(p) + 12.0;
  for (std::size_t v = 0; v < in.vocabulary.size(); ++v) {
    s << svg::rect(legend_x, top + 16.0 * v, 10, 10, svg::category(v));
    s << svg::text(legend_x + 14, top + 16.0 * v + 9, in.vocabulary[v], 10);
  }
  s << "</svg>\n";
  svg::write_file(svg_path, s.str());

  std::ostringstream csv;
  csv.precision(17);
  csv << "sample,label";
  for (std::size_t ck = 0; ck < p; ++ck) csv << ',' << in.column_names[in.col_tree.order[ck]];
  csv << '\n';
  for (std::size_t rk = 0; rk < n; ++rk) {
    const std::size_t r = in.row_tree.order[rk];
    csv << in.sample_ids[r] << ',' << in.vocabulary.at(in.labels[r]);
    for (std::size_t ck = 0; ck < p; ++ck) csv << ',' << a(r, in.col_tree.order[ck]);
    csv << '\n';
  }
  std::filesystem::path csv_path = svg_path;
  csv_path.replace_extension(".csv");
  svg::write_file(csv_path, csv.str());
}

namespace detail {

struct ScatterFrame {
  double x0, x1, y0, y1;
  static constexpr double kW = 560, kH = 520, kPad = 50;

  explicit ScatterFrame(const Matrix& xy) {
    x0 = y0 = 1e300;
    x1 = y1 = -1e300;
    for (std::size_t r = 0; r < xy.rows(); ++r) {
      x0 = std::min(x0, xy(r, 0));
      x1 = std::max(x1, xy(r, 0));
      y0 = std::min(y0, xy(r, 1));
      y1 = std::max(y1, xy(r, 1));
    }
    if (x1 - x0 < 1e-12) { x0 -= 1; x1 += 1; }
    if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  }
  double px(double x) const { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); }
  double py(double y) const { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); }

  std::string axes(const std::string& title) const {
    return svg::header(kW + 140, kH) + svg::text(10, 18, title, 13) +
           svg::line(kPad, kH - kPad, kW - kPad, kH - kPad) + svg::line(kPad, kPad, kPad, kH - kPad) +
           svg::text(kW / 2 - 10, kH - 15, "PC1", 11) +
           svg::text(12, kH / 2, "PC2", 11);
  }
};

inline std::string circle(double x, double y, const std::string& fill) {
  return "<circle cx=\"" + svg::num(x) + "\" cy=\"" + svg::num(y) + "\" r=\"3\" fill=\"" + fill +
         "\" fill-opacity=\"0.8\"/>\n";
}

}  // namespace detail

struct FeaturemapInput {
  const Matrix* coords = nullptr;  // n × 2 (PCA)
  const Matrix* activity = nullptr;
  std::vector<std::size_t> labels;
  std::vector<std::string> vocabulary;
  std::vector<std::string> column_names;
  std::vector<std::size_t> columns;  // panels to draw
};

/// One class-colored scatter plus one intensity scatter per requested
/// column, sharing a viewBox and axis bounds. Returns the files written.
inline std::vector<std::filesystem::path> emit_featuremap(const FeaturemapInput& in,
                                                          const std::filesystem::path& dir,
                                                          const ArtifactNaming& naming) {
  const Matrix& xy = *in.coords;
  if (xy.cols() != 2 || in.labels.size() != xy.rows() ||
      (in.activity && in.activity->rows() != xy.rows()))
    throw ShapeError("emit_featuremap: inconsistent dimensions");
  const detail::ScatterFrame f(xy);
  std::vector<std::filesystem::path> files;

  std::string s = f.axes("Class map (PCA 2-D projection; substitutes for UMAP)");
  for (std::size_t r = 0; r < xy.rows(); ++r)
    s += detail::circle(f.px(xy(r, 0)), f.py(xy(r, 1)), svg::category(in.labels[r]));
  for (std::size_t v = 0; v < in.vocabulary.size(); ++v) {
    s += svg::rect(f.kW + 10, 40 + 16.0 * v, 10, 10, svg::category(v));
    s += svg::text(f.kW + 24, 49 + 16.0 * v, in.vocabulary[v], 10);
  }
  s += "</svg>\n";
  files.push_back(dir / naming.name("featuremap", "svg"));
  svg::write_file(files.back(), s);

  for (std::size_t c : in.columns) {
    if (!in.activity || c >= in.activity->cols())
      throw ShapeError("emit_featuremap: requested column out of range");
    const Matrix& a = *in.activity;
    double scale = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) scale = std::max(scale, std::abs(a(r, c)));
    std::string p = f.axes(in.column_names.at(c) + " activity (PCA 2-D projection)");
    for (std::size_t r = 0; r < xy.rows(); ++r)
      p += detail::circle(f.px(xy(r, 0)), f.py(xy(r, 1)),
                          svg::diverging(scale > 0.0 ? a(r, c) / scale : 0.0));
    p += svg::text(f.kW + 10, 49, "scale ±" + svg::num(scale), 10);
    p += "</svg>\n";
    files.push_back(dir / naming.name("featuremap_" + in.column_names.at(c), "svg"));
    svg::write_file(files.back(), p);
  }
  return files;
}

/// Two Kaplan–Meier step curves with the logrank p-value.
inline void emit_km_plot(const KMCurve& low, const KMCurve& high, const std::string& title,
                         double p_value, double limit_days, const std::filesystem::path& path) {
  const double w = 560, h = 400, pad = 50;
  auto px = [&](double t) { return pad + t / limit_days * (w - 2 * pad); };
  auto py = [&](double s) { return h - pad - s * (h - 2 * pad); };
  auto curve = [&](const KMCurve& c, const std::string& color) {
    std::string d = "M" + svg::num(px(0)) + "," + svg::num(py(1.0));
    double prev = 1.0;
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      const double t = std::min(c.times[i], limit_days);
      d += " L" + svg::num(px(t)) + "," + svg::num(py(prev)) + " L" + svg::num(px(t)) + "," +
           svg::num(py(c.survival[i]));
      prev = c.survival[i];
    }
    d += " L" + svg::num(px(limit_days)) + "," + svg::num(py(prev));
    return "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
  };
  std::string s = svg::header(w + 120, h);
  s += svg::text(10, 18, title + " (logrank p = " + svg::num(p_value) + ")", 13);
  s += svg::line(pad, h - pad, w - pad, h - pad) + svg::line(pad, pad, pad, h - pad);
  s += svg::text(w / 2 - 20, h - 15, "days", 11);
  s += curve(low, svg::category(0)) + curve(high, svg::category(3));
  s += svg::text(w + 5, 60, "low third", 11, " fill=\"" + svg::category(0) + "\"");
  s += svg::text(w + 5, 76, "high third", 11, " fill=\"" + svg::category(3) + "\"");
  s += "</svg>\n";
  svg::write_file(path, s);
}

}  // namespace paae
