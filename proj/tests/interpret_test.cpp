#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "paae/core/gradcheck.hpp"
#include "paae/core/rng.hpp"
#include "paae/interpret/cluster.hpp"
#include "paae/interpret/npw.hpp"
#include "paae/interpret/pca.hpp"
#include "paae/interpret/plots.hpp"
#include "paae/interpret/ranking.hpp"
#include "paae/interpret/survival.hpp"

namespace paae {
namespace {

namespace fs = std::filesystem;

Dense dense(Matrix w) { return {w, Matrix(1, w.cols())}; }

TEST(Npw, SingleLayerIsItsWeights) {
  LayerStack s{dense(Matrix{{0.3}, {-1.2}, {2.0}})};
  EXPECT_EQ(neural_path_weights(s), (std::vector<double>{0.3, -1.2, 2.0}));
}

TEST(Npw, HandProduct) {
  LayerStack s{dense(Matrix{{1, 0}, {0, 2}}), dense(Matrix{{1}, {1}})};
  EXPECT_EQ(neural_path_weights(s), (std::vector<double>{1, 2}));
}

TEST(Npw, Errors) {
  EXPECT_THROW(neural_path_weights(LayerStack{dense(Matrix{{1, 0}}), dense(Matrix{{1}})}),
               ShapeError);
  EXPECT_THROW(neural_path_weights(LayerStack{dense(Matrix{{1, 0}})}), ShapeError);
}

// With positive weights and positive inputs every hidden unit is active, so
// the encoder is linear around x and its Jacobian is the weight product.
TEST(Npw, EqualsFiniteDifferenceJacobianOfLinearRegime) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    ArchitectureConfig arch;
    arch.kind = ModelKind::kPAAE;
    arch.pathway_hidden_sizes = {4, 3};
    arch.encoder_layer_sizes = {2};
    arch.dropout_rate = 0.0;
    Model m = build_model(arch, 6, {{"P", {0, 2, 3, 5}}}, rng);
    for (auto& layer : m.params.pathway_encoders[0]) {
      for (double& w : layer.W.values()) w = 0.1 + rng.uniform();
      for (double& b : layer.b.values()) b = 0.1 * rng.uniform();
    }
    Matrix x(1, 6);
    for (double& v : x.values()) v = 0.5 + rng.uniform();
    const auto& cols = m.masks[0].columns;
    Matrix xm = select_columns(x, cols);
    Matrix fd = finite_diff_grad(
        [&](const Matrix& v) {
          Matrix full = x;
          for (std::size_t i = 0; i < cols.size(); ++i) full(0, cols[i]) = v[i];
          Rng r(0);
          return pathway_activity_forward(m, full, false, r)(0, 0);
        },
        xm);
    const auto npw = neural_path_weights(m.params.pathway_encoders[0]);
    EXPECT_LT(relative_error(fd, Matrix::row_vector(npw)), 1e-6);
  }
}

TEST(Anpw, Basics) {
  EXPECT_EQ(anpw({-0.5, 0.2}), (std::vector<double>{0.5, 0.2}));
  EXPECT_EQ(anpw({0, 0}), (std::vector<double>{0, 0}));
  EXPECT_EQ(anpw(anpw({-3, 4})), anpw({-3, 4}));
}

TEST(Anpw, RankingInvariantUnderJointSignFlip) {
  Rng rng(2);
  LayerStack s{Dense::init(5, 3, rng), Dense::init(3, 1, rng)};
  const auto before = anpw(neural_path_weights(s));
  for (std::size_t r = 0; r < 5; ++r) s[0].W(r, 1) = -s[0].W(r, 1);
  s[1].W(1, 0) = -s[1].W(1, 0);
  const auto after = anpw(neural_path_weights(s));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(before[i], after[i], 1e-15);
}

Model one_pathway_model(const std::vector<double>& w) {
  Rng rng(3);
  ArchitectureConfig arch;
  arch.kind = ModelKind::kPAAE;
  arch.encoder_layer_sizes = {2};
  std::vector<std::size_t> cols(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) cols[i] = i;
  Model m = build_model(arch, w.size(), {{"P", cols}}, rng);
  m.gene_names = {"DELTA", "ALPHA", "GAMMA", "BETA"};
  m.gene_names.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) m.params.pathway_encoders[0][0].W(i, 0) = w[i];
  return m;
}

TEST(TopGenes, OrderTiesAndFormat) {
  Model m = one_pathway_model({0.62, -0.7, 0.62, 0.1});
  auto top = top_genes_by_anpw(m, 0, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].gene, "ALPHA");
  EXPECT_EQ(top[1].gene, "DELTA");  // ties alphabetical
  EXPECT_EQ(top[2].gene, "GAMMA");
  EXPECT_EQ(format_gene_weight(top[1]), "DELTA +0.62");
  EXPECT_EQ(format_gene_weight(top[0]), "ALPHA -0.70");
  EXPECT_EQ(top_genes_by_anpw(m, 0, 99).size(), 4u);
}

TEST(RankPathways, OneHotFirstConstantLast) {
  std::vector<std::size_t> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  Matrix a(12, 3);
  for (std::size_t r = 0; r < 12; ++r) {
    a(r, 0) = 5.0;
    a(r, 1) = r < 9 ? static_cast<double>(y[r]) : 1.0 - static_cast<double>(y[r]);
    a(r, 2) = y[r] == 1 ? 1.0 : 0.0;
  }
  auto ranked = rank_pathways_by_mi(a, y, {"CONST", "PARTIAL", "ONEHOT"}, 5);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].name, "ONEHOT");
  EXPECT_NEAR(ranked[0].mi, std::log(2.0), 1e-12);
  EXPECT_EQ(ranked[2].name, "CONST");
  EXPECT_EQ(ranked[2].mi, 0.0);
}

TEST(Cluster, IdenticalRowsMergeFirstAtZero) {
  ClusterTree t = hierarchical_cluster(Matrix{{1, 0}, {3, 1}, {3, 1}});
  EXPECT_EQ(t.merges[0].left, 1u);
  EXPECT_EQ(t.merges[0].right, 2u);
  EXPECT_EQ(t.merges[0].height, 0.0);
}

TEST(Cluster, OrthogonalRowsDistanceOne) {
  Matrix d = pairwise_distances(Matrix{{1, 0}, {0, 2}}, DistanceMetric::kCosine);
  EXPECT_DOUBLE_EQ(d(0, 1), 1.0);
}

TEST(Cluster, HandAverageLinkage) {
  // Points 0, 1, 3 on a line: {0,1} at 1, then (3 + 2) / 2 = 2.5.
  ClusterTree t = hierarchical_cluster(Matrix{{0}, {1}, {3}}, DistanceMetric::kEuclidean);
  ASSERT_EQ(t.merges.size(), 2u);
  EXPECT_EQ(t.merges[0].left, 0u);
  EXPECT_EQ(t.merges[0].right, 1u);
  EXPECT_DOUBLE_EQ(t.merges[0].height, 1.0);
  EXPECT_EQ(t.merges[1].left, 3u);
  EXPECT_EQ(t.merges[1].right, 2u);
  EXPECT_DOUBLE_EQ(t.merges[1].height, 2.5);
  EXPECT_EQ(t.order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Cluster, TreeInvariantsOnRandomData) {
  Rng rng(5);
  Matrix x(40, 6);
  for (double& v : x.values()) v = rng.normal();
  for (auto metric : {DistanceMetric::kCosine, DistanceMetric::kEuclidean}) {
    ClusterTree t = hierarchical_cluster(x, metric);
    ASSERT_EQ(t.merges.size(), 39u);
    for (std::size_t i = 1; i < t.merges.size(); ++i)
      EXPECT_LE(t.merges[i - 1].height, t.merges[i].height);
    EXPECT_EQ(t.merges.back().size, 40u);
    std::vector<std::size_t> sorted = t.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_EQ(hierarchical_cluster(x, metric).order, t.order);
  }
}

TEST(Cluster, ZeroRowUnderCosineNamed) {
  try {
    hierarchical_cluster(Matrix{{1, 0}, {0, 0}, {1, 1}});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
  EXPECT_THROW(hierarchical_cluster(Matrix{{1, 0}}), InvalidArgument);
}

TEST(Pca, CollinearSecondComponentZero) {
  Matrix x(10, 3);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t c = 0; c < 3; ++c) x(r, c) = static_cast<double>(r) * (c + 1.0);
  Pca2d p = pca_2d(x);
  EXPECT_NEAR(p.explained[0], 1.0, 1e-12);
  EXPECT_NEAR(p.explained[1], 0.0, 1e-12);
}

TEST(Pca, FractionsOrderedAndSignRule) {
  Rng rng(6);
  Matrix x(50, 5);
  for (std::size_t r = 0; r < 50; ++r)
    for (std::size_t c = 0; c < 5; ++c) x(r, c) = rng.normal() * (5.0 - c);
  Pca2d p = pca_2d(x);
  EXPECT_GE(p.explained[0], p.explained[1]);
  EXPECT_LE(p.explained[0] + p.explained[1], 1.0 + 1e-12);
  for (std::size_t k = 0; k < 2; ++k) {
    std::size_t arg = 0;
    for (std::size_t c = 0; c < 5; ++c)
      if (std::abs(p.axes(c, k)) > std::abs(p.axes(arg, k))) arg = c;
    EXPECT_GT(p.axes(arg, k), 0.0);
  }
}

TEST(Pca, IsotropicTwoDimensionalPreservesDistances) {
  Rng rng(7);
  Matrix x(30, 2);
  for (double& v : x.values()) v = rng.normal();
  Pca2d p = pca_2d(x);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = i + 1; j < 30; ++j) {
      const double a = std::hypot(x(i, 0) - x(j, 0), x(i, 1) - x(j, 1));
      const double b = std::hypot(p.coords(i, 0) - p.coords(j, 0), p.coords(i, 1) - p.coords(j, 1));
      EXPECT_NEAR(a, b, 1e-9);
    }
}

std::vector<SurvivalRecord> recs(std::initializer_list<std::pair<double, bool>> l) {
  std::vector<SurvivalRecord> out;
  for (auto [t, e] : l) out.push_back({t, e});
  return out;
}

TEST(KaplanMeier, HandFixtures) {
  KMCurve c = km_estimate(recs({{1, true}, {2, true}}));
  EXPECT_EQ(c.at(0.0), 1.0);
  EXPECT_EQ(c.at(0.999), 1.0);
  EXPECT_EQ(c.at(1.0), 0.5);
  EXPECT_EQ(c.at(1.5), 0.5);
  EXPECT_EQ(c.at(2.0), 0.0);
  EXPECT_EQ(c.at(9.0), 0.0);
  KMCurve censored = km_estimate(recs({{1, false}, {4, false}}));
  for (double s : censored.survival) EXPECT_EQ(s, 1.0);
  KMCurve mixed = km_estimate(recs({{1, false}, {2, true}}));
  EXPECT_EQ(mixed.at(2.0), 0.0);
  EXPECT_EQ(mixed.at_risk.back(), 1u);
  EXPECT_THROW(km_estimate({}), InvalidArgument);
}

TEST(KaplanMeier, NoCensoringEqualsEmpiricalSurvival) {
  Rng rng(8);
  std::vector<SurvivalRecord> r(40);
  for (auto& x : r) x = {std::round(100.0 * rng.uniform()), true};
  KMCurve c = km_estimate(r);
  for (double t = 0; t <= 101; t += 0.5) {
    double alive = 0;
    for (const auto& x : r) alive += x.time > t;
    EXPECT_NEAR(c.at(t), alive / 40.0, 1e-12);
  }
  for (std::size_t i = 1; i < c.survival.size(); ++i) EXPECT_LE(c.survival[i], c.survival[i - 1]);
}

TEST(Logrank, HandComputedFixture) {
  // A: death 1, death 3, censor 5. B: death 2, death 4, death 6.
  auto a = recs({{1, true}, {3, true}, {5, false}});
  auto b = recs({{2, true}, {4, true}, {6, true}});
  LogrankResult r = logrank_test(a, b);
  // Event times 1,2,3,4: (n, n_a) = (6,3), (5,2), (4,2), (3,1); at 6 only B remains.
  const double expected = 1.0 * 3 / 6 + 1.0 * 2 / 5 + 1.0 * 2 / 4 + 1.0 * 1 / 3;
  const double variance = 1.0 * 3 * 3 * 5 / (36.0 * 5) + 1.0 * 2 * 3 * 4 / (25.0 * 4) +
                          1.0 * 2 * 2 * 3 / (16.0 * 3) + 1.0 * 1 * 2 * 2 / (9.0 * 2) + 0.0;
  EXPECT_EQ(r.observed_a, 2.0);
  EXPECT_EQ(r.expected_a, expected);
  EXPECT_EQ(r.variance, variance);
  EXPECT_EQ(r.statistic, (2.0 - expected) * (2.0 - expected) / variance);
  EXPECT_EQ(r.p_value, std::erfc(std::sqrt(r.statistic / 2.0)));
  EXPECT_NEAR(r.variance, 0.25 + 0.24 + 0.25 + 2.0 / 9.0, 1e-15);
}

TEST(Logrank, IdenticalGroupsAndSymmetry) {
  auto a = recs({{1, true}, {3, false}, {4, true}, {7, true}});
  LogrankResult same = logrank_test(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  auto b = recs({{2, true}, {2, true}, {9, false}});
  EXPECT_DOUBLE_EQ(logrank_test(a, b).statistic, logrank_test(b, a).statistic);
  EXPECT_DOUBLE_EQ(logrank_test(a, b).p_value, logrank_test(b, a).p_value);
  EXPECT_THROW(logrank_test({}, a), InvalidArgument);
}

TEST(Logrank, RangeOnRandomFixtures) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SurvivalRecord> a(1 + rng.below(20)), b(1 + rng.below(20));
    for (auto& x : a) x = {std::round(10 * rng.uniform()), rng.uniform() < 0.7};
    for (auto& x : b) x = {std::round(10 * rng.uniform()), rng.uniform() < 0.7};
    LogrankResult r = logrank_test(a, b);
    EXPECT_GE(r.statistic, 0.0);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(Tercile, Cases) {
  TercileSplit s = tercile_split({5, 1, 9, 2, 8, 3, 7, 4, 6});
  EXPECT_EQ(s.low, (std::vector<std::size_t>{1, 3, 5}));  // values 1, 2, 3
  EXPECT_EQ(s.high, (std::vector<std::size_t>{2, 4, 6}));  // values 9, 8, 7
  TercileSplit c = tercile_split({2, 2, 2, 2});
  EXPECT_EQ(c.low.size(), 4u);
  EXPECT_EQ(c.high.size(), 4u);
  EXPECT_THROW(tercile_split({1, 2}), InvalidArgument);
}

TEST(Tercile, DisjointAndBalancedForDistinctValues) {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(3 + rng.below(100));
    for (double& x : v) x = rng.normal();
    TercileSplit s = tercile_split(v);
    for (std::size_t i : s.low)
      EXPECT_EQ(std::count(s.high.begin(), s.high.end(), i), 0);
    const double third = static_cast<double>(v.size()) / 3.0;
    EXPECT_LE(std::abs(static_cast<double>(s.low.size()) - third), 1.0);
    EXPECT_LE(std::abs(static_cast<double>(s.high.size()) - third), 1.0);
  }
}

TEST(SurvivalWindow, TruncatesAndIsIdempotent) {
  SurvivalTable t{{"a", "b", "c"}, {{2000, true}, {100, true}, {1825, true}}};
  SurvivalTable w = apply_survival_window(t);
  EXPECT_EQ(w.records[0], (SurvivalRecord{1825, false}));
  EXPECT_EQ(w.records[1], (SurvivalRecord{100, true}));
  EXPECT_EQ(w.records[2], (SurvivalRecord{1825, true}));
  EXPECT_EQ(apply_survival_window(w).records, w.records);
  EXPECT_THROW(apply_survival_window(t, 0.0), InvalidArgument);
}

class PlotTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("paae_plot_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static boost::property_tree::ptree parse_xml(const fs::path& p) {
    boost::property_tree::ptree t;
    boost::property_tree::read_xml(p.string(), t);
    return t;
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }
  fs::path dir_;
};

TEST_F(PlotTest, ClustermapSvgParsesAndCsvIsReordered) {
  Matrix a{{1, 0, 0.5}, {0.9, 0.1, 0.4}, {0, 1, -0.5}};
  ClustermapInput in;
  in.values = &a;
  in.sample_ids = {"s0", "s1", "s2"};
  in.labels = {0, 0, 1};
  in.vocabulary = {"A<x>", "B"};
  in.column_names = {"P0", "P1", "P2"};
  in.row_tree = hierarchical_cluster(a, DistanceMetric::kEuclidean);
  in.col_tree = unclustered(3);
  in.col_tree.order = {2, 0, 1};
  in.title = "test & check";
  const fs::path svg = dir_ / "clustermap-d-m-a.svg";
  emit_clustermap(in, svg);
  EXPECT_NO_THROW(parse_xml(svg));
  std::ostringstream want;
  want.precision(17);
  want << "sample,label,P2,P0,P1\n";
  for (std::size_t r : in.row_tree.order)
    want << in.sample_ids[r] << ',' << in.vocabulary[in.labels[r]] << ',' << a(r, 2) << ','
         << a(r, 0) << ',' << a(r, 1) << '\n';
  EXPECT_EQ(slurp(dir_ / "clustermap-d-m-a.csv"), want.str());
  const std::string first = slurp(svg);
  emit_clustermap(in, svg);
  EXPECT_EQ(slurp(svg), first);
  EXPECT_NE(first.find(svg::category(1)), std::string::npos);
}

TEST_F(PlotTest, FeaturemapPanelsShareViewBox) {
  Rng rng(11);
  Matrix xy(20, 2), a(20, 6);
  for (double& v : xy.values()) v = rng.normal();
  for (double& v : a.values()) v = rng.normal();
  for (std::size_t r = 0; r < 20; ++r) a(r, 3) = 2.0;
  FeaturemapInput in;
  in.coords = &xy;
  in.activity = &a;
  in.labels.assign(20, 0);
  in.vocabulary = {"X"};
  in.column_names = {"P0", "P1", "P2", "P3", "P4", "P5"};
  in.columns = {0, 1, 2, 3, 4};
  auto files = emit_featuremap(in, dir_, {"ds", "PAAE", "a"});
  ASSERT_EQ(files.size(), 6u);
  EXPECT_EQ(files[0].filename(), "featuremap-ds-PAAE-a.svg");
  std::string viewbox;
  for (const auto& f : files) {
    auto t = parse_xml(f);
    const std::string vb = t.get<std::string>("svg.<xmlattr>.viewBox");
    if (viewbox.empty()) viewbox = vb;
    EXPECT_EQ(vb, viewbox);
  }
  // Constant column → every point the same color.
  const std::string p3 = slurp(files[4]);
  EXPECT_EQ(p3.find(svg::diverging(0.0)), std::string::npos);
  std::size_t count = 0;
  for (std::size_t pos = 0; (pos = p3.find(svg::diverging(1.0), pos)) != std::string::npos; ++pos)
    ++count;
  EXPECT_EQ(count, 20u);
}

TEST_F(PlotTest, KmPlotParses) {
  KMCurve a = km_estimate(recs({{100, true}, {400, false}}));
  KMCurve b = km_estimate(recs({{50, true}, {3000, true}}));
  emit_km_plot(a, b, "TP53", 0.04, 1825, dir_ / "km.svg");
  EXPECT_NO_THROW(parse_xml(dir_ / "km.svg"));
}

}  // namespace
}  // namespace paae
