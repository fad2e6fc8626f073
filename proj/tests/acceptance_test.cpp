// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "paae/cli/commands.hpp"
#include "paae/core/gradcheck.hpp"
#include "paae/interpret/npw.hpp"
#include "paae/interpret/survival.hpp"
#include "paae/models/loss.hpp"
#include "paae/models/schedule.hpp"
#include "paae/pipeline/experiment.hpp"
#include "paae/pipeline/synth.hpp"

namespace {

using namespace paae;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

/// Collects failed checks for one criterion.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ |= !ok;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return !failed_; }
  std::string summary() const {
    std::string out;
    for (const auto& s : failed_ ? failures_ : notes_) out += (out.empty() ? "" : "; ") + s;
    return out;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_, notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

double probe(const Matrix& m, const Matrix& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * c[i];
  return s;
}

std::vector<PathwayMask> random_masks(std::size_t genes, std::size_t count, Rng& rng) {
  std::vector<PathwayMask> masks;
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<std::size_t> cols(genes);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    rng.shuffle(cols);
    cols.resize(2 + rng.below(3));
    std::sort(cols.begin(), cols.end());
    masks.push_back({"P" + std::to_string(j), cols});
  }
  return masks;
}

// ---------------------------------------------------------------- 1

void gradient_suite(Checker& ck) {
  const auto t0 = Clock::now();
  Rng rng(1);
  const double tol = 1e-3;
  double worst = 0.0;
  auto record = [&](double err, const std::string& what) {
    worst = std::max(worst, err);
    ck.expect(err < tol, what + " rel err " + fmt("%.2e", err));
  };

  for (int i = 0; i < 50; ++i) {
    Matrix x = random_matrix(3, 4, rng), W = random_matrix(4, 2, rng), b = random_matrix(1, 2, rng),
           c = random_matrix(3, 2, rng);
    auto g = affine_backward(x, W, c);
    record(relative_error(g.x, finite_diff_grad([&](const Matrix& m) { return probe(affine_forward(m, W, b), c); }, x)), "affine dx");
    record(relative_error(g.W, finite_diff_grad([&](const Matrix& m) { return probe(affine_forward(x, m, b), c); }, W)), "affine dW");
    record(relative_error(g.b, finite_diff_grad([&](const Matrix& m) { return probe(affine_forward(x, W, m), c); }, b)), "affine db");

    Matrix r = random_matrix(3, 3, rng), rc = random_matrix(3, 3, rng);
    for (double& v : r.values())
      if (std::abs(v) < 1e-3) v = 0.5;
    record(relative_error(relu_backward(r, rc),
                          finite_diff_grad([&](const Matrix& m) { return probe(relu_forward(m), rc); }, r)),
           "relu");

    Matrix d = random_matrix(3, 3, rng), dc = random_matrix(3, 3, rng);
    const std::uint64_t seed = rng.next_u64();
    Rng dr(seed);
    const Matrix mask = dropout(d, 0.4, true, dr).mask;
    auto fd = [&](const Matrix& m) {
      Rng r2(seed);
      return probe(dropout(m, 0.4, true, r2).output, dc);
    };
    record(relative_error(dropout_backward(mask, dc), finite_diff_grad(fd, d)), "dropout");

    Matrix x1 = random_matrix(3, 5, rng), xh = random_matrix(3, 5, rng);
    record(relative_error(mse_loss(x1, xh).grad,
                          finite_diff_grad([&](const Matrix& m) { return mse_loss(x1, m).value; }, xh)),
           "mse");

    Matrix mu = random_matrix(3, 2, rng), lv = random_matrix(3, 2, rng);
    auto kl = kl_gaussian(mu, lv);
    record(relative_error(kl.grad_mu, finite_diff_grad([&](const Matrix& m) { return kl_gaussian(m, lv).value; }, mu)), "kl dmu");
    record(relative_error(kl.grad_logvar, finite_diff_grad([&](const Matrix& m) { return kl_gaussian(mu, m).value; }, lv)), "kl dlogvar");
  }

  std::size_t composite = 0;
  for (ModelKind kind : {ModelKind::kAE, ModelKind::kPAAE, ModelKind::kVAE, ModelKind::kPAVAE}) {
    std::size_t checked = 0;
    for (int trial = 0; checked < 50 && trial < 400; ++trial) {
      const std::size_t genes = 6 + rng.below(5);
      ArchitectureConfig a;
      a.kind = kind;
      a.pathway_hidden_sizes = trial % 2 ? std::vector<std::size_t>{3} : std::vector<std::size_t>{};
      a.encoder_layer_sizes = {4, 2};
      a.dropout_rate = 0.3;
      Model m = build_model(a, genes, random_masks(genes, 1 + rng.below(3), rng), rng);
      for_each_tensor(m.params, [&](Matrix& t) {
        for (double& v : t.values()) v += 0.1 * rng.normal();
      });
      Matrix x = random_matrix(4, genes, rng);
      const double beta = 0.5 + rng.uniform();
      const std::uint64_t seed = rng.next_u64();

      ForwardCache cache;
      Rng rc(seed);
      forward(m, x, true, rc, &cache);
      double closest = INFINITY;
      auto scan = [&](const StackCache& c) {
        for (const auto& p : c.pre)
          for (double v : p.values()) closest = std::min(closest, std::abs(v));
      };
      for (const auto& c : cache.pathways) scan(c);
      scan(cache.encoder);
      scan(cache.decoder);
      if (closest < 1e-3) continue;

      std::vector<double> flat;
      for_each_tensor(m.params, [&](const Matrix& t) { flat.insert(flat.end(), t.values().begin(), t.values().end()); });
      Rng r0(seed);
      auto lg = loss_and_gradients(m, x, beta, true, r0);
      std::vector<double> analytic;
      for_each_tensor(lg.grads, [&](const Matrix& t) { analytic.insert(analytic.end(), t.values().begin(), t.values().end()); });
      auto f = [&](const Matrix& th) {
        Model p = m;
        std::size_t k = 0;
        for_each_tensor(p.params, [&](Matrix& t) {
          for (double& v : t.values()) v = th[k++];
        });
        Rng r(seed);
        return compute_loss(kind, x, forward(p, x, true, r), beta).total;
      };
      record(relative_error(Matrix::row_vector(analytic), finite_diff_grad(f, Matrix::row_vector(flat))),
             to_string(kind) + " composite");
      ++checked;
    }
    ck.expect(checked == 50, to_string(kind) + ": only " + std::to_string(checked) + " instances");
    composite += checked;
  }

  const double secs = seconds_since(t0);
  ck.expect(secs < 30.0, "runtime " + fmt("%.1f s", secs));
  ck.note("400 layer/loss checks + " + std::to_string(composite) + " composite instances, max rel err " +
          fmt("%.1e", worst) + ", " + fmt("%.1f s", secs));
}

// ---------------------------------------------------------------- 2

void schedule_contract(Checker& ck) {
  const double ts = 32, te = 160;
  for (double beta : {0.5, 1.0, 5.0, 100.0}) {
    for (int t = 0; t < 1024; ++t) {
      const double s = beta_schedule(t, ScheduleKind::kStep, beta, ts, te);
      ck.expect(s == (t < ts ? 0.0 : beta), "step at t=" + std::to_string(t));
    }
    ck.expect(beta_schedule(ts, ScheduleKind::kSmooth, beta, ts, te) <= 0.01 * beta, "smooth at Ts");
    ck.expect(beta_schedule(te, ScheduleKind::kSmooth, beta, ts, te) >= 0.99 * beta, "smooth at Te");
    ck.expect(std::abs(beta_schedule((ts + te) / 2, ScheduleKind::kSmooth, beta, ts, te) - beta / 2) <=
                  1e-12 * beta,
              "smooth midpoint");
    double prev = -INFINITY;
    for (int t = 0; t < 1024; ++t) {
      const double s = beta_schedule(t, ScheduleKind::kSmooth, beta, ts, te);
      ck.expect(s >= prev, "smooth decreases at t=" + std::to_string(t));
      prev = s;
    }
  }
  ck.note("step exact on 1024 epochs; smooth within 1% at Ts/Te, beta/2 at midpoint, monotone");
}

// ---------------------------------------------------------------- 3

void masking_invariant(Checker& ck) {
  Rng rng(3);
  std::size_t perturbations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t genes = 12;
    auto masks = random_masks(genes, 1 + rng.below(3), rng);
    std::vector<bool> covered(genes, false);
    for (const auto& m : masks)
      for (auto c : m.columns) covered[c] = true;
    std::vector<std::size_t> outside;
    for (std::size_t g = 0; g < genes; ++g)
      if (!covered[g]) outside.push_back(g);

    ArchitectureConfig a;
    a.kind = trial % 2 ? ModelKind::kPAAE : ModelKind::kPAVAE;
    a.pathway_hidden_sizes = trial % 3 ? std::vector<std::size_t>{4} : std::vector<std::size_t>{};
    a.encoder_layer_sizes = {4, 2};
    Model m = build_model(a, genes, masks, rng);
    Matrix x = random_matrix(5, genes, rng);
    Rng r0(0);
    const Matrix before = pathway_activity_forward(m, x, false, r0);
    Matrix y = x;
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (auto g : outside) y(r, g) += 1e3 * rng.normal();
    Rng r1(0);
    ck.expect(pathway_activity_forward(m, y, false, r1) == before, "a changed in trial " + std::to_string(trial));
    ++perturbations;
  }
  ck.note(std::to_string(perturbations) + " perturbations of off-pathway genes, a bit-identical");
}

// ---------------------------------------------------------------- 4

void synthetic_end_to_end(Checker& ck) {
  const auto t0 = Clock::now();
  SynthData d = generate_synthetic(SynthConfig{});
  const auto masks = resolve_pathways(d.pathways, d.train.gene_names).masks;
  auto [xtr, xte] = normalize_pair(d.train, d.test, {});
  const EncodedLabels ytr = encode_labels(d.train_labels);
  const EncodedLabels yte = encode_labels(d.test_labels, ytr.vocabulary);

  ArchitectureConfig arch;
  arch.kind = ModelKind::kPAAE;
  arch.dropout_rate = 0.2;
  TrainConfig train;
  train.epochs = 1024;
  train.learning_rate = 1e-3;
  train.batch_size = 128;
  Rng rng(1);
  Model paae = build_model(arch, xtr.cols(), masks, rng);
  fit(paae, xtr, train, rng);

  double baseline = 0.0;
  for (std::size_t c = 0; c < xte.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < xtr.rows(); ++r) mean += xtr(r, c);
    mean /= static_cast<double>(xtr.rows());
    for (std::size_t r = 0; r < xte.rows(); ++r) baseline += (xte(r, c) - mean) * (xte(r, c) - mean);
  }
  baseline /= static_cast<double>(xte.size());
  const double mse = reconstruction_mse(paae, xte);
  ck.expect(mse <= 0.5 * baseline, "(a) mse " + fmt("%.3f", mse) + " vs baseline " + fmt("%.3f", baseline));
  ck.note("(a) test MSE " + fmt("%.3f", mse) + " / mean baseline " + fmt("%.3f", baseline));

  for (Space space : {Space::kA, Space::kZ}) {
    const Matrix rtr = extract_representation(paae, xtr, space);
    const Matrix rte = extract_representation(paae, xte, space);
    ClassifierConfig lr;
    Rng cr(2);
    const double auc = roc_auc_macro(yte.y, classify(lr, rtr, ytr.y, ytr.vocabulary, rte, cr));
    // Control runs permute the labels of both splits, so neither carries class signal.
    std::vector<double> control;
    for (std::uint64_t s = 0; s < 5; ++s) {
      std::vector<std::size_t> shuffled_tr = ytr.y, shuffled_te = yte.y;
      Rng sr(100 + s);
      sr.shuffle(shuffled_tr);
      sr.shuffle(shuffled_te);
      control.push_back(
          roc_auc_macro(shuffled_te, classify(lr, rtr, shuffled_tr, ytr.vocabulary, rte, cr)));
    }
    const double ctl = median_iqr(control).median;
    const std::string name = to_string(space);
    ck.expect(auc >= 0.90, "(b) " + name + " AUC " + fmt("%.3f", auc));
    ck.expect(ctl <= 0.55, "(b) " + name + " shuffled AUC " + fmt("%.3f", ctl));
    ck.note("(b) " + name + " AUC " + fmt("%.3f", auc) + " vs shuffled " + fmt("%.3f", ctl));
  }

  ArchitectureConfig dense = arch;
  dense.kind = ModelKind::kAE;
  Rng r2(1);
  const std::size_t p_paae = count_params(paae.params);
  const std::size_t p_ae = count_params(build_model(dense, xtr.cols(), {}, r2).params);
  ck.expect(p_paae < p_ae, "(c) params " + std::to_string(p_paae) + " vs " + std::to_string(p_ae));
  ck.note("(c) #param PAAE " + std::to_string(p_paae) + " < AE " + std::to_string(p_ae));

  const double secs = seconds_since(t0);
  ck.expect(secs < 300.0, "runtime " + fmt("%.1f s", secs));
  ck.note(fmt("%.1f s", secs));
}

// ---------------------------------------------------------------- 5

double brute_auc(const std::vector<bool>& pos, const std::vector<double>& s) {
  double num = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!pos[i] || pos[j]) continue;
      pairs += 1.0;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  return num / pairs;
}

double brute_macro(const std::vector<std::size_t>& y, const Matrix& s) {
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < s.cols(); ++c) {
    std::vector<bool> pos(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) pos[i] = y[i] == c;
    const auto npos = std::count(pos.begin(), pos.end(), true);
    if (npos == 0 || npos == static_cast<long>(pos.size())) continue;
    total += brute_auc(pos, s.column(c));
    ++used;
  }
  return total / static_cast<double>(used);
}

// Two-sided p by enumerating every assignment of the pooled values to group a.
double enumerate_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  auto u_of = [&](const std::vector<bool>& in_a) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (in_a[i] && !in_a[j]) u += pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);
    return u;
  };
  std::vector<bool> observed(n, false);
  for (std::size_t i = 0; i < na; ++i) observed[i] = true;
  const double center = 0.5 * static_cast<double>(na * (n - na));
  const double dev = std::abs(u_of(observed) - center);
  std::vector<bool> sel(n, false);
  std::fill(sel.end() - static_cast<long>(na), sel.end(), true);
  double hit = 0.0, total = 0.0;
  do {
    total += 1.0;
    if (std::abs(u_of(sel) - center) >= dev - 1e-9) hit += 1.0;
  } while (std::next_permutation(sel.begin(), sel.end()));
  return std::min(1.0, hit / total);
}

std::vector<SurvivalRecord> recs(std::initializer_list<std::pair<double, bool>> l) {
  std::vector<SurvivalRecord> out;
  for (auto [t, e] : l) out.push_back({t, e});
  return out;
}

void metric_oracles(Checker& ck) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(97), k = 2 + rng.below(4);
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = i < k ? i : rng.below(k);
    Matrix s(n, k);
    for (double& v : s.values()) v = std::round(10.0 * rng.uniform()) / 10.0;
    ck.expect(roc_auc_macro(y, s) == brute_macro(y, s), "AUC fixture " + std::to_string(trial));
  }

  const WilcoxonResult hand = wilcoxon_rank_sum({1, 2, 3}, {4, 5, 6});
  ck.expect(hand.exact && std::abs(hand.p_value - 0.1) < 1e-12, "[1,2,3] vs [4,5,6] p " + fmt("%.6f", hand.p_value));
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t na = 1 + rng.below(6), nb = 1 + rng.below(12 - na);
    std::vector<double> a(na), b(nb);
    for (double& v : a) v = static_cast<double>(rng.below(6));
    for (double& v : b) v = static_cast<double>(rng.below(6));
    const WilcoxonResult r = wilcoxon_rank_sum(a, b);
    ck.expect(r.exact && std::abs(r.p_value - enumerate_p(a, b)) < 1e-12,
              "Wilcoxon fixture " + std::to_string(trial));
  }

  const KMCurve c = km_estimate(recs({{1, true}, {2, true}}));
  ck.expect(c.at(0.999) == 1.0 && c.at(1.0) == 0.5 && c.at(1.5) == 0.5 && c.at(2.0) == 0.0, "KM two deaths");
  const KMCurve mixed = km_estimate(recs({{1, false}, {2, true}}));
  ck.expect(mixed.at(1.5) == 1.0 && mixed.at(2.0) == 0.0, "KM censor then death");
  const KMCurve three = km_estimate(recs({{1, true}, {3, false}, {5, true}, {5, true}}));
  ck.expect(three.at(1.0) == 3.0 / 4.0 && three.at(5.0) == 0.0, "KM tied deaths");

  const LogrankResult lr = logrank_test(recs({{1, true}, {3, true}, {5, false}}),
                                        recs({{2, true}, {4, true}, {6, true}}));
  const double expected = 1.0 * 3 / 6 + 1.0 * 2 / 5 + 1.0 * 2 / 4 + 1.0 * 1 / 3;
  const double variance = 1.0 * 3 * 3 * 5 / (36.0 * 5) + 1.0 * 2 * 3 * 4 / (25.0 * 4) +
                          1.0 * 2 * 2 * 3 / (16.0 * 3) + 1.0 * 1 * 2 * 2 / (9.0 * 2) + 0.0;
  ck.expect(lr.observed_a == 2.0 && lr.expected_a == expected && lr.variance == variance, "logrank O/E/V");
  const double stat = (2.0 - expected) * (2.0 - expected) / variance;
  ck.expect(lr.statistic == stat && lr.p_value == std::erfc(std::sqrt(stat / 2.0)), "logrank statistic");
  ck.note("200 AUC fixtures exact, 200 Wilcoxon enumerations, p([1,2,3],[4,5,6]) = " +
          fmt("%.3f", hand.p_value) + ", KM/logrank bit-exact");
}

// ---------------------------------------------------------------- 6

void npw_jacobian(Checker& ck) {
  Rng rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ArchitectureConfig arch;
    arch.kind = ModelKind::kPAAE;
    arch.pathway_hidden_sizes = std::vector<std::size_t>(1 + rng.below(3), 0);
    for (auto& h : arch.pathway_hidden_sizes) h = 2 + rng.below(4);
    arch.encoder_layer_sizes = {2};
    arch.dropout_rate = 0.0;
    const std::size_t genes = 10;
    Model m = build_model(arch, genes, random_masks(genes, 1, rng), rng);
    // Positive weights and inputs keep every hidden unit active, so the
    // encoder is exactly linear in a neighbourhood of x.
    for (auto& layer : m.params.pathway_encoders[0]) {
      for (double& w : layer.W.values()) w = 0.1 + rng.uniform();
      for (double& b : layer.b.values()) b = 0.1 * rng.uniform();
    }
    Matrix x(1, genes);
    for (double& v : x.values()) v = 0.5 + rng.uniform();
    const auto& cols = m.masks[0].columns;
    const Matrix fd = finite_diff_grad(
        [&](const Matrix& v) {
          Matrix full = x;
          for (std::size_t i = 0; i < cols.size(); ++i) full(0, cols[i]) = v[i];
          Rng r(0);
          return pathway_activity_forward(m, full, false, r)(0, 0);
        },
        select_columns(x, cols));
    const double err = relative_error(fd, Matrix::row_vector(neural_path_weights(m.params.pathway_encoders[0])));
    worst = std::max(worst, err);
    ck.expect(err < 1e-6, "encoder " + std::to_string(trial) + " rel err " + fmt("%.2e", err));
  }
  ck.note("20 encoders, max rel err " + fmt("%.1e", worst));
}

// ---------------------------------------------------------------- 7, 8

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("paae_accept_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PAAE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SynthConfig small_synth() {
  SynthConfig c;
  c.classes = 3;
  c.factors = 4;
  c.pathways = 6;
  c.genes = 60;
  c.off_pathway = 20;
  c.train_samples = 90;
  c.test_samples = 60;
  return c;
}

void determinism(Checker& ck) {
  const fs::path dir = scratch("determinism");
  cmd_synth(small_synth(), dir / "fx");
  const std::string cfg = (dir / "fx" / RunFiles::kSynthConfig).string();
  const fs::path log = dir / "log.txt";
  const std::string common = " -c " + cfg + " --threads 1 --seed 7 --epochs 20 --log-level warn";
  for (const char* run : {"a", "b"})
    ck.expect(run_cli("train" + common + " -o " + (dir / run).string(), log) == 0, "train failed: " + slurp(log));
  const std::string ca = slurp(dir / "a" / RunFiles::kCheckpoint), cb = slurp(dir / "b" / RunFiles::kCheckpoint);
  ck.expect(!ca.empty() && ca == cb, "checkpoints differ");

  for (const char* run : {"va", "vb"})
    ck.expect(run_cli("validate" + common + " --repeats 4 -o " + (dir / run).string(), log) == 0,
              "validate failed: " + slurp(log));
  const std::string ra = slurp(dir / "va" / RunFiles::kReportJson), rb = slurp(dir / "vb" / RunFiles::kReportJson);
  ck.expect(!ra.empty() && ra == rb, "run reports differ");
  std::size_t repeats = 0;
  if (!ra.empty()) {
    const nlohmann::json report = nlohmann::json::parse(ra);
    for (const auto& run : report.at("runs")) repeats = run.at("repeats").size();
  }
  ck.expect(repeats == 4, "expected 4 repeats, got " + std::to_string(repeats));
  ck.note("checkpoints " + std::to_string(ca.size()) + " bytes identical; run reports with " +
          std::to_string(repeats) + " repeats identical");
  fs::remove_all(dir);
}

// Student-t(1) draws give a Cauchy-tailed expression matrix.
void make_heavy_tailed(ExpressionTable& t, Rng& rng) {
  for (double& v : t.values.values()) v += 0.5 * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
}

bool all_metrics_finite(const nlohmann::json& metrics) {
  for (const auto& [k, v] : metrics.items())
    if (!v.is_number() || !std::isfinite(v.get<double>())) return false;
  return true;
}

void divergence_handling(Checker& ck) {
  const fs::path dir = scratch("divergence");
  SynthConfig sc = small_synth();
  cmd_synth(sc, dir / "fx");
  SynthData d = generate_synthetic(sc);
  Rng rng(8);
  make_heavy_tailed(d.train, rng);
  make_heavy_tailed(d.test, rng);
  write_expression_tsv(dir / "fx" / SynthFiles::kTrainExpression, d.train);
  write_expression_tsv(dir / "fx" / SynthFiles::kTestExpression, d.test);

  const std::string cfg = (dir / "fx" / RunFiles::kSynthConfig).string();
  const fs::path log = dir / "log.txt";
  const std::string unstable =
      " -c " + cfg + " --model PAVAE --beta 100 --schedule none --epochs 300 --lr 0.05 --threads 1";
  const std::regex names_epoch("diverged at epoch [0-9]+");
  std::vector<std::string> outcomes;

  const int train_code = run_cli("train" + unstable + " -o " + (dir / "train").string(), log);
  if (train_code == 0) {
    const Model m = load_checkpoint(dir / "train" / RunFiles::kCheckpoint);
    bool finite = true;
    for_each_tensor(m.params, [&](const Matrix& t) { finite &= t.all_finite(); });
    ck.expect(finite, "train exited 0 with non-finite parameters");
    outcomes.push_back("train converged");
  } else {
    ck.expect(train_code == 3, "train exit code " + std::to_string(train_code));
    ck.expect(std::regex_search(slurp(log), names_epoch), "train error does not name the epoch");
    ck.expect(!fs::exists(dir / "train" / RunFiles::kCheckpoint), "checkpoint written after divergence");
    outcomes.push_back("train exit 3");
  }

  const int val_code = run_cli("validate" + unstable + " --repeats 4 -o " + (dir / "val").string(), log);
  const std::string val_log = slurp(log);
  std::size_t diverged = 0, finite = 0, silent = 0;
  if (fs::exists(dir / "val" / RunFiles::kReportJson)) {
    const nlohmann::json report = nlohmann::json::parse(slurp(dir / "val" / RunFiles::kReportJson));
    for (const auto& run : report.at("runs"))
      for (const auto& rep : run.at("repeats")) {
        if (rep.at("diverged").get<bool>()) {
          ++diverged;
          ck.expect(std::regex_search(rep.at("error").get<std::string>(), names_epoch),
                    "diverged repeat without epoch");
        } else if (all_metrics_finite(rep.at("metrics"))) {
          ++finite;
        } else {
          ++silent;
        }
      }
  }
  ck.expect(silent == 0, std::to_string(silent) + " repeats with unflagged non-finite metrics");
  ck.expect(diverged + finite > 0, "validate produced no report (exit " + std::to_string(val_code) + ")");
  if (diverged > 0) {
    ck.expect(val_code == 3, "validate exit code " + std::to_string(val_code) + " with diverged repeats");
    ck.expect(std::regex_search(val_log, names_epoch), "validate error does not name the epoch");
  } else {
    ck.expect(val_code == 0, "validate exit code " + std::to_string(val_code));
  }
  outcomes.push_back("validate exit " + std::to_string(val_code) + " (" + std::to_string(diverged) +
                     " diverged, " + std::to_string(finite) + " finite repeats)");
  ck.note(outcomes[0] + "; " + outcomes[1]);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- 9

void data_path_fidelity(Checker& ck) {
  ExpressionTable dup;
  dup.sample_ids = {"s0"};
  dup.gene_names = {"G", "H", "G"};
  dup.values = Matrix{{1, 5, 2}};
  dup.scale = ValueScale::log2_plus1();
  const ExpressionTable merged = merge_duplicate_genes(dup);
  ck.expect(merged.gene_count() == 2 && std::abs(merged.values(0, 0) - std::log2(3.0)) <= 1e-12,
            "merged value " + fmt("%.15f", merged.values(0, 0)));

  ExpressionTable raw;
  raw.sample_ids = {"s0"};
  raw.gene_names = {"A", "B"};
  raw.values = Matrix{{1, 3}};
  raw.scale = ValueScale::linear();
  ck.expect(per_million_linear(raw).values == Matrix{{250000.0, 750000.0}}, "IPM of [1,3]");

  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    ExpressionTable fit, test;
    fit.gene_names = test.gene_names = {"A", "B", "C"};
    const std::size_t nf = 1 + rng.below(20);
    fit.values = Matrix(nf, 3);
    test.values = Matrix(10, 3);
    for (std::size_t i = 0; i < nf; ++i) fit.sample_ids.push_back("f" + std::to_string(i));
    for (std::size_t i = 0; i < 10; ++i) test.sample_ids.push_back("t" + std::to_string(i));
    for (double& x : fit.values.values()) x = std::round(4.0 * rng.normal());
    for (double& x : test.values.values()) x = 8.0 * rng.normal();
    const Normalizer n = fit_normalizer(fit, NormalizerKind::kPercentile);
    for (const ExpressionTable* t : {&fit, &test}) {
      const ExpressionTable out = apply_normalizer(n, *t);
      for (double x : out.values.values())
        ck.expect(x >= 0.0 && x <= 1.0, "percentile output " + fmt("%g", x));
    }
  }
  ck.note("merge -> log2(3), IPM [250000, 750000], 100 percentile tables within [0,1]");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<void(Checker&)>>> criteria{
      {"gradient suite", gradient_suite},
      {"schedule contract", schedule_contract},
      {"masking invariant", masking_invariant},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"metric oracles", metric_oracles},
      {"NPW Jacobian equivalence", npw_jacobian},
      {"determinism", determinism},
      {"divergence handling", divergence_handling},
      {"data-path fidelity", data_path_fidelity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Checker ck;
    try {
      criteria[i].second(ck);
    } catch (const std::exception& e) {
      ck.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("%s  %zu. %s: %s\n", ck.ok() ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                ck.summary().c_str());
    std::fflush(stdout);
    failed += !ck.ok();
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
