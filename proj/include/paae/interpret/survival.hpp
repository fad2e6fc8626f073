#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "paae/data/clinical.hpp"
#include "paae/error.hpp"
#include "paae/metrics/metrics.hpp"

namespace paae {

struct KMCurve {
  std::vector<double> times;        // 0 then each distinct observed time
  std::vector<double> survival;     // S(t) just after each time
  std::vector<std::size_t> at_risk; // risk set entering each time
  std::vector<std::size_t> events;
  std::vector<std::size_t> censored;

  /// Right-continuous step value at t.
  double at(double t) const {
    double s = 1.0;
    for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) s = survival[i];
    return s;
  }
};

/// Product-limit estimator. Subjects censored at t stay in the risk set at t.
inline KMCurve km_estimate(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) throw InvalidArgument("km_estimate: empty input");
  std::map<double, std::pair<std::size_t, std::size_t>> by_time;  // deaths, censored
  for (const auto& r : records) {
    if (!(r.time >= 0.0)) throw InvalidArgument("km_estimate: negative or non-finite time");
    auto& e = by_time[r.time];
    (r.event ? e.first : e.second) += 1;
  }
  KMCurve c;
  c.times.push_back(0.0);
  c.survival.push_back(1.0);
  c.at_risk.push_back(records.size());
  c.events.push_back(0);
  c.censored.push_back(0);
  std::size_t n = records.size();
  double s = 1.0;
  for (const auto& [t, dc] : by_time) {
    const auto [deaths, cens] = dc;
    if (deaths > 0) s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(n);
    if (t == 0.0) {
      c.survival[0] = s;
      c.events[0] = deaths;
      c.censored[0] = cens;
    } else {
      c.times.push_back(t);
      c.survival.push_back(s);
      c.at_risk.push_back(n);
      c.events.push_back(deaths);
      c.censored.push_back(cens);
    }
    n -= deaths + cens;
  }
  return c;
}

struct LogrankResult {
  double statistic = 0.0;  // χ², 1 df
  double p_value = 1.0;
  double observed_a = 0.0;
  double expected_a = 0.0;
  double variance = 0.0;
};

/// Two-group logrank test with the hypergeometric variance.
inline LogrankResult logrank_test(const std::vector<SurvivalRecord>& a,
                                  const std::vector<SurvivalRecord>& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("logrank_test: empty group");
  struct Counts {
    double da = 0, db = 0, ca = 0, cb = 0;
  };
  std::map<double, Counts> at;
  for (const auto& r : a) (r.event ? at[r.time].da : at[r.time].ca) += 1.0;
  for (const auto& r : b) (r.event ? at[r.time].db : at[r.time].cb) += 1.0;
  double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  LogrankResult res;
  for (const auto& [t, c] : at) {
    const double d = c.da + c.db, n = na + nb;
    if (d > 0.0) {
      res.observed_a += c.da;
      res.expected_a += d * na / n;
      if (n > 1.0) res.variance += d * na * nb * (n - d) / (n * n * (n - 1.0));
    }
    na -= c.da + c.ca;
    nb -= c.db + c.cb;
  }
  if (res.variance > 0.0) {
    const double diff = res.observed_a - res.expected_a;
    res.statistic = diff * diff / res.variance;
    res.p_value = std::erfc(std::sqrt(res.statistic / 2.0));
  }
  return res;
}

struct TercileSplit {
  std::vector<std::size_t> low;   // value ≤ 1/3 quantile
  std::vector<std::size_t> high;  // value ≥ 2/3 quantile
};

/// Lower and upper thirds by linear-interpolation quantiles. Constant input
/// puts every sample in both groups.
inline TercileSplit tercile_split(const std::vector<double>& values) {
  if (values.size() < 3) throw InvalidArgument("tercile_split: need at least 3 samples");
  const double q1 = quantile_linear(values, 1.0 / 3.0);
  const double q2 = quantile_linear(values, 2.0 / 3.0);
  TercileSplit s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= q1) s.low.push_back(i);
    if (values[i] >= q2) s.high.push_back(i);
  }
  return s;
}

/// Times beyond `limit_days` are truncated to the limit and censored.
inline SurvivalTable apply_survival_window(SurvivalTable t, double limit_days = 1825.0) {
  if (!(limit_days > 0.0)) throw InvalidArgument("apply_survival_window: limit must be > 0");
  for (auto& r : t.records)
    if (r.time > limit_days) r = {limit_days, false};
  return t;
}

inline std::vector<SurvivalRecord> select_records(const std::vector<SurvivalRecord>& all,
                                                  const std::vector<std::size_t>& idx) {
  std::vector<SurvivalRecord> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all.at(i));
  return out;
}

}  // namespace paae
