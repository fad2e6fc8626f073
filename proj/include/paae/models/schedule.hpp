#pragma once

#include <cmath>

#include "paae/error.hpp"
#include "paae/models/arch.hpp"

namespace paae {

/// Effective KL weight at epoch t.
///
/// step:   0 before Ts, β from Ts on.
/// smooth: β·logistic(10·(t − (Ts+Te)/2)/(Te − Ts)), centred between Ts and Te
///         so the weight is ≈0.0067β at Ts and ≈0.9933β at Te.
inline double beta_schedule(double t, ScheduleKind kind, double beta, double ts,
                            double te) {
  if (t < 0.0) throw InvalidArgument("beta_schedule: epoch must be >= 0");
  switch (kind) {
    case ScheduleKind::kNone:
      return beta;
    case ScheduleKind::kStep:
      return t >= ts ? beta : 0.0;
    case ScheduleKind::kSmooth: {
      if (te <= ts) throw ConfigError("smooth schedule requires Te > Ts");
      const double mid = 0.5 * (ts + te);
      const double s = 1.0 / (1.0 + std::exp(-10.0 * (t - mid) / (te - ts)));
      return beta * s;
    }
  }
  return beta;
}

inline double beta_schedule(double t, const ArchitectureConfig& arch) {
  return beta_schedule(t, arch.schedule, arch.beta, static_cast<double>(arch.ts),
                       static_cast<double>(arch.te));
}

}  // namespace paae
