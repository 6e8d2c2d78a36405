#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// recompute sums directly with std::pow rather than through the library's
// log-scaled accumulators.

#include <cmath>
#include <string>
#include <vector>

#include "ltrc/ltrc.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(LTRC_DATA_DIR) + "/" + name; }

inline ltrc::Dataset transformers() {
  static const ltrc::Dataset d = ltrc::to_dataset(ltrc::parse_transformer_csv(data_path("transformers.csv")),
                                                  ltrc::kTransformerTruncationYear, ltrc::kTransformerCensorYear,
                                                  ltrc::kTransformerScale);
  return d;
}

inline ltrc::Observation obs(double t, ltrc::Cause delta, double tau_R, double tau_L = 0.0) {
  ltrc::Observation o;
  o.t = t;
  o.delta = delta;
  o.tau_R = tau_R;
  o.tau_L = tau_L;
  o.nu = tau_L > 0.0 ? ltrc::Truncation::truncated : ltrc::Truncation::none;
  return o;
}

/// w2 computed term by term.
inline double naive_w2(const ltrc::Dataset& d, double a) {
  double s = 0.0;
  for (const auto& o : d.observations()) {
    s += std::pow(o.t, a);
    if (o.truncated()) s -= std::pow(o.tau_L, a);
  }
  return s;
}

inline double naive_log_sum(const ltrc::Dataset& d, int cause) {
  double s = 0.0;
  for (const auto& o : d.observations()) {
    if (cause == 0 ? o.failed() : ltrc::to_int(o.delta) == cause) s += std::log(o.t);
  }
  return s;
}

/// Profile m log a - m log w2(a) + a * log_sum, for the common model (cause 0)
/// or one cause.
inline double naive_profile(const ltrc::Dataset& d, int cause, double a) {
  const double m = cause == 0 ? static_cast<double>(d.m()) : static_cast<double>(d.failures(cause));
  return m * std::log(a) - m * std::log(naive_w2(d, a)) + a * naive_log_sum(d, cause);
}

struct GridArgmax {
  double argmax;
  double step;
};

/// Argmax over `points` equally spaced shapes in [lo, hi].
inline GridArgmax grid_argmax(const ltrc::Dataset& d, int cause, double lo, double hi, std::size_t points = 10000) {
  const double step = (hi - lo) / static_cast<double>(points - 1);
  double best = lo, best_v = -INFINITY;
  for (std::size_t i = 0; i < points; ++i) {
    const double a = lo + step * static_cast<double>(i);
    const double v = naive_profile(d, cause, a);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return {best, step};
}

/// Small simulated LTRC dataset with both causes present.
inline ltrc::Dataset random_dataset(ltrc::Rng& rng, std::size_t n_min, std::size_t n_max) {
  std::uniform_int_distribution<std::size_t> size(n_min, n_max);
  std::uniform_real_distribution<double> shape(0.6, 3.0), frac(0.0, 0.5);
  for (;;) {
    ltrc::SimConfig cfg;
    cfg.n = size(rng);
    const double a = shape(rng);
    // scales chosen so that a typical lifetime is a few years
    cfg.params = ltrc::LatentModel::common(a, std::pow(4.0, -a) * (0.5 + ltrc::uniform_open(rng)),
                                           std::pow(4.0, -a) * (0.5 + ltrc::uniform_open(rng)));
    cfg.truncation_fraction = frac(rng);
    ltrc::Dataset d = ltrc::generate_dataset(cfg, rng);
    if (d.m1() > 0 && d.m2() > 0) return d;
  }
}

}  // namespace testing_support
