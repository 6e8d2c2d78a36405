#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "ltrc/errors.hpp"
#include "ltrc/numerics.hpp"

namespace ltrc {

enum class IntervalMethod { bc_bootstrap, percentile_bootstrap, symmetric_credible, hpd_credible };

inline std::string_view to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::bc_bootstrap: return "bc_bootstrap";
    case IntervalMethod::percentile_bootstrap: return "percentile_bootstrap";
    case IntervalMethod::symmetric_credible: return "symmetric_credible";
    case IntervalMethod::hpd_credible: return "hpd_credible";
  }
  return "unknown";
}

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
  IntervalMethod method = IntervalMethod::percentile_bootstrap;
  bool degenerate = false;  // zero bootstrap variance

  double length() const { return upper - lower; }
  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Display helper: the lower bound raised to zero for positive parameters.
inline ConfidenceInterval clamp_at_zero(ConfidenceInterval ci) {
  ci.lower = std::max(ci.lower, 0.0);
  ci.upper = std::max(ci.upper, 0.0);
  return ci;
}

namespace detail {

/// Greatest integer <= x, tolerant of x landing a few ulps below an integer.
inline std::size_t floor_index(double x) {
  return static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, std::abs(x))));
}

inline void require_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw domain_error("interval level must lie in (0, 1)");
}

}  // namespace detail

/// Order-statistic interval (x_([B beta/2]), x_([B(1 - beta/2)])), 1-based
/// indices clamped to [1, B], with beta = 1 - level.
inline ConfidenceInterval percentile_interval(std::span<const double> estimates, double level) {
  detail::require_level(level);
  if (estimates.size() < 2) throw domain_error("percentile interval needs at least two estimates");
  std::vector<double> sorted(estimates.begin(), estimates.end());
  std::sort(sorted.begin(), sorted.end());
  const double B = static_cast<double>(sorted.size());
  const double beta = 1.0 - level;
  const auto clamp = [&](std::size_t k) { return std::clamp<std::size_t>(k, 1, sorted.size()); };
  const std::size_t lo = clamp(detail::floor_index(B * beta / 2.0));
  const std::size_t hi = clamp(detail::floor_index(B * (1.0 - beta / 2.0)));
  return {sorted[lo - 1], sorted[hi - 1], level, IntervalMethod::percentile_bootstrap, false};
}

/// Bias-corrected normal interval theta - b -/+ z_{beta/2} sqrt(v), with
/// b the bootstrap bias and v the (B - 1)-divisor bootstrap variance. The
/// lower bound is not floored.
inline ConfidenceInterval bc_interval(std::span<const double> estimates, double original_estimate, double level) {
  detail::require_level(level);
  if (estimates.size() < 2) throw domain_error("bias-corrected interval needs at least two estimates");
  const double bias = numerics::mean(estimates) - original_estimate;
  const double var = numerics::sample_variance(estimates);
  const double z = numerics::normal_upper_point((1.0 - level) / 2.0);
  const double centre = original_estimate - bias;
  const double half = z * std::sqrt(var);
  return {centre - half, centre + half, level, IntervalMethod::bc_bootstrap, !(var > 0.0)};
}

/// Shortest window among (g_(j), g_(j + N - k - 1)), j = 1..k, k = [N two_beta];
/// ties go to the smallest j.
inline ConfidenceInterval hpd_interval(std::span<const double> samples, double two_beta) {
  detail::require_level(two_beta);
  const std::size_t N = samples.size();
  const std::size_t k = detail::floor_index(static_cast<double>(N) * two_beta);
  if (k < 1 || N < k + 1) throw domain_error("hpd_interval: too few samples for the requested level");
  std::vector<double> g(samples.begin(), samples.end());
  std::sort(g.begin(), g.end());
  std::size_t best = 1;
  double best_len = numerics::kInf;
  for (std::size_t j = 1; j <= k; ++j) {
    const std::size_t u = j + N - k - 1;
    const double len = g[u - 1] - g[j - 1];
    if (len < best_len) {
      best_len = len;
      best = j;
    }
  }
  return {g[best - 1], g[best + N - k - 2], 1.0 - two_beta, IntervalMethod::hpd_credible, false};
}

/// Equal-tail credible interval from the (beta, 1 - beta) sample order statistics.
inline ConfidenceInterval symmetric_interval(std::span<const double> samples, double two_beta) {
  ConfidenceInterval ci = percentile_interval(samples, 1.0 - two_beta);
  ci.method = IntervalMethod::symmetric_credible;
  return ci;
}

}  // namespace ltrc
