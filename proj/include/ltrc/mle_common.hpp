#pragma once

#include <cmath>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include "ltrc/data_model.hpp"
#include "ltrc/errors.hpp"
#include "ltrc/numerics.hpp"

namespace ltrc {

/// Sums defining w2(alpha) = sum t_i^alpha - sum_{truncated} tau_iL^alpha and
/// its first two alpha-derivatives, stored as exp(log_scale) * s_k so that
/// large shapes neither overflow nor underflow.
struct WSums {
  double log_scale = 0.0;
  double s0 = 0.0;  // w2 / exp(log_scale)
  double s1 = 0.0;  // w2'
  double s2 = 0.0;  // w2''

  double w2() const { return std::exp(log_scale) * s0; }
  double w2_prime() const { return std::exp(log_scale) * s1; }
  double w2_double_prime() const { return std::exp(log_scale) * s2; }
  double log_w2() const { return log_scale + std::log(s0); }
  /// w2' / w2
  double dlog_w2() const { return s1 / s0; }
  /// d(alpha) / w2^2 = w2''/w2 - (w2'/w2)^2
  double curvature() const { return s2 / s0 - (s1 / s0) * (s1 / s0); }
  /// d(alpha) scaled by exp(-2 log_scale); carries the sign of d(alpha).
  double scaled_d() const { return s0 * s2 - s1 * s1; }
};

/// Computes the w2 sums at `alpha`. With `derivatives == false` only s0 is filled.
inline WSums w_sums(const Dataset& data, double alpha, bool derivatives = true) {
  WSums w;
  const double top = data.max_log_t();
  w.log_scale = alpha * top;
  for (double lt : data.plain_log_t()) {
    const double e = std::exp(alpha * (lt - top));
    w.s0 += e;
    if (derivatives) {
      w.s1 += e * lt;
      w.s2 += e * lt * lt;
    }
  }
  const auto lts = data.truncated_log_t();
  const auto ltau = data.truncated_log_tau();
  for (std::size_t i = 0; i < lts.size(); ++i) {
    const double et = std::exp(alpha * (lts[i] - top));
    // t^a - tau^a without cancellation
    w.s0 += -et * std::expm1(alpha * (ltau[i] - lts[i]));
    if (derivatives) {
      const double eu = std::exp(alpha * (ltau[i] - top));
      w.s1 += et * lts[i] - eu * ltau[i];
      w.s2 += et * lts[i] * lts[i] - eu * ltau[i] * ltau[i];
    }
  }
  return w;
}

struct WFunctions {
  double w1 = 0.0;
  double w2 = 0.0;
  double w2_prime = 0.0;
  double w2_double_prime = 0.0;
};

inline void require_positive_shape(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw domain_error("shape parameter must be positive");
}

inline WFunctions w_functions(const Dataset& data, double alpha) {
  require_positive_shape(alpha);
  const WSums w = w_sums(data, alpha);
  return {data.w1(), w.w2(), w.w2_prime(), w.w2_double_prime()};
}

/// d(alpha) = w2 w2'' - (w2')^2; nonnegativity on (0, inf) makes the profile
/// log-likelihood unimodal.
inline double d_alpha(const Dataset& data, double alpha) {
  require_positive_shape(alpha);
  const WSums w = w_sums(data, alpha);
  return std::exp(2.0 * w.log_scale) * w.scaled_d();
}

/// Common-shape log-likelihood.
inline double log_likelihood(const Dataset& data, double alpha, double lambda1, double lambda2) {
  if (!(alpha > 0.0 && lambda1 > 0.0 && lambda2 > 0.0)) {
    throw domain_error("log_likelihood: parameters must be positive");
  }
  const double m1 = static_cast<double>(data.m1());
  const double m2 = static_cast<double>(data.m2());
  const double w2 = w_sums(data, alpha, false).w2();
  return (m1 + m2) * std::log(alpha) + m1 * std::log(lambda1) + m2 * std::log(lambda2) +
         (alpha - 1.0) * data.w1() - (lambda1 + lambda2) * w2;
}

/// The maximization target p(alpha) = count log(alpha) - count log(w2(alpha))
/// + alpha * log_sum. The common-shape profile uses (m, w1); the per-cause
/// profiles of the separate-shape model use (m_j, sum of log t over I_j).
struct ProfileTarget {
  double count = 0.0;
  double log_sum = 0.0;

  static ProfileTarget common(const Dataset& d) { return {static_cast<double>(d.m()), d.w1()}; }
  static ProfileTarget cause(const Dataset& d, int j) {
    return {static_cast<double>(d.failures(j)), d.log_failure_sum(j)};
  }

  double value(const Dataset& d, double alpha) const {
    const WSums w = w_sums(d, alpha, false);
    return count * std::log(alpha) - count * w.log_w2() + alpha * log_sum;
  }
  double slope(const WSums& w, double alpha) const {
    return count / alpha - count * w.dlog_w2() + log_sum;
  }
  double second(const WSums& w, double alpha) const {
    return -count * (1.0 / (alpha * alpha) + w.curvature());
  }
  /// The fixed-point map h(alpha) = count w2 / (count w2' - log_sum w2).
  double fixed_point_map(const WSums& w) const { return count / (count * w.dlog_w2() - log_sum); }
};

inline void require_both_causes(const Dataset& data) {
  if (data.m1() == 0) throw degenerate_data_error(1, "no failures from cause 1; the joint fit is not identifiable");
  if (data.m2() == 0) throw degenerate_data_error(2, "no failures from cause 2; the joint fit is not identifiable");
}

/// Profile log-likelihood of the common shape (additive constant dropped).
inline double profile_loglik(const Dataset& data, double alpha) {
  require_positive_shape(alpha);
  require_both_causes(data);
  return ProfileTarget::common(data).value(data, alpha);
}

struct SolverOptions {
  double init = 1.0;
  double tol = 1e-8;
  int max_iter = 500;
};

/// Scan grid for the unimodality certificate and for bracketing.
struct ScanGrid {
  double lo = 1e-3;
  double hi = 1e3;
  std::size_t points = 512;

  std::vector<double> values() const { return numerics::log_grid(lo, hi, points); }
};

/// True when d(alpha) >= 0 at every scan point (up to rounding).
inline bool unimodality_certificate(const Dataset& data, const ScanGrid& grid = {}) {
  for (double a : grid.values()) {
    const WSums w = w_sums(data, a);
    if (!(w.s0 > 0.0)) return false;
    if (w.scaled_d() < -1e-12 * w.s0 * w.s2) return false;
  }
  return true;
}

struct ProfileMaximum {
  double alpha = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  std::vector<double> trace;
};

namespace detail {

/// Newton steps on p'(alpha) = 0, kept only while they shrink |p'|.
inline double polish_root(const Dataset& data, const ProfileTarget& target, double alpha) {
  for (int k = 0; k < 4; ++k) {
    const WSums w = w_sums(data, alpha);
    const double g = target.slope(w, alpha);
    const double h = target.second(w, alpha);
    if (g == 0.0 || !(h < 0.0)) break;
    const double next = alpha - g / h;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    const WSums wn = w_sums(data, next);
    if (!(std::abs(target.slope(wn, next)) < std::abs(g))) break;
    alpha = next;
  }
  return alpha;
}

/// Grid bracket, golden-section search, then bisection on the sign of p'.
inline bool fallback_maximize(const Dataset& data, const ProfileTarget& target, const ScanGrid& grid,
                              double tol, double& alpha_out) {
  const auto xs = grid.values();
  std::size_t best = 0;
  double best_val = -numerics::kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = target.value(data, xs[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (!std::isfinite(best_val) || best == 0 || best + 1 == xs.size()) return false;
  double lo = xs[best - 1], hi = xs[best + 1];
  const double g = numerics::golden_section_max([&](double a) { return target.value(data, a); }, lo, hi,
                                                1e-6 * xs[best]);
  // Bisection on p' refines past the resolution of golden-section on a flat top.
  auto slope = [&](double a) { return target.slope(w_sums(data, a), a); };
  if (slope(lo) > 0.0 && slope(hi) < 0.0) {
    for (int it = 0; it < 200 && (hi - lo) > 0.25 * tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) > 0.0) lo = mid; else hi = mid;
    }
    alpha_out = 0.5 * (lo + hi);
  } else {
    alpha_out = g;
  }
  return true;
}

}  // namespace detail

/// Maximizes a profile target by the fixed-point iteration alpha <- h(alpha);
/// falls back to a bracketed golden-section search when the iteration
/// diverges, leaves (0, inf) or exhausts its budget.
inline ProfileMaximum maximize_profile(const Dataset& data, const ProfileTarget& target,
                                       const SolverOptions& opt = {}, const ScanGrid& grid = {}) {
  require_positive_shape(opt.init);
  ProfileMaximum out;
  double alpha = opt.init;
  out.trace.push_back(alpha);
  for (int k = 1; k <= opt.max_iter; ++k) {
    const double next = target.fixed_point_map(w_sums(data, alpha));
    out.iterations = k;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    out.trace.push_back(next);
    if (std::abs(next - alpha) <= opt.tol) {
      out.alpha = detail::polish_root(data, target, next);
      out.converged = true;
      return out;
    }
    alpha = next;
  }

  out.used_fallback = true;
  double a = 0.0;
  if (detail::fallback_maximize(data, target, grid, opt.tol, a)) {
    a = detail::polish_root(data, target, a);
    const double h = target.fixed_point_map(w_sums(data, a));
    if (std::abs(a - h) <= opt.tol) {
      out.alpha = a;
      out.converged = true;
      return out;
    }
    out.trace.push_back(a);
  }
  throw convergence_error("profile maximization failed: fixed-point iteration and fallback both failed",
                          std::move(out.trace));
}

struct CommonShapeFit {
  double alpha_hat = 0.0;
  double lambda1_hat = 0.0;
  double lambda2_hat = 0.0;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  bool unimodality_certified = false;
  bool used_fallback = false;
};

/// Scale MLEs m_j / w2(alpha) for a given shape.
inline std::pair<double, double> scale_mles(const Dataset& data, double alpha) {
  const double inv_w2 = std::exp(-w_sums(data, alpha, false).log_w2());
  return {static_cast<double>(data.m1()) * inv_w2, static_cast<double>(data.m2()) * inv_w2};
}

/// Full common-shape MLE. `certify` controls the d(alpha) grid scan.
inline CommonShapeFit solve_alpha(const Dataset& data, const SolverOptions& opt = {}, bool certify = true,
                                  const ScanGrid& grid = {}) {
  require_both_causes(data);
  const ProfileMaximum pm = maximize_profile(data, ProfileTarget::common(data), opt, grid);
  CommonShapeFit fit;
  fit.alpha_hat = pm.alpha;
  std::tie(fit.lambda1_hat, fit.lambda2_hat) = scale_mles(data, pm.alpha);
  fit.loglik = log_likelihood(data, fit.alpha_hat, fit.lambda1_hat, fit.lambda2_hat);
  fit.iterations = pm.iterations;
  fit.converged = pm.converged;
  fit.used_fallback = pm.used_fallback;
  fit.unimodality_certified = certify && unimodality_certificate(data, grid);
  return fit;
}

}  // namespace ltrc
