#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>

#include "ltrc/ars.hpp"
#include "ltrc/intervals.hpp"
#include "ltrc/mle_common.hpp"
#include "ltrc/random.hpp"

namespace ltrc {

/// Dirichlet-Gamma law DG(b, a0, a1, a2): lambda1 + lambda2 ~ Gamma(a0, rate b)
/// independent of lambda1 / (lambda1 + lambda2) ~ Beta(a1, a2).
struct DGParams {
  double b = 1e-4;
  double a0 = 1e-4;
  double a1 = 1e-4;
  double a2 = 1e-4;

  void validate() const {
    if (!(b > 0.0 && a0 > 0.0 && a1 > 0.0 && a2 > 0.0)) throw domain_error("DG parameters must be positive");
  }
  friend bool operator==(const DGParams&, const DGParams&) = default;
};

/// Gamma(shape, rate) prior.
struct GammaPrior {
  double shape = 1e-4;
  double rate = 1e-4;

  void validate() const {
    if (!(shape > 0.0 && rate > 0.0)) throw domain_error("gamma prior parameters must be positive");
  }
};

/// Priors of the common-shape model: DG on the scales, gamma(c, d) on alpha.
struct PriorSpec {
  DGParams dg;
  GammaPrior alpha;
};

/// Independent gamma priors of the separate-shape model.
struct SeparatePriorSpec {
  GammaPrior alpha1, lambda1, alpha2, lambda2;
};

struct DGMoments {
  double mean1 = 0.0;
  double mean2 = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;
};

inline DGMoments dg_moments(const DGParams& p) {
  p.validate();
  const double s = p.a1 + p.a2;
  auto mean = [&](double ai) { return p.a0 * ai / (p.b * s); };
  auto var = [&](double ai) {
    return p.a0 * ai / (p.b * p.b * s) * ((ai + 1.0) * (p.a0 + 1.0) / (s + 1.0) - p.a0 * ai / s);
  };
  return {mean(p.a1), mean(p.a2), var(p.a1), var(p.a2)};
}

inline std::pair<double, double> dg_sample(const DGParams& p, Rng& rng) {
  const double total = gamma_draw(p.a0, p.b, rng);
  const double share = beta_draw(p.a1, p.a2, rng);
  return {share * total, (1.0 - share) * total};
}

/// Conjugate update for known alpha: DG(b + w2(alpha), a0 + m, a1 + m1, a2 + m2).
inline DGParams posterior_dg(const Dataset& data, double alpha, const DGParams& prior) {
  require_positive_shape(alpha);
  prior.validate();
  const double w2 = data.n() == 0 ? 0.0 : w_sums(data, alpha, false).w2();
  return {prior.b + w2, prior.a0 + static_cast<double>(data.m()), prior.a1 + static_cast<double>(data.m1()),
          prior.a2 + static_cast<double>(data.m2())};
}

/// Squared-error Bayes estimates and posterior variances of the scales for known alpha.
inline DGMoments bayes_known_alpha(const Dataset& data, double alpha, const DGParams& prior) {
  return dg_moments(posterior_dg(data, alpha, prior));
}

/// Credible set {A <= l1 + l2 <= B, C <= l1 / (l1 + l2) <= D}, a trapezoid in
/// the (l1, l2) plane.
struct CredibleTrapezoid {
  double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;
  double area = 0.0;

  bool contains(double lambda1, double lambda2) const {
    const double s = lambda1 + lambda2;
    if (!(lambda1 > 0.0 && lambda2 > 0.0)) return false;
    const double p = lambda1 / s;
    return A <= s && s <= B && C <= p && p <= D;
  }
};

/// Splits the total tail mass as gamma1 = gamma2 = 1 - sqrt(1 - gamma_total) and
/// uses equal-tail quantiles of the gamma and beta factors.
inline CredibleTrapezoid credible_trapezoid(const Dataset& data, double alpha, const DGParams& prior,
                                            double gamma_total) {
  if (!(gamma_total > 0.0 && gamma_total < 1.0)) throw domain_error("gamma_total must lie in (0, 1)");
  const DGParams post = posterior_dg(data, alpha, prior);
  CredibleTrapezoid tz;
  tz.gamma1 = tz.gamma2 = 1.0 - std::sqrt(1.0 - gamma_total);
  const boost::math::gamma_distribution<double> total(post.a0, 1.0 / post.b);
  const boost::math::beta_distribution<double> share(post.a1, post.a2);
  tz.A = boost::math::quantile(total, tz.gamma1 / 2.0);
  tz.B = boost::math::quantile(boost::math::complement(total, tz.gamma1 / 2.0));
  tz.C = boost::math::quantile(share, tz.gamma2 / 2.0);
  tz.D = boost::math::quantile(boost::math::complement(share, tz.gamma2 / 2.0));
  tz.area = (tz.B * tz.B - tz.A * tz.A) * (tz.D - tz.C) / 2.0;
  return tz;
}

/// Unnormalized log posterior of a shape parameter, in the form shared by the
/// common-shape model and each cause of the separate-shape model:
///   log_coeff * log(a) - rate * a + a * log_sum - power * log(offset + w2(a)).
struct ShapePosterior {
  const Dataset* data = nullptr;
  double log_coeff = 0.0;
  double rate = 0.0;
  double log_sum = 0.0;
  double power = 0.0;
  double offset = 0.0;

  /// gamma(c, d) prior on alpha with DG(b0, a0, ...) on the scales.
  static ShapePosterior common(const Dataset& d, const PriorSpec& prior) {
    const double m = static_cast<double>(d.m());
    return {&d, m + prior.alpha.shape - 1.0, prior.alpha.rate, d.w1(), prior.dg.a0 + m, prior.dg.b};
  }
  /// Cause j of the separate-shape model.
  static ShapePosterior cause(const Dataset& d, int j, const GammaPrior& alpha_prior, const GammaPrior& lambda_prior) {
    const double mj = static_cast<double>(d.failures(j));
    return {&d, mj + alpha_prior.shape - 1.0, alpha_prior.rate, d.log_failure_sum(j), mj + lambda_prior.shape,
            lambda_prior.rate};
  }

  double log_offset_w2(const WSums& w) const { return numerics::log_add_exp(std::log(offset), w.log_w2()); }

  double value(double a) const {
    if (!(a > 0.0)) return -numerics::kInf;
    const WSums w = w_sums(*data, a, false);
    return log_coeff * std::log(a) - rate * a + a * log_sum - power * log_offset_w2(w);
  }

  LogDensityPoint operator()(double a) const {
    const WSums w = w_sums(*data, a);
    const double q = offset * std::exp(-w.log_scale);
    const double ratio = std::isfinite(q) ? w.s1 / (w.s0 + q) : 0.0;
    return {log_coeff * std::log(a) - rate * a + a * log_sum - power * log_offset_w2(w),
            log_coeff / a - rate + log_sum - power * ratio};
  }

  /// Sign carrier of w2''(w2 + offset) - (w2')^2 scaled by exp(-2 log_scale).
  double scaled_d_tilde(double a) const {
    const WSums w = w_sums(*data, a);
    const double q = offset * std::exp(-w.log_scale);
    if (!std::isfinite(q)) return w.s2;
    return w.s2 * (w.s0 + q) - w.s1 * w.s1;
  }
};

/// d~(alpha) = w2''(alpha)(b0 + w2(alpha)) - w2'(alpha)^2.
inline double d_tilde_alpha(const Dataset& data, double alpha, double b0) {
  require_positive_shape(alpha);
  const WFunctions w = w_functions(data, alpha);
  return w.w2_double_prime * (b0 + w.w2) - w.w2_prime * w.w2_prime;
}

/// Unnormalized log pi(alpha | data) for the common-shape model.
inline double log_posterior_alpha(const Dataset& data, const PriorSpec& prior, double alpha) {
  require_positive_shape(alpha);
  return ShapePosterior::common(data, prior).value(alpha);
}

/// True when d~ >= 0 on the scan grid and the alpha-dependent prior factor
/// keeps the log-alpha coefficient nonnegative, so the log posterior is concave.
inline bool log_concavity_certificate(const ShapePosterior& post, const ScanGrid& grid = {}) {
  if (post.log_coeff < 0.0) return false;
  for (double a : grid.values()) {
    const WSums w = w_sums(*post.data, a);
    if (post.scaled_d_tilde(a) < -1e-12 * std::abs(w.s2) * (w.s0 + 1.0)) return false;
  }
  return true;
}

struct PosteriorDraw {
  double alpha = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct PosteriorDraws {
  std::vector<PosteriorDraw> draws;
  std::uint64_t seed = 0;
  std::size_t N = 0;
  bool used_grid_fallback = false;

  std::vector<double> alpha() const { return extract(&PosteriorDraw::alpha); }
  std::vector<double> lambda1() const { return extract(&PosteriorDraw::lambda1); }
  std::vector<double> lambda2() const { return extract(&PosteriorDraw::lambda2); }

 private:
  std::vector<double> extract(double PosteriorDraw::*field) const {
    std::vector<double> v;
    v.reserve(draws.size());
    for (const auto& d : draws) v.push_back(d.*field);
    return v;
  }
};

struct SeparateDraw {
  double alpha1 = 0.0, lambda1 = 0.0, alpha2 = 0.0, lambda2 = 0.0;
};

struct SeparatePosteriorDraws {
  std::vector<SeparateDraw> draws;
  std::uint64_t seed = 0;
  std::size_t N = 0;
  bool used_grid_fallback = false;

  std::vector<double> column(double SeparateDraw::*field) const {
    std::vector<double> v;
    v.reserve(draws.size());
    for (const auto& d : draws) v.push_back(d.*field);
    return v;
  }
};

namespace detail {

/// Mode of a shape posterior: grid scan on the certificate grid, then golden section.
inline double shape_posterior_mode(const ShapePosterior& post, const ScanGrid& grid) {
  const auto xs = grid.values();
  std::size_t best = 0;
  double best_val = -numerics::kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = post.value(xs[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (!std::isfinite(best_val) || best == 0 || best + 1 == xs.size()) {
    throw convergence_error("posterior mode of the shape parameter not found inside the scan grid", {});
  }
  return numerics::golden_section_max([&](double a) { return post.value(a); }, xs[best - 1], xs[best + 1],
                                      1e-9 * xs[best]);
}

/// Draws shapes from a shape posterior. Uses adaptive rejection sampling when
/// log-concavity is certified, grid inversion otherwise.
class ShapeSampler {
 public:
  ShapeSampler(const ShapePosterior& post, const ScanGrid& grid = {}) : post_(post) {
    mode_ = shape_posterior_mode(post_, grid);
    if (log_concavity_certificate(post_, grid)) {
      try {
        ars_.emplace(post_, starting_points());
        return;
      } catch (const error&) {
        ars_.reset();
      }
    }
    build_grid();
  }

  double operator()(Rng& rng) {
    if (ars_) {
      try {
        return (*ars_)(rng);
      } catch (const not_log_concave&) {
        ars_.reset();
        build_grid();
      }
    }
    return (*grid_)(rng);
  }

  bool used_grid() const { return grid_.has_value(); }
  double mode() const { return mode_; }

 private:
  // Mode and points roughly one and three posterior standard deviations either side.
  std::vector<double> starting_points() const {
    const double h = 1e-5 * mode_;
    const double curv = (post_(mode_ + h).slope - post_(mode_ - h).slope) / (2.0 * h);
    const double sd = curv < 0.0 ? 1.0 / std::sqrt(-curv) : 0.5 * mode_;
    std::vector<double> xs;
    double left = mode_ - sd;
    if (!(left > 0.0)) left = 0.5 * mode_;
    while (!(post_(left).slope > 0.0) && left > 1e-12) left *= 0.5;
    double right = mode_ + sd;
    for (int k = 0; k < 60 && !(post_(right).slope < 0.0); ++k) right = mode_ + (right - mode_) * 2.0;
    const double far_right = mode_ + 3.0 * (right - mode_);
    const double far_left = std::max(0.5 * left, mode_ - 3.0 * (mode_ - left));
    for (double x : {far_left, left, mode_, right, far_right}) {
      if (x > 0.0 && (xs.empty() || x > xs.back())) xs.push_back(x);
    }
    return xs;
  }

  void build_grid() {
    const double top = post_.value(mode_);
    double lo = mode_, hi = mode_;
    double step = 0.05 * mode_;
    for (int k = 0; k < 200 && post_.value(hi) > top - 40.0; ++k) hi += (step *= 1.5);
    step = 0.05 * mode_;
    for (int k = 0; k < 200 && lo > 0.0 && post_.value(lo) > top - 40.0; ++k) lo -= (step *= 1.5);
    lo = std::max(lo, 1e-9 * mode_);
    auto xs = numerics::linear_grid(lo, hi, 8001);
    std::vector<double> lp(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) lp[i] = post_.value(xs[i]);
    grid_.emplace(std::move(xs), lp);
  }

  ShapePosterior post_;
  double mode_ = 1.0;
  std::optional<AdaptiveRejectionSampler<ShapePosterior>> ars_;
  std::optional<GridInversionSampler> grid_;
};

}  // namespace detail

/// Exact sequential sampling of the common-shape posterior: alpha from its
/// marginal, then (lambda1, lambda2) from the conjugate DG given alpha.
inline PosteriorDraws sample_posterior(const Dataset& data, const PriorSpec& prior, std::size_t N,
                                       std::uint64_t seed, const ScanGrid& grid = {}) {
  if (N < 1) throw domain_error("sample_posterior needs N >= 1");
  require_both_causes(data);
  prior.dg.validate();
  prior.alpha.validate();
  detail::ShapeSampler shape(ShapePosterior::common(data, prior), grid);
  Rng rng = make_rng(seed, "posterior");
  PosteriorDraws out;
  out.seed = seed;
  out.N = N;
  out.draws.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double a = shape(rng);
    const auto [l1, l2] = dg_sample(posterior_dg(data, a, prior.dg), rng);
    out.draws.push_back({a, l1, l2});
  }
  out.used_grid_fallback = shape.used_grid();
  return out;
}

/// Draws (lambda1, lambda2) from the conjugate posterior at a fixed alpha.
inline PosteriorDraws sample_given_alpha(const Dataset& data, double alpha, const DGParams& prior, std::size_t N,
                                         std::uint64_t seed) {
  const DGParams post = posterior_dg(data, alpha, prior);
  Rng rng = make_rng(seed, "posterior_given_alpha");
  PosteriorDraws out;
  out.seed = seed;
  out.N = N;
  out.draws.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto [l1, l2] = dg_sample(post, rng);
    out.draws.push_back({alpha, l1, l2});
  }
  return out;
}

/// Separate-shape posterior; the two causes factorize and use independent streams.
inline SeparatePosteriorDraws sample_posterior_separate(const Dataset& data, const SeparatePriorSpec& prior,
                                                        std::size_t N, std::uint64_t seed, const ScanGrid& grid = {}) {
  if (N < 1) throw domain_error("sample_posterior_separate needs N >= 1");
  require_both_causes(data);
  for (const GammaPrior* g : {&prior.alpha1, &prior.lambda1, &prior.alpha2, &prior.lambda2}) g->validate();
  SeparatePosteriorDraws out;
  out.seed = seed;
  out.N = N;
  out.draws.resize(N);
  for (int j = 1; j <= 2; ++j) {
    const GammaPrior& ap = j == 1 ? prior.alpha1 : prior.alpha2;
    const GammaPrior& lp = j == 1 ? prior.lambda1 : prior.lambda2;
    detail::ShapeSampler shape(ShapePosterior::cause(data, j, ap, lp), grid);
    Rng rng = make_rng(seed, j == 1 ? "posterior_cause1" : "posterior_cause2");
    const double mj = static_cast<double>(data.failures(j));
    for (std::size_t i = 0; i < N; ++i) {
      const double a = shape(rng);
      const double l = gamma_draw(mj + lp.shape, w_sums(data, a, false).w2() + lp.rate, rng);
      if (j == 1) {
        out.draws[i].alpha1 = a;
        out.draws[i].lambda1 = l;
      } else {
        out.draws[i].alpha2 = a;
        out.draws[i].lambda2 = l;
      }
    }
    out.used_grid_fallback = out.used_grid_fallback || shape.used_grid();
  }
  return out;
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double variance = 0.0;  // divisor N
};

/// Posterior mean and (1/N) posterior variance of g over the draws.
inline MonteCarloEstimate bayes_estimates_mc(std::span<const double> g) {
  if (g.size() < 2) throw domain_error("bayes_estimates_mc needs at least two draws");
  return {numerics::mean(g), numerics::sum_sq_dev(g) / static_cast<double>(g.size())};
}

inline MonteCarloEstimate bayes_estimates_mc(const PosteriorDraws& draws,
                                             const std::function<double(double, double, double)>& g) {
  std::vector<double> v;
  v.reserve(draws.draws.size());
  for (const auto& d : draws.draws) v.push_back(g(d.alpha, d.lambda1, d.lambda2));
  return bayes_estimates_mc(v);
}

}  // namespace ltrc
