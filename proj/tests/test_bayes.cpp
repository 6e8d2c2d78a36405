#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "support.hpp"

using namespace ltrc;
using testing_support::obs;

namespace {

/// Kolmogorov-Smirnov statistic of a sample against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Asymptotic 1% critical value of the one-sample KS statistic.
double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = numerics::mean(a), mb = numerics::mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

struct SampleMoments {
  double mean, var, se_mean, se_var;
};

SampleMoments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = numerics::mean(x);
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return {m, m2, std::sqrt(m2 / n), std::sqrt((m4 - m2 * m2) / n)};
}

Dataset tiny_dataset() {
  return Dataset({obs(0.8, Cause::first, 3.0), obs(1.3, Cause::second, 3.0, 0.5), obs(2.0, Cause::censored, 2.0)});
}

}  // namespace

TEST(DgMoments, DirectSubstitution) {
  const DGMoments m = dg_moments({1.0, 2.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(m.mean1, 1.0);
  EXPECT_DOUBLE_EQ(m.var1, 1.0);
  EXPECT_DOUBLE_EQ(m.mean2, 1.0);
  EXPECT_THROW(dg_moments({0.0, 1.0, 1.0, 1.0}), domain_error);
}

TEST(DgSample, MonteCarloMomentsMatchFormulas) {
  const DGParams p{1.5, 3.0, 2.0, 0.7};
  const DGMoments exact = dg_moments(p);
  Rng rng = make_rng(1, "dg_moments");
  std::vector<double> l1(1000000), l2(1000000);
  for (std::size_t i = 0; i < l1.size(); ++i) std::tie(l1[i], l2[i]) = dg_sample(p, rng);
  const SampleMoments a = moments(l1), b = moments(l2);
  EXPECT_NEAR(a.mean, exact.mean1, 3 * a.se_mean);
  EXPECT_NEAR(b.mean, exact.mean2, 3 * b.se_mean);
  EXPECT_NEAR(a.var, exact.var1, 3 * a.se_var);
  EXPECT_NEAR(b.var, exact.var2, 3 * b.se_var);
}

TEST(DgSample, CorrelationSignFollowsShapeBalance) {
  auto corr = [](DGParams p, std::uint64_t seed) {
    Rng rng = make_rng(seed, "dg_corr");
    std::vector<double> a(100000), b(100000);
    for (std::size_t i = 0; i < a.size(); ++i) std::tie(a[i], b[i]) = dg_sample(p, rng);
    return correlation(a, b);
  };
  EXPECT_LT(std::abs(corr({1.0, 3.0, 1.0, 2.0}, 1)), 0.02);
  EXPECT_LT(corr({1.0, 8.0, 1.0, 2.0}, 2), -0.1);
  EXPECT_GT(corr({1.0, 1.0, 1.0, 2.0}, 3), 0.1);
}

TEST(DgSample, TotalIsGammaByKolmogorovSmirnov) {
  const DGParams p{2.0, 3.5, 1.2, 0.8};
  Rng rng = make_rng(4, "dg_ks");
  std::vector<double> s(10000);
  for (double& v : s) {
    const auto [a, b] = dg_sample(p, rng);
    v = a + b;
  }
  const boost::math::gamma_distribution<double> g(p.a0, 1.0 / p.b);
  EXPECT_LT(ks_statistic(s, [&](double x) { return boost::math::cdf(g, x); }), ks_critical_1pct(s.size()));
}

TEST(PosteriorDg, EmptyDataReturnsPrior) {
  const DGParams prior{0.5, 2.0, 1.0, 3.0};
  EXPECT_EQ(posterior_dg(Dataset{}, 1.7, prior), prior);
  const DGMoments a = bayes_known_alpha(Dataset{}, 1.7, prior), b = dg_moments(prior);
  EXPECT_DOUBLE_EQ(a.mean1, b.mean1);
  EXPECT_DOUBLE_EQ(a.var2, b.var2);
}

TEST(PosteriorDg, TransformerArithmetic) {
  const Dataset d = testing_support::transformers();
  const DGParams post = posterior_dg(d, 2.795, {});
  EXPECT_DOUBLE_EQ(post.a1, 14.0001);
  EXPECT_DOUBLE_EQ(post.a2, 33.0001);
  EXPECT_DOUBLE_EQ(post.a0, 47.0001);
  EXPECT_NEAR(post.b, 1e-4 + testing_support::naive_w2(d, 2.795), 1e-12);
}

TEST(PosteriorDg, SequentialUpdateEqualsPooledUpdate) {
  const Dataset d = testing_support::transformers();
  const auto all = d.observations();
  const Dataset first(std::vector<Observation>(all.begin(), all.begin() + 40));
  const Dataset second(std::vector<Observation>(all.begin() + 40, all.end()));
  const DGParams prior{0.3, 1.0, 2.0, 0.5};
  const DGParams seq = posterior_dg(second, 2.2, posterior_dg(first, 2.2, prior));
  const DGParams pooled = posterior_dg(d, 2.2, prior);
  EXPECT_NEAR(seq.b, pooled.b, 1e-12);
  EXPECT_DOUBLE_EQ(seq.a0, pooled.a0);
  EXPECT_DOUBLE_EQ(seq.a1, pooled.a1);
  EXPECT_DOUBLE_EQ(seq.a2, pooled.a2);
}

TEST(BayesKnownAlpha, ApproachesTheMleForVagueHyperparameters) {
  const Dataset d = testing_support::transformers();
  const CommonShapeFit fit = solve_alpha(d);
  const DGMoments m = bayes_known_alpha(d, fit.alpha_hat, {});
  EXPECT_LT(std::abs(m.mean1 / fit.lambda1_hat - 1.0), 1e-3);
  EXPECT_LT(std::abs(m.mean2 / fit.lambda2_hat - 1.0), 1e-3);
  EXPECT_NEAR(m.mean1 / m.mean2, 14.0001 / 33.0001, 1e-14);
}

TEST(BayesKnownAlpha, MatchesMonteCarloFromPosterior) {
  const Dataset d = testing_support::transformers();
  const DGParams prior{0.5, 2.0, 1.0, 1.0};
  const DGMoments exact = bayes_known_alpha(d, 2.5, prior);
  const PosteriorDraws draws = sample_given_alpha(d, 2.5, prior, 1000000, 9);
  const SampleMoments a = moments(draws.lambda1()), b = moments(draws.lambda2());
  EXPECT_NEAR(a.mean, exact.mean1, 3 * a.se_mean);
  EXPECT_NEAR(b.mean, exact.mean2, 3 * b.se_mean);
  EXPECT_NEAR(a.var, exact.var1, 3 * a.se_var);
  EXPECT_NEAR(b.var, exact.var2, 3 * b.se_var);
}

TEST(CredibleTrapezoid, EmpiricalContainment) {
  const Dataset d = testing_support::transformers();
  const CredibleTrapezoid tz = credible_trapezoid(d, 2.795, {}, 0.1);
  EXPECT_NEAR((1 - tz.gamma1) * (1 - tz.gamma2), 0.9, 1e-15);
  EXPECT_GT(tz.A, 0.0);
  EXPECT_LT(tz.A, tz.B);
  EXPECT_GT(tz.C, 0.0);
  EXPECT_LT(tz.D, 1.0);
  EXPECT_NEAR(tz.area, (tz.B * tz.B - tz.A * tz.A) * (tz.D - tz.C) / 2, 1e-12);
  const PosteriorDraws draws = sample_given_alpha(d, 2.795, {}, 100000, 10);
  std::size_t inside = 0;
  for (const auto& x : draws.draws) inside += tz.contains(x.lambda1, x.lambda2);
  EXPECT_NEAR(static_cast<double>(inside) / 1e5, 0.9, 0.01);
}

TEST(CredibleTrapezoid, AreaShrinksAsTailMassGrows) {
  const Dataset d = testing_support::transformers();
  double prev = INFINITY;
  for (double g : {0.01, 0.05, 0.2, 0.5, 0.9, 0.9999}) {
    const double area = credible_trapezoid(d, 2.795, {}, g).area;
    EXPECT_LT(area, prev);
    prev = area;
  }
  EXPECT_LT(prev, 1e-2);
  EXPECT_THROW(credible_trapezoid(d, 2.795, {}, 1.0), domain_error);
}

TEST(LogPosteriorAlpha, DTildeNonNegativeAndExceedsDByPriorTerm) {
  const Dataset d = testing_support::transformers();
  for (double a : numerics::linear_grid(0.1, 10.0, 200)) {
    const double dt = d_tilde_alpha(d, a, 1e-4);
    const double dd = d_alpha(d, a);
    const WFunctions w = w_functions(d, a);
    EXPECT_GE(dt, 0.0);
    EXPECT_NEAR(dt - dd, 1e-4 * w.w2_double_prime, 1e-9 * (dt + 1e-4 * w.w2_double_prime)) << "alpha " << a;
  }
  const PriorSpec prior;
  EXPECT_TRUE(log_concavity_certificate(ShapePosterior::common(d, prior)));
}

TEST(LogPosteriorAlpha, ConcaveByFiniteDifferences) {
  const Dataset d = testing_support::transformers();
  PriorSpec prior;
  prior.alpha = {2.0, 0.5};  // log-concave gamma prior
  for (double a : numerics::linear_grid(0.2, 8.0, 100)) {
    const double h = 1e-3 * a;
    const double second = (log_posterior_alpha(d, prior, a + h) - 2 * log_posterior_alpha(d, prior, a) +
                            log_posterior_alpha(d, prior, a - h)) /
                           (h * h);
    EXPECT_LE(second, 1e-6) << "alpha " << a;
  }
}

TEST(LogPosteriorAlpha, MatchesDirectFormula) {
  const Dataset d = testing_support::transformers();
  PriorSpec prior;
  prior.alpha = {3.0, 0.7};
  prior.dg.b = 0.2;
  prior.dg.a0 = 1.5;
  auto direct = [&](double a) {
    return (3.0 - 1) * std::log(a) - 0.7 * a + 47 * std::log(a) + a * testing_support::naive_log_sum(d, 0) -
           (1.5 + 47) * std::log(0.2 + testing_support::naive_w2(d, a));
  };
  const double shift = direct(2.0) - log_posterior_alpha(d, prior, 2.0);
  for (double a : {0.5, 1.0, 3.0, 5.0}) EXPECT_NEAR(direct(a) - log_posterior_alpha(d, prior, a), shift, 1e-9);
}

TEST(ShapePosterior, SlopeMatchesFiniteDifference) {
  const Dataset d = testing_support::transformers();
  const ShapePosterior p = ShapePosterior::common(d, {});
  for (double a : {0.5, 2.8, 6.0}) {
    const double h = 1e-6 * a;
    EXPECT_NEAR(p(a).slope, (p.value(a + h) - p.value(a - h)) / (2 * h), 1e-5 * std::max(1.0, std::abs(p(a).slope)));
  }
}

TEST(AdaptiveRejection, SamplesGammaDensity) {
  struct LogGamma {
    LogDensityPoint operator()(double x) const { return {4.0 * std::log(x) - 2.0 * x, 4.0 / x - 2.0}; }
  };
  const std::vector<double> start{0.5, 2.0, 5.0};
  AdaptiveRejectionSampler<LogGamma> ars(LogGamma{}, start);
  Rng rng = make_rng(11, "ars_gamma");
  std::vector<double> x(20000);
  for (double& v : x) v = ars(rng);
  const boost::math::gamma_distribution<double> g(5.0, 0.5);
  EXPECT_LT(ks_statistic(x, [&](double v) { return boost::math::cdf(g, v); }), ks_critical_1pct(x.size()));
  EXPECT_LT(ars.evaluations(), x.size() / 10);
}

TEST(AdaptiveRejection, SamplesNormalOnTheRealLine) {
  struct LogNormal {
    LogDensityPoint operator()(double x) const { return {-0.5 * x * x, -x}; }
  };
  const std::vector<double> start{-1.0, 1.0};
  AdaptiveRejectionSampler<LogNormal> ars(LogNormal{}, start, -numerics::kInf, numerics::kInf);
  Rng rng = make_rng(12, "ars_normal");
  std::vector<double> x(20000);
  for (double& v : x) v = ars(rng);
  const boost::math::normal_distribution<double> n;
  EXPECT_LT(ks_statistic(x, [&](double v) { return boost::math::cdf(n, v); }), ks_critical_1pct(x.size()));
}

TEST(AdaptiveRejection, DetectsNonLogConcaveTarget) {
  struct Bimodal {
    LogDensityPoint operator()(double x) const {
      const double a = -0.5 * (x - 3) * (x - 3), b = -0.5 * (x + 3) * (x + 3);
      const double top = std::max(a, b);
      const double wa = std::exp(a - top), wb = std::exp(b - top);
      return {top + std::log(wa + wb), (-(x - 3) * wa - (x + 3) * wb) / (wa + wb)};
    }
  };
  const std::vector<double> start{-4.0, -2.0, 2.0, 4.0};
  EXPECT_THROW(
      {
        AdaptiveRejectionSampler<Bimodal> ars(Bimodal{}, start, -numerics::kInf, numerics::kInf);
        Rng rng = make_rng(13, "ars_bimodal");
        for (int i = 0; i < 10000; ++i) ars(rng);
      },
      not_log_concave);
}

TEST(GridInversion, SamplesBimodalDensity) {
  auto xs = numerics::linear_grid(-10.0, 10.0, 4001);
  std::vector<double> lp(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lp[i] = std::log(0.3 * std::exp(-0.5 * (xs[i] - 3) * (xs[i] - 3)) + 0.7 * std::exp(-0.5 * (xs[i] + 3) * (xs[i] + 3)));
  }
  GridInversionSampler s(xs, lp);
  Rng rng = make_rng(14, "grid_bimodal");
  std::vector<double> x(20000);
  for (double& v : x) v = s(rng);
  const boost::math::normal_distribution<double> n;
  auto cdf = [&](double v) { return 0.3 * boost::math::cdf(n, v - 3) + 0.7 * boost::math::cdf(n, v + 3); };
  EXPECT_LT(ks_statistic(x, cdf), ks_critical_1pct(x.size()));
}

TEST(SamplePosterior, TransformerMeans) {
  const PosteriorDraws draws = sample_posterior(testing_support::transformers(), {}, 10000, 7);
  EXPECT_FALSE(draws.used_grid_fallback);
  EXPECT_NEAR(numerics::mean(draws.alpha()) / 2.781, 1.0, 0.02);
  EXPECT_NEAR(numerics::mean(draws.lambda1()) / 7.140, 1.0, 0.02);
  EXPECT_NEAR(numerics::mean(draws.lambda2()) / 16.792, 1.0, 0.02);
}

TEST(SamplePosterior, DeterministicAndPositive) {
  const Dataset d = testing_support::transformers();
  const PosteriorDraws a = sample_posterior(d, {}, 2000, 21), b = sample_posterior(d, {}, 2000, 21);
  ASSERT_EQ(a.draws.size(), 2000u);
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    EXPECT_EQ(a.draws[i].alpha, b.draws[i].alpha);
    EXPECT_EQ(a.draws[i].lambda1, b.draws[i].lambda1);
    EXPECT_GT(a.draws[i].alpha, 0.0);
    EXPECT_GT(a.draws[i].lambda1, 0.0);
    EXPECT_GT(a.draws[i].lambda2, 0.0);
  }
  EXPECT_NE(sample_posterior(d, {}, 2000, 22).draws[0].alpha, a.draws[0].alpha);
}

TEST(SamplePosterior, RequiresBothCausesAndDraws) {
  const Dataset d({obs(1.0, Cause::first, 2.0)});
  EXPECT_THROW(sample_posterior(d, {}, 10, 1), degenerate_data_error);
  EXPECT_THROW(sample_posterior(testing_support::transformers(), {}, 0, 1), domain_error);
}

TEST(SamplePosterior, TinyDatasetMatchesTwoDimensionalQuadrature) {
  const Dataset d = tiny_dataset();
  PriorSpec prior;
  prior.dg = {1.0, 2.0, 1.0, 1.0};
  prior.alpha = {2.0, 1.0};

  // Exact joint posterior of (alpha, s = lambda1 + lambda2); the share
  // lambda1 / s is Beta(a1 + m1, a2 + m2) independently of (alpha, s).
  const double m = 2.0, w1 = std::log(0.8) + std::log(1.3);
  auto log_joint = [&](double a, double s) {
    return (prior.alpha.shape - 1) * std::log(a) - prior.alpha.rate * a + m * std::log(a) + (a - 1) * w1 +
           (prior.dg.a0 + m - 1) * std::log(s) - s * (prior.dg.b + testing_support::naive_w2(d, a));
  };
  const auto as = numerics::linear_grid(1e-6, 25.0, 2500);
  const auto ss = numerics::linear_grid(1e-8, 30.0, 3000);
  double top = -INFINITY;
  for (double a : as) top = std::max(top, log_joint(a, 2.0));
  double z = 0, ea = 0, es = 0;
  for (std::size_t i = 0; i < as.size(); ++i) {
    const double wa = (i == 0 || i + 1 == as.size()) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < ss.size(); ++j) {
      const double ws = (j == 0 || j + 1 == ss.size()) ? 0.5 : 1.0;
      const double f = wa * ws * std::exp(log_joint(as[i], ss[j]) - top);
      z += f;
      ea += f * as[i];
      es += f * ss[j];
    }
  }
  ea /= z;
  es /= z;
  const double share = (prior.dg.a1 + 1) / (prior.dg.a1 + prior.dg.a2 + m);

  const PosteriorDraws draws = sample_posterior(d, prior, 200000, 31);
  EXPECT_NEAR(numerics::mean(draws.alpha()) / ea, 1.0, 0.01);
  EXPECT_NEAR(numerics::mean(draws.lambda1()) / (es * share), 1.0, 0.01);
  EXPECT_NEAR(numerics::mean(draws.lambda2()) / (es * (1 - share)), 1.0, 0.01);
}

TEST(SamplePosterior, HpdCoverageBounds) {
  const PosteriorDraws draws = sample_posterior(testing_support::transformers(), {}, 10000, 8);
  for (const auto& col : {draws.alpha(), draws.lambda1(), draws.lambda2()}) {
    for (double two_beta : {0.1, 0.05}) {
      const auto ci = hpd_interval(col, two_beta);
      const double n = static_cast<double>(col.size());
      const double inside =
          static_cast<double>(std::count_if(col.begin(), col.end(), [&](double x) { return ci.contains(x); })) / n;
      EXPECT_GE(inside, 1 - two_beta - 2 / std::sqrt(n));
      EXPECT_LE(inside, 1 - two_beta + std::floor(n * two_beta) / n);
    }
  }
}

TEST(SamplePosteriorSeparate, TransformerMeansAndHpd) {
  const auto draws = sample_posterior_separate(testing_support::transformers(), {}, 10000, 7);
  EXPECT_NEAR(numerics::mean(draws.column(&SeparateDraw::alpha1)) / 2.776, 1.0, 0.02);
  EXPECT_NEAR(numerics::mean(draws.column(&SeparateDraw::alpha2)) / 2.767, 1.0, 0.02);
  EXPECT_NEAR(numerics::mean(draws.column(&SeparateDraw::lambda2)) / 17.083, 1.0, 0.02);
  const auto hpd = hpd_interval(draws.column(&SeparateDraw::alpha2), 0.1);
  EXPECT_NEAR(hpd.lower, 2.126, 0.05);
  EXPECT_NEAR(hpd.upper, 3.408, 0.05);
}

TEST(SamplePosteriorSeparate, CausesAreIndependent) {
  const auto draws = sample_posterior_separate(testing_support::transformers(), {}, 10000, 12);
  EXPECT_LT(std::abs(correlation(draws.column(&SeparateDraw::alpha1), draws.column(&SeparateDraw::alpha2))), 0.02);
  EXPECT_LT(std::abs(correlation(draws.column(&SeparateDraw::lambda1), draws.column(&SeparateDraw::lambda2))), 0.02);
}

TEST(BayesEstimatesMc, HandComputations) {
  const auto c = bayes_estimates_mc(std::vector<double>(50, 5.0));
  EXPECT_EQ(c.estimate, 5.0);
  EXPECT_EQ(c.variance, 0.0);
  const auto h = bayes_estimates_mc(std::vector<double>{1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(h.estimate, 2.0);
  EXPECT_DOUBLE_EQ(h.variance, 2.0 / 3.0);
  EXPECT_THROW(bayes_estimates_mc(std::vector<double>{1.0}), domain_error);
}

TEST(BayesEstimatesMc, FunctionOfDraws) {
  const PosteriorDraws draws = sample_posterior(testing_support::transformers(), {}, 10000, 7);
  const auto est = bayes_estimates_mc(draws, [](double, double l1, double) { return l1; });
  EXPECT_NEAR(est.estimate / 7.140, 1.0, 0.02);
  const auto ratio = bayes_estimates_mc(draws, [](double, double l1, double l2) { return l1 / (l1 + l2); });
  EXPECT_NEAR(ratio.estimate, 14.0001 / 47.0002, 0.01);
}
