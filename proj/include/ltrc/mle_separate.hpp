#pragma once

#include <cmath>

#include "ltrc/mle_common.hpp"

namespace ltrc {

/// Weibull(alpha_j, lambda_j) latent lifetimes, one pair per cause. The
/// common-shape model is the special case alpha1 == alpha2.
struct LatentModel {
  double alpha1 = 1.0;
  double lambda1 = 1.0;
  double alpha2 = 1.0;
  double lambda2 = 1.0;

  static LatentModel common(double alpha, double lambda1, double lambda2) {
    return {alpha, lambda1, alpha, lambda2};
  }
};

struct SeparateShapeFit {
  double alpha1_hat = 0.0;
  double lambda1_hat = 0.0;
  double alpha2_hat = 0.0;
  double lambda2_hat = 0.0;
  double loglik = 0.0;
  bool converged1 = false;
  bool converged2 = false;
  int iterations1 = 0;
  int iterations2 = 0;
  bool unimodality_certified = false;

  bool converged() const { return converged1 && converged2; }
  LatentModel model() const { return {alpha1_hat, lambda1_hat, alpha2_hat, lambda2_hat}; }
};

/// Separate-shape log-likelihood; the per-cause log sums run over log t_i.
inline double log_likelihood_separate(const Dataset& data, double alpha1, double lambda1, double alpha2,
                                      double lambda2) {
  if (!(alpha1 > 0.0 && lambda1 > 0.0 && alpha2 > 0.0 && lambda2 > 0.0)) {
    throw domain_error("log_likelihood_separate: parameters must be positive");
  }
  const double m1 = static_cast<double>(data.m1());
  const double m2 = static_cast<double>(data.m2());
  return m1 * std::log(alpha1) + m1 * std::log(lambda1) + (alpha1 - 1.0) * data.log_failure_sum(1) -
         lambda1 * w_sums(data, alpha1, false).w2() + m2 * std::log(alpha2) + m2 * std::log(lambda2) +
         (alpha2 - 1.0) * data.log_failure_sum(2) - lambda2 * w_sums(data, alpha2, false).w2();
}

inline SeparateShapeFit fit_separate(const Dataset& data, const SolverOptions& opt = {}, bool certify = true,
                                     const ScanGrid& grid = {}) {
  require_both_causes(data);
  const ProfileMaximum p1 = maximize_profile(data, ProfileTarget::cause(data, 1), opt, grid);
  const ProfileMaximum p2 = maximize_profile(data, ProfileTarget::cause(data, 2), opt, grid);
  SeparateShapeFit fit;
  fit.alpha1_hat = p1.alpha;
  fit.alpha2_hat = p2.alpha;
  fit.lambda1_hat = static_cast<double>(data.m1()) / w_sums(data, p1.alpha, false).w2();
  fit.lambda2_hat = static_cast<double>(data.m2()) / w_sums(data, p2.alpha, false).w2();
  fit.loglik = log_likelihood_separate(data, fit.alpha1_hat, fit.lambda1_hat, fit.alpha2_hat, fit.lambda2_hat);
  fit.converged1 = p1.converged;
  fit.converged2 = p2.converged;
  fit.iterations1 = p1.iterations;
  fit.iterations2 = p2.iterations;
  fit.unimodality_certified = certify && unimodality_certificate(data, grid);
  return fit;
}

struct LikelihoodRatioTest {
  double statistic = 0.0;
  double critical_value_95 = numerics::kChiSquare1_95;
  bool reject = false;
  CommonShapeFit common;
  SeparateShapeFit separate;
};

/// Likelihood-ratio test of alpha1 == alpha2 against the 1-df chi-square 5% point.
inline LikelihoodRatioTest lrt_equal_shapes(const Dataset& data, const SolverOptions& opt = {}) {
  LikelihoodRatioTest out;
  out.common = solve_alpha(data, opt, false);
  out.separate = fit_separate(data, opt, false);
  out.statistic = -2.0 * (out.common.loglik - out.separate.loglik);
  out.reject = out.statistic > out.critical_value_95;
  return out;
}

}  // namespace ltrc
