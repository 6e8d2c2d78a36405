#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ltrc/intervals.hpp"
#include "ltrc/mle_separate.hpp"
#include "ltrc/parallel.hpp"
#include "ltrc/random.hpp"

namespace ltrc {

/// Draws a new dataset with the template's design (tau_L, tau_R, nu) held
/// fixed. Latent times of a truncated unit are drawn above tau_L, which
/// conditions the pair on min(T1, T2) > tau_L since the event factorizes.
inline Dataset resample_dataset(const Dataset& templ, const LatentModel& model, Rng& rng) {
  if (!(model.alpha1 > 0.0 && model.lambda1 > 0.0 && model.alpha2 > 0.0 && model.lambda2 > 0.0)) {
    throw domain_error("resample_dataset: parameters must be positive");
  }
  std::vector<Observation> out;
  out.reserve(templ.n());
  for (const Observation& u : templ.observations()) {
    Observation o = u;
    const double tau = u.truncated() ? u.tau_L : 0.0;
    const double t1 = weibull_draw_above(model.alpha1, model.lambda1, tau, rng);
    const double t2 = weibull_draw_above(model.alpha2, model.lambda2, tau, rng);
    const double t = std::min(t1, t2);
    if (t >= u.tau_R) {
      o.t = u.tau_R;
      o.delta = Cause::censored;
    } else {
      o.t = t;
      o.delta = t1 <= t2 ? Cause::first : Cause::second;
    }
    out.push_back(o);
  }
  return Dataset(std::move(out));
}

/// Bootstrap estimates, one row per successful replicate in replicate order.
struct BootstrapDistribution {
  std::vector<std::string> parameters;
  std::vector<std::vector<double>> estimates;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  std::size_t failed_replicates = 0;

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c;
    c.reserve(estimates.size());
    for (const auto& row : estimates) c.push_back(row[j]);
    return c;
  }
  std::vector<double> column(const std::string& name) const {
    const auto it = std::find(parameters.begin(), parameters.end(), name);
    if (it == parameters.end()) throw domain_error("unknown bootstrap parameter " + name);
    return column(static_cast<std::size_t>(it - parameters.begin()));
  }
};

struct BootstrapOptions {
  std::size_t B = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  SolverOptions solver;  // init is replaced by the original shape estimate
};

namespace detail {

template <class Refit>
BootstrapDistribution run_bootstrap(const Dataset& data, const LatentModel& model, std::vector<std::string> names,
                                    const BootstrapOptions& opt, Refit&& refit) {
  if (opt.B < 2) throw domain_error("bootstrap needs B >= 2");
  std::vector<std::optional<std::vector<double>>> slots(opt.B);
  parallel_for(opt.B, opt.threads, [&](std::size_t i) {
    Rng rng = make_rng(opt.seed, "bootstrap", i);
    const Dataset sample = resample_dataset(data, model, rng);
    if (sample.m1() == 0 || sample.m2() == 0) return;
    try {
      slots[i] = refit(sample);
    } catch (const convergence_error&) {
    }
  });
  BootstrapDistribution dist;
  dist.parameters = std::move(names);
  dist.B = opt.B;
  dist.seed = opt.seed;
  for (auto& s : slots) {
    if (s) dist.estimates.push_back(std::move(*s));
    else ++dist.failed_replicates;
  }
  if (2 * dist.failed_replicates > opt.B) throw unstable_bootstrap_error(dist.failed_replicates, opt.B);
  return dist;
}

}  // namespace detail

/// Parametric bootstrap of the common-shape MLE: B resample-then-refit cycles
/// under the fitted model. Replicates with an empty cause or a failed refit are
/// counted, not redrawn.
inline BootstrapDistribution bootstrap_distribution(const Dataset& data, const CommonShapeFit& fit,
                                                    const BootstrapOptions& opt = {}) {
  SolverOptions solver = opt.solver;
  solver.init = fit.alpha_hat;
  return detail::run_bootstrap(
      data, LatentModel::common(fit.alpha_hat, fit.lambda1_hat, fit.lambda2_hat), {"alpha", "lambda1", "lambda2"},
      opt, [&](const Dataset& s) {
        const CommonShapeFit f = solve_alpha(s, solver, false);
        return std::vector<double>{f.alpha_hat, f.lambda1_hat, f.lambda2_hat};
      });
}

/// Parametric bootstrap of the separate-shape MLE.
inline BootstrapDistribution bootstrap_distribution(const Dataset& data, const SeparateShapeFit& fit,
                                                    const BootstrapOptions& opt = {}) {
  return detail::run_bootstrap(data, fit.model(), {"alpha1", "lambda1", "alpha2", "lambda2"}, opt,
                               [&](const Dataset& s) {
                                 SolverOptions solver = opt.solver;
                                 solver.init = fit.alpha1_hat;
                                 const ProfileMaximum p1 = maximize_profile(s, ProfileTarget::cause(s, 1), solver);
                                 solver.init = fit.alpha2_hat;
                                 const ProfileMaximum p2 = maximize_profile(s, ProfileTarget::cause(s, 2), solver);
                                 const double l1 = static_cast<double>(s.m1()) / w_sums(s, p1.alpha, false).w2();
                                 const double l2 = static_cast<double>(s.m2()) / w_sums(s, p2.alpha, false).w2();
                                 return std::vector<double>{p1.alpha, l1, p2.alpha, l2};
                               });
}

}  // namespace ltrc
