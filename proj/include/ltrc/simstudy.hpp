#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ltrc/bayes.hpp"
#include "ltrc/bootstrap.hpp"
#include "ltrc/intervals.hpp"
#include "ltrc/mle_separate.hpp"
#include "ltrc/parallel.hpp"

namespace ltrc {

/// Installation-year pool with its probabilities.
struct YearPool {
  std::vector<int> years;
  std::vector<double> probs;

  void validate() const {
    if (years.empty() || years.size() != probs.size()) throw domain_error("year pool needs matching years and probabilities");
    double s = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw domain_error("year pool probabilities must be nonnegative");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw domain_error("year pool probabilities must sum to 1");
  }

  int draw(Rng& rng) const {
    const double u = uniform_open(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < years.size(); ++i) {
      acc += probs[i];
      if (u < acc) return years[i];
    }
    return years.back();
  }

  static YearPool uniform(int first, int last) {
    YearPool p;
    for (int y = first; y <= last; ++y) p.years.push_back(y);
    p.probs.assign(p.years.size(), 1.0 / static_cast<double>(p.years.size()));
    return p;
  }
};

struct SimConfig {
  std::size_t n = 100;
  double truncation_fraction = 0.1;
  LatentModel params = LatentModel::common(2.0, 0.0625, 0.04);
  std::size_t replications = 200;
  std::size_t bootstrap_B = 1000;
  std::size_t posterior_N = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  int truncation_year = 1980;
  int censor_year = 1984;
  YearPool pre_years = YearPool::uniform(1975, 1979);
  YearPool post_years = YearPool::uniform(1980, 1983);
  double scale = 1.0;
  PriorSpec prior;

  std::size_t truncated_count() const {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * truncation_fraction));
  }

  void validate() const {
    if (n < 1) throw domain_error("simulation needs n >= 1");
    if (!(truncation_fraction >= 0.0 && truncation_fraction <= 1.0)) throw domain_error("truncation fraction must lie in [0, 1]");
    if (replications < 1) throw domain_error("simulation needs at least one replication");
    if (!(params.alpha1 > 0 && params.alpha2 > 0 && params.lambda1 > 0 && params.lambda2 > 0)) {
      throw domain_error("simulation parameters must be positive");
    }
    if (!(scale > 0.0)) throw domain_error("scale must be positive");
    pre_years.validate();
    post_years.validate();
    for (int y : pre_years.years) {
      if (y >= truncation_year) throw domain_error("pre-truncation installation years must precede the truncation year");
    }
    for (int y : post_years.years) {
      if (y < truncation_year || y >= censor_year) throw domain_error("post-truncation years must lie in [truncation, censor)");
    }
  }
};

inline constexpr std::size_t kMaxTruncationRedraws = 1'000'000;

/// One unit of the installation-year design. A truncated unit is redrawn
/// (installation year and both lifetimes) until it is still working at the
/// truncation year.
inline Observation generate_unit(const SimConfig& cfg, bool truncated, Rng& rng) {
  const LatentModel& p = cfg.params;
  for (std::size_t attempt = 0; attempt < kMaxTruncationRedraws; ++attempt) {
    const int year = truncated ? cfg.pre_years.draw(rng) : cfg.post_years.draw(rng);
    const double t1 = weibull_draw(p.alpha1, p.lambda1, rng);
    const double t2 = weibull_draw(p.alpha2, p.lambda2, rng);
    const double life = std::min(t1, t2);
    const double tau_L = static_cast<double>(cfg.truncation_year - year);
    if (truncated && !(life > tau_L)) continue;
    Observation o;
    o.tau_R = static_cast<double>(cfg.censor_year - year) / cfg.scale;
    o.nu = truncated ? Truncation::truncated : Truncation::none;
    o.tau_L = truncated ? tau_L / cfg.scale : 0.0;
    if (life >= static_cast<double>(cfg.censor_year - year)) {
      o.t = o.tau_R;
      o.delta = Cause::censored;
    } else {
      o.t = life / cfg.scale;
      o.delta = t1 <= t2 ? Cause::first : Cause::second;
    }
    return o;
  }
  throw error("generate_unit: truncation rejection exceeded the redraw cap");
}

/// n units with exactly round(n * truncation_fraction) truncated ones first.
inline Dataset generate_dataset(const SimConfig& cfg, Rng& rng) {
  const std::size_t k = cfg.truncated_count();
  std::vector<Observation> obs;
  obs.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) obs.push_back(generate_unit(cfg, i < k, rng));
  return Dataset(std::move(obs));
}

inline double censored_fraction(const Dataset& d) {
  return d.n() == 0 ? 0.0 : 1.0 - static_cast<double>(d.m()) / static_cast<double>(d.n());
}

inline constexpr std::array<double, 2> kNominalLevels{0.90, 0.95};
inline constexpr std::array<const char*, 3> kCommonParameters{"alpha", "lambda1", "lambda2"};

struct PointSummary {
  double bias = 0.0;
  double rmse = 0.0;
};

struct IntervalSummary {
  double coverage = 0.0;
  double average_length = 0.0;
};

/// Aggregates for one configuration. Index order: parameter (alpha, lambda1,
/// lambda2), then nominal level (0.90, 0.95).
struct SimResult {
  SimConfig config;
  std::size_t completed = 0;
  std::size_t failed = 0;
  double mean_censored_fraction = 0.0;
  double mean_bootstrap_failures = 0.0;
  std::array<PointSummary, 3> mle{};
  std::array<PointSummary, 3> bayes{};
  std::map<IntervalMethod, std::array<std::array<IntervalSummary, 2>, 3>> intervals;
};

/// Everything computed on one simulated dataset.
struct ReplicateOutcome {
  double censored_fraction = 0.0;
  std::array<double, 3> mle{};
  std::array<double, 3> bayes{};
  std::map<IntervalMethod, std::array<std::array<ConfidenceInterval, 2>, 3>> intervals;
  std::size_t bootstrap_failures = 0;
};

inline std::optional<ReplicateOutcome> run_replicate(const SimConfig& cfg, std::size_t r) {
  Rng rng = make_rng(cfg.seed, "simstudy", r);
  const Dataset data = generate_dataset(cfg, rng);
  ReplicateOutcome out;
  out.censored_fraction = censored_fraction(data);
  if (data.m1() == 0 || data.m2() == 0) return std::nullopt;
  try {
    const CommonShapeFit fit = solve_alpha(data, {}, false);
    out.mle = {fit.alpha_hat, fit.lambda1_hat, fit.lambda2_hat};

    BootstrapOptions bopt;
    bopt.B = cfg.bootstrap_B;
    bopt.seed = derive_seed(cfg.seed, "simstudy_bootstrap", r);
    const BootstrapDistribution boot = bootstrap_distribution(data, fit, bopt);
    out.bootstrap_failures = boot.failed_replicates;

    const PosteriorDraws post = sample_posterior(data, cfg.prior, cfg.posterior_N,
                                                 derive_seed(cfg.seed, "simstudy_posterior", r));
    const std::array<std::vector<double>, 3> draws{post.alpha(), post.lambda1(), post.lambda2()};

    for (std::size_t j = 0; j < 3; ++j) {
      const std::vector<double> col = boot.column(j);
      out.bayes[j] = numerics::mean(draws[j]);
      for (std::size_t l = 0; l < 2; ++l) {
        const double level = kNominalLevels[l];
        out.intervals[IntervalMethod::bc_bootstrap][j][l] = bc_interval(col, out.mle[j], level);
        out.intervals[IntervalMethod::percentile_bootstrap][j][l] = percentile_interval(col, level);
        out.intervals[IntervalMethod::symmetric_credible][j][l] = symmetric_interval(draws[j], 1.0 - level);
        out.intervals[IntervalMethod::hpd_credible][j][l] = hpd_interval(draws[j], 1.0 - level);
      }
    }
  } catch (const error&) {
    return std::nullopt;
  }
  return out;
}

/// Monte Carlo evaluation of the MLE, both bootstrap intervals, the Bayes
/// estimate and both credible intervals. Failed replicates are excluded from
/// the aggregates and counted.
inline SimResult run_study(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.params.alpha1 != cfg.params.alpha2) throw domain_error("run_study covers the common-shape model only");
  std::vector<std::optional<ReplicateOutcome>> slots(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) { slots[r] = run_replicate(cfg, r); });

  SimResult res;
  res.config = cfg;
  const std::array<double, 3> truth{cfg.params.alpha1, cfg.params.lambda1, cfg.params.lambda2};
  std::array<double, 3> mle_err{}, mle_sq{}, bayes_err{}, bayes_sq{};
  std::map<IntervalMethod, std::array<std::array<IntervalSummary, 2>, 3>> acc;
  double cens_sum = 0.0, boot_fail = 0.0;
  for (const auto& s : slots) {
    if (!s) {
      ++res.failed;
      continue;
    }
    ++res.completed;
    cens_sum += s->censored_fraction;
    boot_fail += static_cast<double>(s->bootstrap_failures);
    for (std::size_t j = 0; j < 3; ++j) {
      const double e1 = s->mle[j] - truth[j];
      const double e2 = s->bayes[j] - truth[j];
      mle_err[j] += e1;
      mle_sq[j] += e1 * e1;
      bayes_err[j] += e2;
      bayes_sq[j] += e2 * e2;
    }
    for (const auto& [method, table] : s->intervals) {
      for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t l = 0; l < 2; ++l) {
          const ConfidenceInterval& ci = table[j][l];
          acc[method][j][l].coverage += ci.contains(truth[j]) ? 1.0 : 0.0;
          acc[method][j][l].average_length += ci.length();
        }
      }
    }
  }
  if (res.completed == 0) return res;
  const double c = static_cast<double>(res.completed);
  res.mean_censored_fraction = cens_sum / c;
  res.mean_bootstrap_failures = boot_fail / c;
  for (std::size_t j = 0; j < 3; ++j) {
    res.mle[j] = {mle_err[j] / c, std::sqrt(mle_sq[j] / c)};
    res.bayes[j] = {bayes_err[j] / c, std::sqrt(bayes_sq[j] / c)};
  }
  for (auto& [method, table] : acc) {
    for (auto& row : table) {
      for (auto& cell : row) {
        cell.coverage /= c;
        cell.average_length /= c;
      }
    }
  }
  res.intervals = std::move(acc);
  return res;
}

/// Sample-size and parameter settings behind each results table. Tables 5-8
/// report the Bayes side of the same runs as tables 1-4.
struct StudyPreset {
  std::string name;
  std::size_t n = 100;
  LatentModel params;
  std::vector<double> truncation_fractions{0.1, 0.3};
};

inline std::optional<StudyPreset> study_preset(const std::string& name) {
  const LatentModel first = LatentModel::common(2.0, 0.0625, 0.04);
  const LatentModel second = LatentModel::common(0.5, 0.378, 0.408);
  const std::map<std::string, std::pair<std::size_t, LatentModel>> table{
      {"table1", {100, first}},  {"table2", {200, first}},  {"table3", {100, second}}, {"table4", {200, second}},
      {"table5", {100, first}},  {"table6", {200, first}},  {"table7", {100, second}}, {"table8", {200, second}},
  };
  const auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return StudyPreset{name, it->second.first, it->second.second, {0.1, 0.3}};
}

inline std::string_view method_label(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::bc_bootstrap: return "bc_boot";
    case IntervalMethod::percentile_bootstrap: return "p_boot";
    case IntervalMethod::symmetric_credible: return "symm_cri";
    case IntervalMethod::hpd_credible: return "hpd_cri";
  }
  return "unknown";
}

inline void write_study_csv_header(std::ostream& os) { os << "param,trunc,metric,nominal,method,value\n"; }

/// Long-format rows `param,trunc,metric,nominal,method,value`.
inline void write_study_csv(std::ostream& os, const SimResult& res) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  const std::string trunc = num(res.config.truncation_fraction).substr(0, 4);
  for (std::size_t j = 0; j < 3; ++j) {
    const std::string p = kCommonParameters[j];
    os << p << ',' << trunc << ",bias,,mle," << num(res.mle[j].bias) << '\n';
    os << p << ',' << trunc << ",rmse,,mle," << num(res.mle[j].rmse) << '\n';
    os << p << ',' << trunc << ",bias,,bayes," << num(res.bayes[j].bias) << '\n';
    os << p << ',' << trunc << ",rmse,,bayes," << num(res.bayes[j].rmse) << '\n';
    for (const auto& [method, table] : res.intervals) {
      for (std::size_t l = 0; l < 2; ++l) {
        const std::string nominal = num(kNominalLevels[l]).substr(0, 4);
        os << p << ',' << trunc << ",cp," << nominal << ',' << method_label(method) << ','
           << num(table[j][l].coverage) << '\n';
        os << p << ',' << trunc << ",al," << nominal << ',' << method_label(method) << ','
           << num(table[j][l].average_length) << '\n';
      }
    }
  }
  os << "all," << trunc << ",censored_fraction,,data," << num(res.mean_censored_fraction) << '\n';
  os << "all," << trunc << ",completed,,replications," << res.completed << '\n';
  os << "all," << trunc << ",failed,,replications," << res.failed << '\n';
}

struct LrtPower {
  double rejection_rate = 0.0;
  std::size_t completed = 0;
  std::size_t failed = 0;
};

/// Fraction of simulated datasets on which the equal-shape test rejects at 5%.
/// Works for unequal shapes, which is what a power check needs.
inline LrtPower lrt_power(const SimConfig& cfg) {
  cfg.validate();
  std::vector<int> outcome(cfg.replications, -1);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
    Rng rng = make_rng(cfg.seed, "lrt_power", r);
    const Dataset data = generate_dataset(cfg, rng);
    if (data.m1() == 0 || data.m2() == 0) return;
    try {
      outcome[r] = lrt_equal_shapes(data).reject ? 1 : 0;
    } catch (const error&) {
    }
  });
  LrtPower p;
  std::size_t rejects = 0;
  for (int o : outcome) {
    if (o < 0) {
      ++p.failed;
    } else {
      ++p.completed;
      rejects += static_cast<std::size_t>(o);
    }
  }
  p.rejection_rate = p.completed ? static_cast<double>(rejects) / static_cast<double>(p.completed) : 0.0;
  return p;
}

}  // namespace ltrc
