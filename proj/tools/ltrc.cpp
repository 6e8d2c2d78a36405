// Command-line front end: fit, bootstrap, bayes, lrt, profile, simulate, replay.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "ltrc/ltrc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kArtifactVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kInputError = 2, kFitError = 3 };

/// Every setting that influences an output. Serialized into manifest.json.
struct Settings {
  std::string subcommand;
  std::string input;
  double scale = ltrc::kTransformerScale;
  int trunc_year = ltrc::kTransformerTruncationYear;
  int censor_year = ltrc::kTransformerCensorYear;
  double tol = 1e-8;
  std::size_t B = 1000;
  std::size_t N = 10000;
  std::vector<double> levels{0.90, 0.95};
  std::uint64_t seed = 1;
  bool separate = false;
  std::string preset;
  std::size_t replications = 200;
  double alpha_min = 0.5;
  double alpha_max = 6.0;
  std::size_t points = 200;
  double b0 = 1e-4;
};

json to_json(const Settings& s) {
  return {{"subcommand", s.subcommand}, {"input", s.input},
          {"scale", s.scale},           {"trunc_year", s.trunc_year},
          {"censor_year", s.censor_year}, {"tol", s.tol},
          {"B", s.B},                   {"N", s.N},
          {"levels", s.levels},         {"seed", s.seed},
          {"separate", s.separate},     {"preset", s.preset},
          {"replications", s.replications}, {"alpha_min", s.alpha_min},
          {"alpha_max", s.alpha_max},   {"points", s.points},
          {"b0", s.b0}};
}

Settings settings_from_json(const json& j) {
  Settings s;
  s.subcommand = j.at("subcommand").get<std::string>();
  s.input = j.value("input", s.input);
  s.scale = j.value("scale", s.scale);
  s.trunc_year = j.value("trunc_year", s.trunc_year);
  s.censor_year = j.value("censor_year", s.censor_year);
  s.tol = j.value("tol", s.tol);
  s.B = j.value("B", s.B);
  s.N = j.value("N", s.N);
  s.levels = j.value("levels", s.levels);
  s.seed = j.value("seed", s.seed);
  s.separate = j.value("separate", s.separate);
  s.preset = j.value("preset", s.preset);
  s.replications = j.value("replications", s.replications);
  s.alpha_min = j.value("alpha_min", s.alpha_min);
  s.alpha_max = j.value("alpha_max", s.alpha_max);
  s.points = j.value("points", s.points);
  s.b0 = j.value("b0", s.b0);
  return s;
}

/// Output files are staged in memory and only written once every computation
/// has succeeded, so a failing run leaves nothing behind.
struct Outputs {
  std::ostringstream report;
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::string> warnings;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

std::string g(double v) { return fmt::format("{:.10g}", v); }

ltrc::Dataset load(const Settings& s) {
  if (s.input.empty()) throw ltrc::error("--input is required");
  const auto records = ltrc::parse_transformer_csv(fs::path(s.input));
  return ltrc::to_dataset(records, s.trunc_year, s.censor_year, s.scale);
}

ltrc::SolverOptions solver(const Settings& s) {
  ltrc::SolverOptions o;
  o.tol = s.tol;
  return o;
}

std::string interval_csv_header() { return "parameter,level,method,lower,upper\n"; }

void interval_row(std::ostringstream& os, const std::string& name, const ltrc::ConfidenceInterval& ci) {
  fmt::print(os, "{},{:.2f},{},{},{}\n", name, ci.level, ltrc::to_string(ci.method), g(ci.lower), g(ci.upper));
}

void cmd_fit(const Settings& s, Outputs& out) {
  const ltrc::Dataset data = load(s);
  auto& r = out.report;
  fmt::print(r, "n = {}, m1 = {}, m2 = {}, censored = {}\n", data.n(), data.m1(), data.m2(), data.n() - data.m());
  const ltrc::CommonShapeFit fit = ltrc::solve_alpha(data, solver(s));
  fmt::print(r, "common shape:   alpha = {:.3f}  lambda1 = {:.3f}  lambda2 = {:.3f}  loglik = {:.4f}\n", fit.alpha_hat,
             fit.lambda1_hat, fit.lambda2_hat, fit.loglik);
  fmt::print(r, "  iterations = {}, unimodality certificate: {}\n", fit.iterations,
             fit.unimodality_certified ? "d(alpha) >= 0 on grid" : "not certified");
  if (!fit.unimodality_certified) out.warnings.push_back("profile unimodality not certified on the scan grid");
  if (fit.used_fallback) out.warnings.push_back("fixed-point iteration fell back to bracketed maximization");
  json j = {{"common",
             {{"alpha", fit.alpha_hat},
              {"lambda1", fit.lambda1_hat},
              {"lambda2", fit.lambda2_hat},
              {"loglik", fit.loglik},
              {"iterations", fit.iterations},
              {"unimodality_certified", fit.unimodality_certified},
              {"used_fallback", fit.used_fallback}}}};
  if (s.separate) {
    const ltrc::SeparateShapeFit sep = ltrc::fit_separate(data, solver(s));
    fmt::print(r, "separate shape: alpha1 = {:.3f}  lambda1 = {:.3f}  alpha2 = {:.3f}  lambda2 = {:.3f}  loglik = {:.4f}\n",
               sep.alpha1_hat, sep.lambda1_hat, sep.alpha2_hat, sep.lambda2_hat, sep.loglik);
    j["separate"] = {{"alpha1", sep.alpha1_hat}, {"lambda1", sep.lambda1_hat}, {"alpha2", sep.alpha2_hat},
                     {"lambda2", sep.lambda2_hat}, {"loglik", sep.loglik},
                     {"unimodality_certified", sep.unimodality_certified}};
  }
  out.add("fit.json", j.dump(2) + "\n");
}

void cmd_bootstrap(const Settings& s, Outputs& out, unsigned threads) {
  const ltrc::Dataset data = load(s);
  ltrc::BootstrapOptions bo;
  bo.B = s.B;
  bo.seed = s.seed;
  bo.threads = threads;
  bo.solver = solver(s);
  ltrc::BootstrapDistribution dist;
  std::vector<double> original;
  if (s.separate) {
    const auto fit = ltrc::fit_separate(data, solver(s));
    dist = ltrc::bootstrap_distribution(data, fit, bo);
    original = {fit.alpha1_hat, fit.lambda1_hat, fit.alpha2_hat, fit.lambda2_hat};
  } else {
    const auto fit = ltrc::solve_alpha(data, solver(s));
    dist = ltrc::bootstrap_distribution(data, fit, bo);
    original = {fit.alpha_hat, fit.lambda1_hat, fit.lambda2_hat};
  }
  if (dist.failed_replicates > 0) {
    out.warnings.push_back(fmt::format("{} of {} bootstrap replicates failed", dist.failed_replicates, dist.B));
  }
  std::ostringstream ci;
  ci << interval_csv_header();
  auto& r = out.report;
  fmt::print(r, "parametric bootstrap, B = {}, seed = {}, failed = {}\n", dist.B, dist.seed, dist.failed_replicates);
  fmt::print(r, "{:<8} {:>6} {:>22} {:>22}\n", "param", "level", "BC-boot", "P-boot");
  for (std::size_t j = 0; j < dist.parameters.size(); ++j) {
    const auto col = dist.column(j);
    for (double level : s.levels) {
      const auto bc = ltrc::bc_interval(col, original[j], level);
      const auto pc = ltrc::percentile_interval(col, level);
      interval_row(ci, dist.parameters[j], bc);
      interval_row(ci, dist.parameters[j], pc);
      fmt::print(r, "{:<8} {:>5.0f}% ({:>9.3f},{:>9.3f}) ({:>9.3f},{:>9.3f})\n", dist.parameters[j], 100 * level,
                 bc.lower, bc.upper, pc.lower, pc.upper);
    }
  }
  std::ostringstream reps;
  for (std::size_t j = 0; j < dist.parameters.size(); ++j) reps << (j ? "," : "") << dist.parameters[j];
  reps << '\n';
  for (const auto& row : dist.estimates) {
    for (std::size_t j = 0; j < row.size(); ++j) reps << (j ? "," : "") << g(row[j]);
    reps << '\n';
  }
  out.add("bootstrap_intervals.csv", ci.str());
  out.add("bootstrap_replicates.csv", reps.str());
}

void credible_rows(const Settings& s, Outputs& out, std::ostringstream& ci, const std::string& name,
                   const std::vector<double>& draws) {
  const auto est = ltrc::bayes_estimates_mc(draws);
  fmt::print(out.report, "{:<8} mean = {:>9.3f}  var = {:>10.5f}\n", name, est.estimate, est.variance);
  for (double level : s.levels) {
    const auto sym = ltrc::symmetric_interval(draws, 1.0 - level);
    const auto hpd = ltrc::hpd_interval(draws, 1.0 - level);
    interval_row(ci, name, sym);
    interval_row(ci, name, hpd);
    fmt::print(out.report, "{:<8} {:>5.0f}% symmetric ({:>9.3f},{:>9.3f})  HPD ({:>9.3f},{:>9.3f})\n", name,
               100 * level, sym.lower, sym.upper, hpd.lower, hpd.upper);
  }
}

void cmd_bayes(const Settings& s, Outputs& out) {
  const ltrc::Dataset data = load(s);
  std::ostringstream ci, dr;
  ci << interval_csv_header();
  fmt::print(out.report, "posterior sampling, N = {}, seed = {}\n", s.N, s.seed);
  bool fallback = false;
  if (s.separate) {
    const auto draws = ltrc::sample_posterior_separate(data, {}, s.N, s.seed);
    fallback = draws.used_grid_fallback;
    using D = ltrc::SeparateDraw;
    const std::vector<std::pair<std::string, double D::*>> cols{
        {"alpha1", &D::alpha1}, {"lambda1", &D::lambda1}, {"alpha2", &D::alpha2}, {"lambda2", &D::lambda2}};
    for (const auto& [name, field] : cols) credible_rows(s, out, ci, name, draws.column(field));
    dr << "alpha1,lambda1,alpha2,lambda2\n";
    for (const auto& d : draws.draws) dr << g(d.alpha1) << ',' << g(d.lambda1) << ',' << g(d.alpha2) << ',' << g(d.lambda2) << '\n';
  } else {
    const auto draws = ltrc::sample_posterior(data, {}, s.N, s.seed);
    fallback = draws.used_grid_fallback;
    credible_rows(s, out, ci, "alpha", draws.alpha());
    credible_rows(s, out, ci, "lambda1", draws.lambda1());
    credible_rows(s, out, ci, "lambda2", draws.lambda2());
    dr << "alpha,lambda1,lambda2\n";
    for (const auto& d : draws.draws) dr << g(d.alpha) << ',' << g(d.lambda1) << ',' << g(d.lambda2) << '\n';
  }
  if (fallback) out.warnings.push_back("log-concavity not certified; shape drawn by grid inversion");
  out.add("posterior_draws.csv", dr.str());
  out.add("posterior_intervals.csv", ci.str());
}

void cmd_lrt(const Settings& s, Outputs& out) {
  const ltrc::Dataset data = load(s);
  const auto t = ltrc::lrt_equal_shapes(data, solver(s));
  fmt::print(out.report, "likelihood ratio test of equal shapes\n");
  fmt::print(out.report, "  common loglik   = {:.6f}\n  separate loglik = {:.6f}\n", t.common.loglik, t.separate.loglik);
  fmt::print(out.report, "  statistic = {:.4f}, critical value (5%) = {:.3f}: {}\n", t.statistic, t.critical_value_95,
             t.reject ? "reject" : "fail to reject");
  const json j = {{"statistic", t.statistic},
                  {"critical_value_95", t.critical_value_95},
                  {"reject", t.reject},
                  {"common_loglik", t.common.loglik},
                  {"separate_loglik", t.separate.loglik}};
  out.add("lrt.json", j.dump(2) + "\n");
}

void cmd_profile(const Settings& s, Outputs& out) {
  const ltrc::Dataset data = load(s);
  ltrc::require_both_causes(data);
  if (!(s.alpha_min > 0.0 && s.alpha_max > s.alpha_min && s.points >= 2)) {
    throw ltrc::domain_error("profile grid needs 0 < alpha-min < alpha-max and at least two points");
  }
  std::ostringstream csv;
  csv << "alpha,p_alpha,d_alpha,d_tilde_alpha\n";
  bool d_ok = true, dt_ok = true;
  for (double a : ltrc::numerics::linear_grid(s.alpha_min, s.alpha_max, s.points)) {
    const double d = ltrc::d_alpha(data, a);
    const double dt = ltrc::d_tilde_alpha(data, a, s.b0);
    d_ok = d_ok && d >= 0.0;
    dt_ok = dt_ok && dt >= 0.0;
    csv << g(a) << ',' << g(ltrc::profile_loglik(data, a)) << ',' << g(d) << ',' << g(dt) << '\n';
  }
  fmt::print(out.report, "profile grid: {} points on [{}, {}]\n", s.points, s.alpha_min, s.alpha_max);
  fmt::print(out.report, "  d(alpha) >= 0 on grid: {}\n  d~(alpha) >= 0 on grid: {}\n", d_ok, dt_ok);
  out.add("profile.csv", csv.str());
}

void cmd_simulate(const Settings& s, Outputs& out, unsigned threads) {
  const auto preset = ltrc::study_preset(s.preset);
  if (!preset) throw ltrc::domain_error("unknown preset '" + s.preset + "' (expected table1 .. table8)");
  std::ostringstream csv;
  ltrc::write_study_csv_header(csv);
  fmt::print(out.report, "simulation preset {}: n = {}, replications = {}, B = {}, N = {}\n", preset->name, preset->n,
             s.replications, s.B, s.N);
  for (std::size_t k = 0; k < preset->truncation_fractions.size(); ++k) {
    ltrc::SimConfig cfg;
    cfg.n = preset->n;
    cfg.params = preset->params;
    cfg.truncation_fraction = preset->truncation_fractions[k];
    cfg.replications = s.replications;
    cfg.bootstrap_B = s.B;
    cfg.posterior_N = s.N;
    cfg.seed = ltrc::derive_seed(s.seed, preset->name, k);
    cfg.threads = threads;
    const ltrc::SimResult res = ltrc::run_study(cfg);
    ltrc::write_study_csv(csv, res);
    if (res.failed > 0) out.warnings.push_back(fmt::format("{} replications failed at truncation {}", res.failed,
                                                           cfg.truncation_fraction));
    fmt::print(out.report, "truncation {:.0f}%: censored {:.3f}, completed {}, failed {}\n",
               100 * cfg.truncation_fraction, res.mean_censored_fraction, res.completed, res.failed);
    for (std::size_t j = 0; j < 3; ++j) {
      fmt::print(out.report, "  {:<8} MLE bias {:>7.3f} rmse {:>6.3f} | Bayes bias {:>7.3f} rmse {:>6.3f}\n",
                 ltrc::kCommonParameters[j], res.mle[j].bias, res.mle[j].rmse, res.bayes[j].bias, res.bayes[j].rmse);
    }
  }
  out.add("simulation.csv", csv.str());
}

int run(const Settings& s, const std::string& out_dir, unsigned threads) {
  Outputs out;
  try {
    if (s.subcommand == "fit") cmd_fit(s, out);
    else if (s.subcommand == "bootstrap") cmd_bootstrap(s, out, threads);
    else if (s.subcommand == "bayes") cmd_bayes(s, out);
    else if (s.subcommand == "lrt") cmd_lrt(s, out);
    else if (s.subcommand == "profile") cmd_profile(s, out);
    else if (s.subcommand == "simulate") cmd_simulate(s, out, threads);
    else throw ltrc::domain_error("unknown subcommand " + s.subcommand);
  } catch (const ltrc::parse_error& e) {
    fmt::print(stderr, "error: input: {}\n", e.what());
    return kInputError;
  } catch (const ltrc::consistency_error& e) {
    fmt::print(stderr, "error: input: {}\n", e.what());
    return kInputError;
  } catch (const ltrc::convergence_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFitError;
  } catch (const ltrc::degenerate_data_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFitError;
  } catch (const ltrc::unstable_bootstrap_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFitError;
  } catch (const ltrc::domain_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  } catch (const ltrc::error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kInputError;
  }

  std::cout << out.report.str();
  for (const auto& w : out.warnings) fmt::print(stderr, "warning: {}\n", w);
  if (out_dir.empty()) return kOk;

  fs::create_directories(out_dir);
  json names = json::array();
  for (const auto& [name, content] : out.files) {
    std::ofstream(fs::path(out_dir) / name, std::ios::binary) << content;
    names.push_back(name);
  }
  const json manifest = {{"schema_version", kSchemaVersion}, {"artifact_version", kArtifactVersion},
                         {"settings", to_json(s)},           {"outputs", names},
                         {"warnings", out.warnings}};
  std::ofstream(fs::path(out_dir) / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weibull competing-risks analysis of left-truncated right-censored data"};
  app.require_subcommand(1);
  Settings s;
  std::string out_dir;
  int threads_flag = 0;

  auto data_opts = [&](CLI::App* c) {
    c->add_option("--input", s.input, "CSV with columns sn,install_year,exit_year,nu,delta")->required();
    c->add_option("--scale", s.scale, "Divide lifetimes by this factor")->capture_default_str();
    c->add_option("--trunc-year", s.trunc_year, "Left-truncation year")->capture_default_str();
    c->add_option("--censor-year", s.censor_year, "Right-censoring year")->capture_default_str();
    c->add_option("--tol", s.tol, "Fixed-point tolerance")->capture_default_str();
  };
  auto common_opts = [&](CLI::App* c) {
    c->add_option("--out", out_dir, "Directory for CSV/JSON outputs and manifest.json");
    c->add_option("--threads", threads_flag, "Worker threads (default: LTRC_THREADS, else all cores)");
  };

  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit");
  data_opts(fit);
  common_opts(fit);
  fit->add_flag("--separate", s.separate, "Also fit cause-specific shapes");

  auto* boot = app.add_subcommand("bootstrap", "Parametric bootstrap intervals");
  data_opts(boot);
  common_opts(boot);
  boot->add_flag("--separate", s.separate, "Bootstrap the separate-shape model");
  boot->add_option("--B", s.B, "Bootstrap replicates")->capture_default_str();
  boot->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  boot->add_option("--level", s.levels, "Confidence levels")->capture_default_str();

  auto* bayes = app.add_subcommand("bayes", "Posterior sampling and credible intervals");
  data_opts(bayes);
  common_opts(bayes);
  bayes->add_flag("--separate", s.separate, "Sample the separate-shape posterior");
  bayes->add_option("--N", s.N, "Posterior draws")->capture_default_str();
  bayes->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  bayes->add_option("--level", s.levels, "Credible levels")->capture_default_str();

  auto* lrt = app.add_subcommand("lrt", "Likelihood ratio test of equal shapes");
  data_opts(lrt);
  common_opts(lrt);

  auto* prof = app.add_subcommand("profile", "Export p(alpha), d(alpha) and d~(alpha) on a grid");
  data_opts(prof);
  common_opts(prof);
  prof->add_option("--alpha-min", s.alpha_min)->capture_default_str();
  prof->add_option("--alpha-max", s.alpha_max)->capture_default_str();
  prof->add_option("--points", s.points)->capture_default_str();
  prof->add_option("--b0", s.b0, "Prior rate entering d~(alpha)")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study for a results-table preset");
  common_opts(sim);
  sim->add_option("--preset", s.preset, "table1 .. table8")->required();
  sim->add_option("--replications", s.replications)->capture_default_str();
  sim->add_option("--B", s.B, "Bootstrap replicates per dataset")->capture_default_str();
  sim->add_option("--N", s.N, "Posterior draws per dataset")->capture_default_str();
  sim->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  sim->add_flag_callback("--full", [&] { s.replications = 1000; }, "Use 1000 replications");

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "Re-run the computation recorded in a manifest");
  replay->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  common_opts(replay);

  CLI11_PARSE(app, argc, argv);

  const unsigned threads = ltrc::resolve_threads(threads_flag);
  if (replay->parsed()) {
    try {
      std::ifstream in(manifest_path);
      const json m = json::parse(in);
      if (m.value("schema_version", 0) != kSchemaVersion) {
        fmt::print(stderr, "error: unsupported manifest schema version\n");
        return kInputError;
      }
      return run(settings_from_json(m.at("settings")), out_dir, threads);
    } catch (const json::exception& e) {
      fmt::print(stderr, "error: manifest: {}\n", e.what());
      return kInputError;
    }
  }
  s.subcommand = app.get_subcommands().front()->get_name();
  return run(s, out_dir, threads);
}
