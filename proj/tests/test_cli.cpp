#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
};

CliResult run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / ("ltrc_cli_" + std::to_string(::getpid()) + ".log");
  const std::string cmd = std::string(LTRC_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  fs::remove(log);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("ltrc_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(d);
  return d;
}

const std::string kInput = std::string(LTRC_DATA_DIR) + "/transformers.csv";

}  // namespace

TEST(Cli, MissingInputExitsTwoAndWritesNothing) {
  const fs::path out = fresh_dir("missing");
  const CliResult r = run("fit --input /nonexistent/data.csv --out " + out.string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_TRUE(!fs::exists(out) || fs::is_empty(out));
}

TEST(Cli, FitReportsTheCommonShape) {
  const CliResult r = run("fit --input " + kInput);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("2.795"), std::string::npos) << r.out;
}

TEST(Cli, LrtFailsToReject) {
  const CliResult r = run("lrt --input " + kInput);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("fail to reject"), std::string::npos) << r.out;
}

TEST(Cli, BayesIsReproducibleAndReplayable) {
  const fs::path a = fresh_dir("bayes_a"), b = fresh_dir("bayes_b"), c = fresh_dir("bayes_c");
  const std::string args = "bayes --input " + kInput + " --N 2000 --seed 7 --threads 2 --out ";
  ASSERT_EQ(run(args + a.string()).code, 0);
  ASSERT_EQ(run(args + b.string()).code, 0);
  for (const char* f : {"posterior_draws.csv", "posterior_intervals.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const CliResult r = run("replay --manifest " + (a / "manifest.json").string() + " --out " + c.string());
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"posterior_draws.csv", "posterior_intervals.csv"}) EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Cli, BootstrapIntervalsHaveTheDocumentedColumns) {
  const fs::path out = fresh_dir("boot");
  ASSERT_EQ(run("bootstrap --input " + kInput + " --B 100 --seed 3 --out " + out.string()).code, 0);
  const std::string csv = slurp(out / "bootstrap_intervals.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "parameter,level,method,lower,upper");
  fs::remove_all(out);
}

TEST(Cli, ProfileWritesTheGrid) {
  const fs::path out = fresh_dir("profile");
  ASSERT_EQ(run("profile --input " + kInput + " --points 50 --out " + out.string()).code, 0);
  std::ifstream in(out / "profile.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("alpha,p_alpha,d_alpha", 0), 0u) << line;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 50u);
  fs::remove_all(out);
}

TEST(Cli, BadLevelIsAUsageError) {
  EXPECT_EQ(run("bayes --input " + kInput + " --level 1.5").code, 1);
}
