#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace ltrc;

namespace {

SimConfig quick(std::size_t n, double trunc, LatentModel params, std::size_t reps, std::uint64_t seed) {
  SimConfig c;
  c.n = n;
  c.truncation_fraction = trunc;
  c.params = params;
  c.replications = reps;
  c.seed = seed;
  c.bootstrap_B = 50;
  c.posterior_N = 500;
  return c;
}

const LatentModel kFirst = LatentModel::common(2.0, 0.0625, 0.04);
const LatentModel kSecond = LatentModel::common(0.5, 0.378, 0.408);

}  // namespace

TEST(GenerateUnit, TruncatedUnitsSurviveTheTruncationYear) {
  SimConfig c;
  Rng rng = make_rng(1, "units");
  for (int i = 0; i < 10000; ++i) {
    const Observation o = generate_unit(c, true, rng);
    ASSERT_TRUE(o.truncated());
    EXPECT_GT(o.t, o.tau_L);
    EXPECT_GE(o.tau_L, 1.0);
    EXPECT_LE(o.tau_L, 5.0);
    EXPECT_NO_THROW(validate(o));
  }
}

TEST(GenerateUnit, UntruncatedUnitsUseThePostPool) {
  SimConfig c;
  Rng rng = make_rng(2, "units");
  for (int i = 0; i < 2000; ++i) {
    const Observation o = generate_unit(c, false, rng);
    EXPECT_FALSE(o.truncated());
    EXPECT_GE(o.tau_R, 1.0);
    EXPECT_LE(o.tau_R, 4.0);
  }
}

TEST(GenerateDataset, ExactTruncatedCount) {
  SimConfig c;
  c.n = 101;
  c.truncation_fraction = 0.3;
  Rng rng = make_rng(3, "count");
  const Dataset d = generate_dataset(c, rng);
  std::size_t k = 0;
  for (const auto& o : d.observations()) k += o.truncated();
  EXPECT_EQ(k, 30u);
}

TEST(GenerateDataset, CensoredFractionsMatchTheDesign) {
  auto frac = [](LatentModel p, double trunc) {
    SimConfig c;
    c.n = 10000;
    c.truncation_fraction = trunc;
    c.params = p;
    Rng rng = make_rng(4, "censoring");
    return censored_fraction(generate_dataset(c, rng));
  };
  EXPECT_NEAR(frac(kFirst, 0.1), 0.50, 0.03);
  EXPECT_NEAR(frac(kFirst, 0.3), 0.40, 0.03);
  EXPECT_NEAR(frac(kSecond, 0.1), 0.33, 0.03);
  EXPECT_NEAR(frac(kSecond, 0.3), 0.35, 0.03);
}

TEST(SimConfig, ValidatesPoolsAndFractions) {
  SimConfig c;
  c.pre_years.probs = {0.5, 0.5, 0.5, 0.5, 0.5};
  EXPECT_THROW(c.validate(), domain_error);
  c = SimConfig{};
  c.truncation_fraction = 1.5;
  EXPECT_THROW(c.validate(), domain_error);
  c = SimConfig{};
  c.post_years = YearPool::uniform(1979, 1983);
  EXPECT_THROW(c.validate(), domain_error);
  c = SimConfig{};
  c.replications = 0;
  EXPECT_THROW(run_study(c), domain_error);
}

TEST(RunStudy, SingleReplicationRmseEqualsAbsoluteBias) {
  const SimResult r = run_study(quick(60, 0.3, kFirst, 1, 5));
  ASSERT_EQ(r.completed, 1u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(r.mle[j].rmse, std::abs(r.mle[j].bias));
    EXPECT_EQ(r.bayes[j].rmse, std::abs(r.bayes[j].bias));
  }
}

TEST(RunStudy, BitExactUnderFixedSeed) {
  SimConfig c = quick(60, 0.1, kFirst, 6, 9);
  std::ostringstream a, b;
  write_study_csv(a, run_study(c));
  c.threads = 3;
  write_study_csv(b, run_study(c));
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunStudy, AggregatesAreWellFormed) {
  const SimResult r = run_study(quick(80, 0.3, kSecond, 10, 10));
  EXPECT_EQ(r.completed + r.failed, 10u);
  EXPECT_EQ(r.intervals.size(), 4u);
  for (const auto& [method, table] : r.intervals) {
    for (const auto& row : table) {
      for (const auto& cell : row) {
        EXPECT_GE(cell.coverage, 0.0);
        EXPECT_LE(cell.coverage, 1.0);
        EXPECT_GE(cell.average_length, 0.0);
      }
      EXPECT_LE(row[0].average_length, row[1].average_length);
    }
  }
}

TEST(RunStudy, TableOneThirtyPercentAtDeskScale) {
  SimConfig c = quick(100, 0.3, kFirst, 200, 11);
  c.bootstrap_B = 500;
  c.posterior_N = 2000;
  const SimResult r = run_study(c);
  EXPECT_NEAR(r.mle[0].bias, 0.050, 0.1);
  EXPECT_NEAR(r.intervals.at(IntervalMethod::bc_bootstrap)[0][1].coverage, 0.952, 0.05);
}

TEST(RunStudy, TableEightBayesBiasOfShapeIsSmall) {
  SimConfig c = quick(200, 0.1, kSecond, 200, 12);
  c.bootstrap_B = 20;
  c.posterior_N = 2000;
  const SimResult r = run_study(c);
  EXPECT_LT(std::abs(r.bayes[0].bias), 0.02);
}

TEST(StudyPreset, NamesMapToDesigns) {
  EXPECT_EQ(study_preset("table1")->n, 100u);
  EXPECT_EQ(study_preset("table6")->n, 200u);
  EXPECT_EQ(study_preset("table7")->params.alpha1, 0.5);
  EXPECT_FALSE(study_preset("table9").has_value());
}

TEST(WriteStudyCsv, LongFormatRows) {
  const SimResult r = run_study(quick(60, 0.1, kFirst, 3, 13));
  std::ostringstream os;
  write_study_csv_header(os);
  write_study_csv(os, r);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "param,trunc,metric,nominal,method,value");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5) << line;
  }
  // 3 parameters x (4 point rows + 4 methods x 2 levels x 2 metrics) + 3 diagnostics
  EXPECT_EQ(rows, 3u * (4 + 16) + 3);
}
