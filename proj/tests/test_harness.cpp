#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "crannpc/harness.hpp"
#include "crannpc/types.hpp"

using namespace crannpc;

TEST(Config, EmptyGivesDefaults) {
  const LoadedConfig c = parse_config("");
  EXPECT_EQ(c.scenario.num_rrh, 20);
  EXPECT_EQ(c.scenario.num_ue, 16);
  EXPECT_DOUBLE_EQ(c.scenario.rate_target, 15.0);
  EXPECT_FALSE(c.desk_scale);
  EXPECT_EQ(parse_config("{}").scenario.csi_cluster_size, 6);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config(R"({"serving_cluster_size": 7, "csi_cluster_size": 6})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"num_ue": "many"})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  EXPECT_THROW(parse_experiment_kind("admitted_vs_z"), ConfigError);
  try {
    parse_config(R"({"rate_targt": 3})");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("rate_targt"), std::string::npos);
    EXPECT_NE(msg.find("rate_target"), std::string::npos);
  }
}

TEST(Config, KindNamesRoundTrip) {
  for (auto k : {ExperimentKind::kTightness, ExperimentKind::kAdmittedVsRmin, ExperimentKind::kAdmittedVsX,
                 ExperimentKind::kNpcVsX, ExperimentKind::kAdmittedVsY, ExperimentKind::kNpcVsY,
                 ExperimentKind::kAdmittedVsCmax, ExperimentKind::kNpcVsCmax, ExperimentKind::kConvergenceTrace})
    EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
}

TEST(Config, ExplicitKeysOverrideDeskScale) {
  const LoadedConfig a = parse_config(R"({"num_ue": 5, "desk_scale": true})");
  const LoadedConfig b = parse_config(R"({"desk_scale": true, "num_ue": 5})");
  EXPECT_TRUE(a.desk_scale);
  EXPECT_EQ(a.scenario.num_ue, 5);
  EXPECT_EQ(b.scenario.num_ue, 5);
  EXPECT_EQ(a.scenario.num_rrh, desk_scale(ScenarioConfig{}).num_rrh);
}

TEST(Experiment, SeedsAreIndependentOfThePoint) {
  EXPECT_EQ(trial_seed(7, 3), trial_seed(7, 3));
  EXPECT_NE(trial_seed(7, 3), trial_seed(7, 4));
  EXPECT_NE(trial_seed(7, 3), trial_seed(8, 3));
}

namespace {

ExperimentSpec small_spec() {
  const LoadedConfig c =
      parse_config(R"({"experiment": "admitted_vs_rmin", "desk_scale": true, "rate_target": 20, "num_ue": 4,
                       "sweep": [10, 20], "trials": 1, "seed": 5, "threads": 1})");
  ExperimentSpec s = c.experiment;
  s.base = c.scenario;
  return s;
}

}  // namespace

TEST(Experiment, SameSeedSameOutput) {
  const ExperimentSpec s = small_spec();
  const ExperimentResult a = run_experiment(s), b = run_experiment(s);
  EXPECT_EQ(a.trials.to_csv(), b.trials.to_csv());
  EXPECT_EQ(a.summary.to_csv(), b.summary.to_csv());
  EXPECT_EQ(a.invariant_failures, 0);
  EXPECT_EQ(a.failed_trials, 0);
  EXPECT_NE(a.report.find("rate_target = 20"), std::string::npos);
  EXPECT_NE(a.report.find("seed = 5"), std::string::npos);
}

TEST(Experiment, WritesItsFiles) {
  ExperimentSpec s = small_spec();
  s.sweep = {15};
  const auto dir = std::filesystem::temp_directory_path() / "crannpc_harness_test";
  std::filesystem::remove_all(dir);
  s.output_dir = dir.string();
  write_experiment(run_experiment(s), s.output_dir);
  for (const char* f : {"trials.csv", "summary.csv", "report.txt"}) {
    std::ifstream in(dir / f);
    EXPECT_TRUE(in.good()) << f;
    std::string first;
    std::getline(in, first);
    EXPECT_FALSE(first.empty()) << f;
  }
  std::filesystem::remove_all(dir);
}

TEST(Experiment, CsvQuotesCommas) {
  ResultTable t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x,y"}};
  EXPECT_EQ(t.to_csv(), "a,b\n1,\"x,y\"\n");
}
