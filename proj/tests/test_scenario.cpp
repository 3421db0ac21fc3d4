#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "crannpc/beams.hpp"
#include "crannpc/scenario.hpp"
#include "crannpc/types.hpp"

using namespace crannpc;

TEST(Scenario, SameSeedSameDrop) {
  ScenarioConfig c;
  c.rng_seed = 99;
  const NetworkScenario a = generate_scenario(c), b = generate_scenario(c);
  for (int i = 0; i < c.num_rrh; ++i) {
    EXPECT_EQ(a.rrh_positions[i].x, b.rrh_positions[i].x);
    EXPECT_EQ(a.rrh_positions[i].y, b.rrh_positions[i].y);
  }
  for (int k = 0; k < c.num_ue; ++k) EXPECT_EQ(a.ue_positions[k].x, b.ue_positions[k].x);
  c.rng_seed = 100;
  EXPECT_NE(generate_scenario(c).rrh_positions[0].x, a.rrh_positions[0].x);
}

TEST(Scenario, PositionsInsideSquare) {
  ScenarioConfig c;
  const NetworkScenario s = generate_scenario(c);
  ASSERT_EQ(s.num_rrh(), 20);
  ASSERT_EQ(s.num_ue(), 16);
  auto inside = [&](const Point& p) { return std::abs(p.x) <= 1000.0 && std::abs(p.y) <= 1000.0; };
  EXPECT_TRUE(std::all_of(s.rrh_positions.begin(), s.rrh_positions.end(), inside));
  EXPECT_TRUE(std::all_of(s.ue_positions.begin(), s.ue_positions.end(), inside));
}

TEST(Scenario, InvalidConfigsRejected) {
  ScenarioConfig c;
  c.num_rrh = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ScenarioConfig{};
  c.serving_cluster_size = 7;
  c.csi_cluster_size = 6;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ScenarioConfig{};
  c.amplifier_inefficiency = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ScenarioConfig{};
  c.sleep_power_w = 7.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ScenarioConfig{};
  c.smoothing_theta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(ScenarioConfig{}.validate());
}

TEST(Scenario, ClustersAreNearestRrhs) {
  ScenarioConfig c;
  const NetworkScenario s = generate_scenario(c);
  const ClusterMap m = build_clusters(s);
  for (int k = 0; k < s.num_ue(); ++k) {
    ASSERT_EQ(static_cast<int>(m.serving(k).size()), c.serving_cluster_size);
    ASSERT_EQ(static_cast<int>(m.csi(k).size()), c.csi_cluster_size);
    std::vector<double> d;
    for (int i = 0; i < s.num_rrh(); ++i) d.push_back(distance_m(s.rrh_positions[i], s.ue_positions[k]));
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    for (int i : m.csi(k)) EXPECT_LE(d[i], sorted[c.csi_cluster_size - 1]);
    for (int i : m.serving(k)) {
      EXPECT_LE(d[i], sorted[c.serving_cluster_size - 1]);
      EXPECT_TRUE(m.csi_known(i, k));
    }
    EXPECT_EQ(m.coordinated(k).size(), m.csi(k).size() - m.serving(k).size());
  }
}

TEST(Scenario, EqualClusterSizesLeaveNoCoordinatedSet) {
  ScenarioConfig c;
  c.csi_cluster_size = c.serving_cluster_size;
  const ClusterMap m = build_clusters(generate_scenario(c));
  for (int k = 0; k < m.num_ue(); ++k) EXPECT_TRUE(m.coordinated(k).empty());
}

TEST(Scenario, ServedSetsFollowServingSets) {
  // 13 RRHs and UE 0 served by RRHs 0, 1 and 11.
  std::vector<std::vector<int>> serving = {{0, 1, 11}, {2, 3, 4}};
  std::vector<std::vector<int>> csi = {{0, 1, 11, 5}, {2, 3, 4}};
  const ClusterMap m(13, serving, csi);
  for (int i : {0, 1, 11}) {
    EXPECT_TRUE(m.serves(i, 0));
    EXPECT_NE(std::find(m.served(i).begin(), m.served(i).end(), 0), m.served(i).end());
  }
  EXPECT_TRUE(m.served(7).empty());
  EXPECT_EQ(m.slot(0, 11), 2);
  EXPECT_EQ(m.slot(0, 2), -1);
  EXPECT_EQ(m.coordinated(0), std::vector<int>{5});
  // a serving RRH outside the CSI set is rejected
  EXPECT_THROW(ClusterMap(13, {{0, 1}}, {{0}}), ConfigError);
}

TEST(Scenario, SingleUeServedByEveryRrh) {
  ScenarioConfig c;
  c.num_ue = 1;
  c.num_rrh = 6;
  c.serving_cluster_size = 6;
  c.csi_cluster_size = 6;
  const ClusterMap m = build_clusters(generate_scenario(c));
  for (int i = 0; i < 6; ++i) EXPECT_EQ(m.served(i), std::vector<int>{0});
}

TEST(Scenario, GridLayout) {
  for (double d : {3.0, 1.0}) {
    const GridScenario g = generate_grid_scenario(d, ScenarioConfig{});
    ASSERT_EQ(g.scenario.num_ue(), 9);
    ASSERT_EQ(g.scenario.num_rrh(), 27);
    std::multiset<int> all;
    for (int k = 0; k < 9; ++k) {
      ASSERT_EQ(g.clusters.serving(k).size(), 3u);
      for (int i : g.clusters.serving(k)) all.insert(i);
    }
    ASSERT_EQ(all.size(), 27u);
    EXPECT_EQ(std::set<int>(all.begin(), all.end()).size(), 27u);  // pairwise disjoint, covering
    EXPECT_NEAR(g.scenario.ue_positions[g.center_ue].x, 0.0, 1e-9);
    EXPECT_NEAR(g.scenario.ue_positions[g.center_ue].y, 0.0, 1e-9);
    // RRHs fall inside their UE's square
    const double half = d * 1000.0 / 6.0;
    for (int k = 0; k < 9; ++k)
      for (int i : g.clusters.serving(k)) {
        EXPECT_LE(std::abs(g.scenario.rrh_positions[i].x - g.scenario.ue_positions[k].x), half + 1e-9);
        EXPECT_LE(std::abs(g.scenario.rrh_positions[i].y - g.scenario.ue_positions[k].y), half + 1e-9);
      }
  }
}

TEST(PowerModel, RrhPower) {
  const ScenarioConfig c;
  EXPECT_DOUBLE_EQ(rrh_power(0.0, c), 4.3);
  EXPECT_DOUBLE_EQ(rrh_power(1.0, c), 10.8);
  EXPECT_DOUBLE_EQ(rrh_power(1e-12, c), 4.3);
  EXPECT_DOUBLE_EQ(rrh_power(1e-7, c), 4.0 * 1e-7 + 6.8);
}

TEST(PowerModel, NetworkPowerAndFronthaul) {
  ScenarioConfig c;
  c.num_rrh = 20;
  c.num_ue = 2;
  c.serving_cluster_size = 1;
  c.csi_cluster_size = 1;
  std::vector<std::vector<int>> serving = {{0}, {0}}, csi = {{0}, {0}};
  const ClusterMap m(20, serving, csi);
  BeamformerSet w(m, 1, 2);
  const std::vector<double> rates = {15.0, 15.0};
  EXPECT_DOUBLE_EQ(network_power(w, m, c, rates), 86.0);
  EXPECT_DOUBLE_EQ(fronthaul_load(w, m, c, 0, rates), 0.0);

  w.at(0, 0)(0) = 1.0;
  EXPECT_NEAR(network_power(w, m, c, rates), 4.0 + 2.5 + 0.5 * 15.0 + 86.0, 1e-12);

  w.at(1, 0)(1) = 1e-3;
  EXPECT_DOUBLE_EQ(fronthaul_load(w, m, c, 0, rates), 30.0);
  EXPECT_DOUBLE_EQ(fronthaul_load_rmin(w, m, c, 0) / c.rate_target, 2.0);
  // below the activity threshold a link carries no fronthaul load
  w.at(1, 0)(1) = 1e-5;
  EXPECT_DOUBLE_EQ(fronthaul_load(w, m, c, 0, rates), 15.0);
  w.at(1, 0)(1) = std::sqrt(10.0 * c.zero_power_threshold_w);
  EXPECT_DOUBLE_EQ(fronthaul_load_rmin(w, m, c, 0) / c.rate_target, 2.0);
}

TEST(PowerModel, ActiveSets) {
  std::vector<std::vector<int>> serving = {{0, 1}}, csi = {{0, 1}};
  const ClusterMap m(2, serving, csi);
  BeamformerSet w(m, 2, 2);
  ActiveSets a = active_sets(w, m, 1e-8);
  EXPECT_TRUE(a.rrhs.empty());
  EXPECT_TRUE(a.links.empty());
  w.at(0, 1)(2) = 0.1;  // RRH 1's slot
  a = active_sets(w, m, 1e-8);
  EXPECT_EQ(a.rrhs, std::vector<int>{1});
  ASSERT_EQ(a.links.size(), 1u);
  EXPECT_EQ(a.links[0], std::make_pair(1, 0));
}
