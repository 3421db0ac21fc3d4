#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "crannpc/orchestrator.hpp"
#include "crannpc/rate.hpp"
#include "helpers.hpp"

using namespace crannpc;
using namespace crannpc::testing;

namespace {

// One RRH, one UE, one subchannel, one antenna, h = gain.
struct SingleLink {
  ScenarioConfig config;
  ClusterMap clusters{1, {{0}}, {{0}}};
  ChannelState channels{1, 1, 1, 1, 3};
  explicit SingleLink(double gain, double rate) {
    config.num_rrh = 1;
    config.num_ue = 1;
    config.num_subchannels = 1;
    config.antennas_per_rrh = 1;
    config.serving_cluster_size = 1;
    config.csi_cluster_size = 1;
    config.rate_target = rate;
    channels.h(0, 0, 0)(0) = gain;
    channels.set_alpha(0, 0, gain);
  }
  PartialCsiView view() const { return PartialCsiView(channels, clusters, config.noise_power_w()); }
};

Drop small_drop(std::uint64_t seed) {
  ScenarioConfig c = desk_scale(ScenarioConfig{});
  c.num_ue = 5;
  c.num_rrh = 8;
  return make_drop(c, seed);
}

}  // namespace

TEST(Feasibility, CheckFlagsEachConstraint) {
  const SingleLink s(1e-6, 2.0);
  const PartialCsiView v = s.view();
  BeamformerSet w(s.clusters, 1, 1);
  w.at(0, 0)(0) = 1.0;
  EXPECT_TRUE(check_feasibility(w, v, s.config, {0}).ok);
  w.at(0, 0)(0) = 2.0;  // 4 W > P_max
  EXPECT_FALSE(check_feasibility(w, v, s.config, {0}).ok);
  w.at(0, 0)(0) = 1e-5;
  const FeasibilityCheck low = check_feasibility(w, v, s.config, {0});
  EXPECT_FALSE(low.ok);
  EXPECT_LT(low.min_rate_ratio, 1.0);
  // beams on a UE outside the admitted set
  w.at(0, 0)(0) = 1.0;
  EXPECT_FALSE(check_feasibility(w, v, s.config, {}).ok);
}

TEST(Feasibility, ClipAndBackOff) {
  const Drop d = small_drop(2);
  const PartialCsiView v = view_of(d);
  Rng rng(1);
  BeamformerSet w = random_beams(d.clusters, d.config.num_subchannels, d.config.antennas_per_rrh, rng, 2.0);
  clip_power(w, d.clusters, d.config.per_rrh_power_cap_w);
  for (int i = 0; i < d.config.num_rrh; ++i)
    EXPECT_LE(rrh_transmit_power(w, d.clusters, i), d.config.per_rrh_power_cap_w * (1.0 + 1e-12));

  const SelectionResult sel = select_users_bues(v, d.config, BeamMode::kJoint);
  if (sel.admitted.empty()) GTEST_SKIP() << "nothing admitted on this drop";
  const BeamformerSet b = back_off(sel.w, sel.admitted, v, d.config);
  EXPECT_TRUE(check_feasibility(b, v, d.config, sel.admitted).ok);
  for (int i = 0; i < d.config.num_rrh; ++i)
    EXPECT_LE(rrh_transmit_power(b, d.clusters, i), rrh_transmit_power(sel.w, d.clusters, i) * (1.0 + 1e-12));
}

TEST(Npc, SingleLinkReachesTheClosedFormPower) {
  for (double rate : {1.0, 2.0, 4.0}) {
    const SingleLink s(1e-6, rate);
    const PartialCsiView v = s.view();
    BeamformerSet w0(s.clusters, 1, 1);
    w0.at(0, 0)(0) = std::sqrt(s.config.per_rrh_power_cap_w);
    ASSERT_TRUE(check_feasibility(w0, v, s.config, {0}).ok);
    const SolveReport r = minimize_npc(w0, {0}, v, s.config, BeamMode::kJoint, PowerObjective::kNetworkPower);
    const double p_star = (std::exp2(rate) - 1.0) * s.config.noise_power_w() / 1e-12;
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.feasibility.ok) << r.feasibility.reason;
    EXPECT_NEAR(link_power(r.w, s.clusters, 0, 0), p_star, 2e-3 * p_star) << "R = " << rate;
  }
}

TEST(Npc, InfeasibleStartIsRejected) {
  const SingleLink s(1e-6, 2.0);
  const PartialCsiView v = s.view();
  BeamformerSet w0(s.clusters, 1, 1);
  w0.at(0, 0)(0) = 1e-6;
  EXPECT_THROW(minimize_npc(w0, {0}, v, s.config, BeamMode::kJoint, PowerObjective::kNetworkPower), PreconditionError);
}

TEST(Npc, TraceIsNonincreasingAndOutputFeasible) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Drop d = small_drop(seed);
    const PartialCsiView v = view_of(d);
    const SelectionResult sel = select_users_bues(v, d.config, BeamMode::kJoint);
    if (sel.admitted.empty()) continue;
    const SolveReport r = minimize_npc(sel.w, sel.admitted, v, d.config, BeamMode::kJoint, PowerObjective::kNetworkPower);
    for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
      EXPECT_LE(r.objective_trace[t], r.objective_trace[t - 1] * (1.0 + 1e-9));
    EXPECT_TRUE(r.feasibility.ok) << r.feasibility.reason;
    EXPECT_LE(r.network_power,
              conventional_network_power(r.w, d.clusters, d.config, r.admitted, r.rates) * (1.0 + 1e-12));
  }
}

TEST(Selection, P9FractionsInUnitInterval) {
  const Drop d = small_drop(4);
  const PartialCsiView v = view_of(d);
  const P9Result p9 = solve_feasibility_p9(v, d.config, BeamMode::kJoint);
  ASSERT_EQ(static_cast<int>(p9.phi.size()), d.config.num_ue);
  for (double phi : p9.phi) {
    EXPECT_GE(phi, 0.0);
    EXPECT_LE(phi, 1.0 + 1e-12);
  }
}

TEST(Selection, LooseSingleLinkIsSupportable) {
  const SingleLink s(1e-6, 2.0);
  const PartialCsiView v = s.view();
  const P9Result p9 = solve_feasibility_p9(v, s.config, BeamMode::kJoint);
  EXPECT_GE(p9.phi[0], 1.0 - 1e-6);
  const P10Result p10 = solve_feasibility_p10({0}, v, s.config, BeamMode::kJoint);
  EXPECT_TRUE(p10.supportable);
  EXPECT_TRUE(check_feasibility(p10.w, v, s.config, {0}).ok);
  const SelectionResult sel = select_users_bues(v, s.config, BeamMode::kJoint);
  EXPECT_EQ(sel.admitted, std::vector<int>{0});
}

TEST(Selection, UnreachableRateIsNotSupportable) {
  // P_max |h|² / σ² is about 50 dB, so 40 bit/s/Hz on one subchannel is out of reach
  const SingleLink s(1e-6, 40.0);
  const PartialCsiView v = s.view();
  const P10Result p10 = solve_feasibility_p10({0}, v, s.config, BeamMode::kJoint);
  EXPECT_FALSE(p10.supportable);
  EXPECT_LT(p10.phi, 1.0);
  EXPECT_TRUE(select_users_bues(v, s.config, BeamMode::kJoint).admitted.empty());
  EXPECT_TRUE(select_users_exhaustive(v, s.config, BeamMode::kJoint).admitted.empty());
}

TEST(Selection, BuesAgainstExhaustive) {
  for (std::uint64_t seed = 5; seed <= 7; ++seed) {
    const Drop d = small_drop(seed);
    const PartialCsiView v = view_of(d);
    const SelectionResult b = select_users_bues(v, d.config, BeamMode::kJoint);
    const SelectionResult e = select_users_exhaustive(v, d.config, BeamMode::kJoint);
    EXPECT_LE(b.admitted.size(), e.admitted.size());
    EXPECT_LE(b.p10_calls, static_cast<int>(std::ceil(std::log2(1.0 + d.config.num_ue))) + 1);
    EXPECT_TRUE(std::is_sorted(b.admitted.begin(), b.admitted.end()));
    EXPECT_TRUE(check_feasibility(b.w, v, d.config, b.admitted).ok);
    EXPECT_TRUE(check_feasibility(e.w, v, d.config, e.admitted).ok);
  }
}

TEST(Selection, ExhaustiveRefusesLargeNetworks) {
  ScenarioConfig c = desk_scale(ScenarioConfig{});
  c.num_ue = kExhaustiveMaxUe + 1;
  const Drop d = make_drop(c, 1);
  EXPECT_THROW(select_users_exhaustive(view_of(d), d.config, BeamMode::kJoint), ConfigError);
}

TEST(Selection, Deterministic) {
  const Drop d = small_drop(9);
  const PartialCsiView v = view_of(d);
  const SelectionResult a = select_users_bues(v, d.config, BeamMode::kMatchedFilter);
  const SelectionResult b = select_users_bues(v, d.config, BeamMode::kMatchedFilter);
  EXPECT_EQ(a.admitted, b.admitted);
  EXPECT_EQ(a.p10_calls, b.p10_calls);
  for (int k = 0; k < d.config.num_ue; ++k)
    for (int n = 0; n < d.config.num_subchannels; ++n) EXPECT_EQ(a.w.at(k, n), b.w.at(k, n));
}

TEST(Baselines, MatchedFilterPipelinesAreFeasible) {
  const Drop d = small_drop(11);
  const PartialCsiView v = view_of(d);
  const SolveReport bues = baseline_mf(v, d.config, BaselineKind::kBues);
  const SolveReport npc = baseline_mf(v, d.config, BaselineKind::kNpc);
  const SolveReport conv = baseline_mf(v, d.config, BaselineKind::kConventional);
  for (const SolveReport* r : {&bues, &npc, &conv}) EXPECT_TRUE(r->feasibility.ok) << r->feasibility.reason;
  EXPECT_EQ(npc.admitted, bues.admitted);
  if (!npc.admitted.empty()) EXPECT_LE(npc.network_power, conv.network_power * (1.0 + 1e-9));
}
