#include <benchmark/benchmark.h>

#include "crannpc/orchestrator.hpp"
#include "crannpc/rate.hpp"
#include "crannpc/wmmse.hpp"

using namespace crannpc;

namespace {

struct Drop {
  ScenarioConfig config = desk_scale(ScenarioConfig{});
  NetworkScenario scenario;
  ClusterMap clusters;
  ChannelState channels;
  Drop() {
    scenario = generate_scenario(config);
    clusters = build_clusters(scenario);
    channels = draw_channels(scenario, 2);
  }
  PartialCsiView view() const { return PartialCsiView(channels, clusters, config.noise_power_w()); }
};

}  // namespace

static void BM_SolveP8(benchmark::State& state) {
  const Drop d;
  const PartialCsiView v = d.view();
  std::vector<int> admitted;
  for (int k = 0; k < d.config.num_ue; k += 2) admitted.push_back(k);
  const BeamformerSet w = canonical_init(v, d.config, admitted);
  const AuxiliaryState aux = optimal_auxiliary(w, v);
  const SCACoefficients co = linearize(w, v, d.config, admitted);
  SubproblemSpec spec;
  spec.view = &v;
  spec.config = &d.config;
  spec.admitted = admitted;
  spec.mode = state.range(0) ? BeamMode::kJoint : BeamMode::kMatchedFilter;
  spec.aux = &aux;
  spec.coeffs = &co;
  spec.rate_targets.assign(d.config.num_ue, 0.0);
  for (int k : admitted) spec.rate_targets[k] = 0.5 * rate_lower_bound_total(w, v, k);
  for (auto _ : state) benchmark::DoNotOptimize(solve_p8(spec, DualState{}).kkt.dual_value);
}
BENCHMARK(BM_SolveP8)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

static void BM_Bues(benchmark::State& state) {
  const Drop d;
  const PartialCsiView v = d.view();
  for (auto _ : state) benchmark::DoNotOptimize(select_users_bues(v, d.config, BeamMode::kJoint).admitted.size());
}
BENCHMARK(BM_Bues)->Unit(benchmark::kMillisecond);

static void BM_MinimizeNpc(benchmark::State& state) {
  const Drop d;
  const PartialCsiView v = d.view();
  const SelectionResult sel = select_users_bues(v, d.config, BeamMode::kJoint);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        minimize_npc(sel.w, sel.admitted, v, d.config, BeamMode::kJoint, PowerObjective::kNetworkPower).network_power);
}
BENCHMARK(BM_MinimizeNpc)->Unit(benchmark::kMillisecond);
