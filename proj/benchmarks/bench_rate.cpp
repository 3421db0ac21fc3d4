#include <benchmark/benchmark.h>

#include "crannpc/harness.hpp"
#include "crannpc/rate.hpp"
#include "crannpc/scenario.hpp"

using namespace crannpc;

namespace {

struct Net {
  ScenarioConfig config;
  NetworkScenario scenario;
  ClusterMap clusters;
  ChannelState channels;
  BeamformerSet w;
  Net() {
    scenario = generate_scenario(config);
    clusters = build_clusters(scenario);
    channels = draw_channels(scenario, 1);
    w = BeamformerSet(clusters, config.num_subchannels, config.antennas_per_rrh);
    for (int k = 0; k < config.num_ue; ++k)
      for (int n = 0; n < config.num_subchannels; ++n) w.at(k, n).setConstant(Complex(0.1, 0.05));
  }
};

}  // namespace

static void BM_LowerBoundAllUes(benchmark::State& state) {
  const Net net;
  const PartialCsiView v(net.channels, net.clusters, net.config.noise_power_w());
  for (auto _ : state)
    for (int k = 0; k < net.config.num_ue; ++k) benchmark::DoNotOptimize(rate_lower_bound_total(net.w, v, k));
}
BENCHMARK(BM_LowerBoundAllUes);

static void BM_MonteCarloRate(benchmark::State& state) {
  const Net net;
  const PartialCsiView v(net.channels, net.clusters, net.config.noise_power_w());
  for (auto _ : state) benchmark::DoNotOptimize(rate_monte_carlo(net.w, v, 0, 0, state.range(0), 3).mean);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MonteCarloRate)->Arg(1000)->Arg(10000);

static void BM_ExpIntScaled(benchmark::State& state) {
  double x = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(expint_scaled(x));
    x = x < 1e3 ? x * 1.01 : 1e-3;
  }
}
BENCHMARK(BM_ExpIntScaled);

static void BM_TightnessPoint(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(tightness_point(3.0, 20.0, 10000, 5).exact);
}
BENCHMARK(BM_TightnessPoint)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
