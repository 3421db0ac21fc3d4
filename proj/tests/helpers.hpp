#pragma once

#include <vector>

#include "crannpc/beams.hpp"
#include "crannpc/channel.hpp"
#include "crannpc/rng.hpp"
#include "crannpc/scenario.hpp"

namespace crannpc::testing {

// A drawn network with its view; the view keeps its own copy of the clusters.
struct Drop {
  ScenarioConfig config;
  NetworkScenario scenario;
  ClusterMap clusters;
  ChannelState channels;
};

inline Drop make_drop(ScenarioConfig c, std::uint64_t seed) {
  Drop d;
  c.rng_seed = seed;
  d.config = c;
  d.scenario = generate_scenario(c);
  d.clusters = build_clusters(d.scenario);
  d.channels = draw_channels(d.scenario, seed);
  return d;
}

inline PartialCsiView view_of(const Drop& d) { return PartialCsiView(d.channels, d.clusters, d.config.noise_power_w()); }

// One RRH, one single-antenna UE, one subchannel, h = gain.
struct ScalarLink {
  ClusterMap clusters{1, {{0}}, {{0}}};
  ChannelState channels{1, 1, 1, 1, 7};
  explicit ScalarLink(Complex gain = 1.0) {
    channels.h(0, 0, 0)(0) = gain;
    channels.set_alpha(0, 0, std::abs(gain));
  }
  PartialCsiView view(double noise = 1.0) const { return PartialCsiView(channels, clusters, noise); }
  BeamformerSet beams(Complex w = 1.0) const {
    BeamformerSet b(clusters, 1, 1);
    b.at(0, 0)(0) = w;
    return b;
  }
};

inline CVector random_cvector(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

inline BeamformerSet random_beams(const ClusterMap& clusters, int N, int M, Rng& rng, double scale = 0.3) {
  BeamformerSet w(clusters, N, M);
  for (int k = 0; k < clusters.num_ue(); ++k)
    for (int n = 0; n < N; ++n) w.at(k, n) = random_cvector(static_cast<int>(w.at(k, n).size()), rng, scale);
  return w;
}

}  // namespace crannpc::testing
