#include <algorithm>

#include "crannpc/subsolver.hpp"

namespace crannpc {

double smooth_indicator(double x, double theta) { return x / (x + theta); }

double smooth_indicator_derivative(double x, double theta) {
  const double d = x + theta;
  return theta / (d * d);
}

namespace {

std::vector<char> admitted_mask(int K, const std::vector<int>& admitted) {
  std::vector<char> m(K, 0);
  for (int k : admitted) m.at(k) = 1;
  return m;
}

}  // namespace

SCACoefficients linearize(const BeamformerSet& w_t, const PartialCsiView& view, const ScenarioConfig& config,
                          const std::vector<int>& admitted, PowerObjective objective) {
  const auto& clusters = view.clusters();
  const int I = view.num_rrh(), K = view.num_ue();
  const double theta = config.smoothing_theta;
  const double R = config.rate_target;
  const double Pc = config.circuit_power_w();
  const auto in = admitted_mask(K, admitted);

  SCACoefficients c;
  c.num_rrh = I;
  c.num_ue = K;
  c.beta.assign(I, 0.0);
  c.chi.assign(static_cast<std::size_t>(I) * K, 0.0);
  c.kappa = c.chi;
  c.tau = c.chi;
  c.fronthaul_budget.assign(I, config.fronthaul_cap());
  c.fronthaul_imposed.assign(I, 0);

  for (int i = 0; i < I; ++i) {
    const double p_i = rrh_transmit_power(w_t, clusters, i);
    c.beta[i] = smooth_indicator_derivative(p_i, theta);
    double demand = 0.0;
    for (int k : clusters.served(i)) {
      if (!in[k]) continue;
      const std::size_t ik = static_cast<std::size_t>(i) * K + k;
      const double p_ik = link_power(w_t, clusters, i, k);
      const double f = smooth_indicator(p_ik, theta);
      c.chi[ik] = smooth_indicator_derivative(p_ik, theta);
      c.tau[ik] = c.chi[ik] * R;
      c.kappa[ik] = objective == PowerObjective::kNetworkPower
                        ? config.amplifier_inefficiency + c.beta[i] * Pc + config.fronthaul_scale * c.tau[ik]
                        : config.amplifier_inefficiency;
      c.fronthaul_budget[i] -= f * f * R;
      demand += R;
    }
    c.fronthaul_imposed[i] = demand > config.fronthaul_cap() ? 1 : 0;
  }
  return c;
}

double smoothed_network_power(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config,
                              const std::vector<int>& admitted, PowerObjective objective) {
  const auto in = admitted_mask(clusters.num_ue(), admitted);
  const double theta = config.smoothing_theta;
  double total = 0.0;
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    const double p_i = rrh_transmit_power(w, clusters, i);
    total += config.amplifier_inefficiency * p_i;
    if (objective == PowerObjective::kTransmitOnly) continue;
    total += smooth_indicator(p_i, theta) * config.circuit_power_w();
    for (int k : clusters.served(i))
      if (in[k])
        total += config.fronthaul_scale * smooth_indicator(link_power(w, clusters, i, k), theta) * config.rate_target;
  }
  return total;
}

}  // namespace crannpc
