#include "crannpc/beams.hpp"

namespace crannpc {

BeamformerSet::BeamformerSet(const ClusterMap& clusters, int num_subchannels, int antennas)
    : num_ue_(clusters.num_ue()), num_sc_(num_subchannels), antennas_(antennas) {
  w_.reserve(static_cast<std::size_t>(num_ue_) * num_sc_);
  for (int k = 0; k < num_ue_; ++k) {
    const auto len = static_cast<Eigen::Index>(clusters.serving(k).size()) * antennas;
    for (int n = 0; n < num_sc_; ++n) w_.push_back(CVector::Zero(len));
  }
}

double BeamformerSet::slot_power(int k, int s) const {
  double p = 0.0;
  for (int n = 0; n < num_sc_; ++n) p += slot_power(k, n, s);
  return p;
}

void BeamformerSet::set_zero() {
  for (auto& v : w_) v.setZero();
}

void BeamformerSet::scale(double factor) {
  for (auto& v : w_) v *= factor;
}

void BeamformerSet::zero_ue(int k) {
  for (int n = 0; n < num_sc_; ++n) at(k, n).setZero();
}

double link_power(const BeamformerSet& w, const ClusterMap& clusters, int i, int k) {
  const int s = clusters.slot(k, i);
  return s < 0 ? 0.0 : w.slot_power(k, s);
}

double rrh_transmit_power(const BeamformerSet& w, const ClusterMap& clusters, int i) {
  double p = 0.0;
  for (int k : clusters.served(i)) p += link_power(w, clusters, i, k);
  return p;
}

namespace {

template <typename RateOf>
double npc_without_sleep(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& c, RateOf rate) {
  const double thr = c.zero_power_threshold_w;
  double total = 0.0;
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    const double p_tr = rrh_transmit_power(w, clusters, i);
    total += c.amplifier_inefficiency * p_tr;
    if (p_tr > thr) total += c.circuit_power_w();
    for (int k : clusters.served(i))
      if (link_power(w, clusters, i, k) > thr) total += c.fronthaul_scale * rate(k);
  }
  return total;
}

}  // namespace

double network_power(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config,
                     const std::vector<double>& rates) {
  return npc_without_sleep(w, clusters, config, [&](int k) { return rates.at(k); }) +
         clusters.num_rrh() * config.sleep_power_w;
}

double network_power_rmin(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config) {
  return npc_without_sleep(w, clusters, config, [&](int) { return config.rate_target; });
}

double fronthaul_load(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config, int i,
                      const std::vector<double>& rates) {
  double load = 0.0;
  for (int k : clusters.served(i))
    if (link_power(w, clusters, i, k) > config.zero_power_threshold_w) load += rates.at(k);
  return load;
}

double fronthaul_load_rmin(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config, int i) {
  return fronthaul_load(w, clusters, config, i, std::vector<double>(clusters.num_ue(), config.rate_target));
}

ActiveSets active_sets(const BeamformerSet& w, const ClusterMap& clusters, double threshold) {
  ActiveSets out;
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    bool any = false;
    for (int k : clusters.served(i)) {
      if (link_power(w, clusters, i, k) > threshold) {
        out.links.emplace_back(i, k);
        any = true;
      }
    }
    if (any) out.rrhs.push_back(i);
  }
  return out;
}

}  // namespace crannpc
