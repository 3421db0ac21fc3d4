#pragma once

#include <vector>

#include "crannpc/scenario.hpp"
#include "crannpc/types.hpp"

namespace crannpc {

// Stacked beams w̄_k^(n), one vector of length |I_k|*M per (UE, subchannel).
// Slot s of w̄_k holds the M entries for RRH clusters.serving(k)[s].
class BeamformerSet {
 public:
  BeamformerSet() = default;
  BeamformerSet(const ClusterMap& clusters, int num_subchannels, int antennas);

  int num_ue() const { return num_ue_; }
  int num_subchannels() const { return num_sc_; }
  int antennas() const { return antennas_; }

  CVector& at(int k, int n) { return w_[static_cast<std::size_t>(k) * num_sc_ + n]; }
  const CVector& at(int k, int n) const { return w_[static_cast<std::size_t>(k) * num_sc_ + n]; }

  // Power of slot s (an RRH) towards UE k on subchannel n.
  double slot_power(int k, int n, int s) const { return at(k, n).segment(s * antennas_, antennas_).squaredNorm(); }
  // P_{i,k}^tr summed over subchannels, by slot.
  double slot_power(int k, int s) const;

  void set_zero();
  void scale(double factor);
  void zero_ue(int k);

 private:
  int num_ue_ = 0;
  int num_sc_ = 0;
  int antennas_ = 0;
  std::vector<CVector> w_;
};

// Per-link transmit power P_{i,k}^tr; zero when i does not serve k.
double link_power(const BeamformerSet& w, const ClusterMap& clusters, int i, int k);
// P_i^tr.
double rrh_transmit_power(const BeamformerSet& w, const ClusterMap& clusters, int i);

// Total network power including the sleep constant. rates has one
// entry per UE (total over subchannels).
double network_power(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config,
                     const std::vector<double>& rates);
// Objective with R_min in place of the achieved rate and no sleep constant.
double network_power_rmin(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config);

double fronthaul_load(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config, int i,
                      const std::vector<double>& rates);
double fronthaul_load_rmin(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config, int i);

struct ActiveSets {
  std::vector<int> rrhs;
  std::vector<std::pair<int, int>> links;  // (rrh, ue)
};

ActiveSets active_sets(const BeamformerSet& w, const ClusterMap& clusters, double threshold);

}  // namespace crannpc
