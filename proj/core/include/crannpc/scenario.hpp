#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crannpc {

struct ScenarioConfig {
  double area_half_width_m = 1000.0;
  int num_rrh = 20;                   // I
  int num_ue = 16;                    // K
  int antennas_per_rrh = 2;           // M
  int num_subchannels = 3;            // N
  int serving_cluster_size = 3;       // X
  int csi_cluster_size = 6;           // Y
  double per_rrh_power_cap_w = 2.0;   // P_max
  double fronthaul_cap_normalized = 3.0;  // C_max / R_min
  double rate_target = 15.0;          // R_min, bit/s/Hz summed over subchannels
  double amplifier_inefficiency = 4.0;    // eta
  double active_power_w = 6.8;
  double sleep_power_w = 4.3;
  double fronthaul_scale = 0.5;       // rho, W per bit/s/Hz
  double noise_psd_dbm_hz = -174.0;
  double bandwidth_hz = 10e6;
  double smoothing_theta = 1e-5;
  double tolerance_delta = 1e-3;
  double zero_power_threshold_w = 1e-8;
  std::uint64_t rng_seed = 1;

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  // Noise power per subchannel in watts: PSD + 10 log10(B / N) dBm.
  double noise_power_w() const;
  // Circuit power saved by sleeping, P_active - P_sleep.
  double circuit_power_w() const { return active_power_w - sleep_power_w; }
  // Absolute fronthaul capacity in bit/s/Hz.
  double fronthaul_cap() const { return fronthaul_cap_normalized * rate_target; }
};

// Scenario defaults used for CI-sized runs.
ScenarioConfig desk_scale(ScenarioConfig base);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct NetworkScenario {
  std::vector<Point> rrh_positions;
  std::vector<Point> ue_positions;
  ScenarioConfig config;

  int num_rrh() const { return static_cast<int>(rrh_positions.size()); }
  int num_ue() const { return static_cast<int>(ue_positions.size()); }
};

class ClusterMap {
 public:
  ClusterMap() = default;
  // serving[k] ordered; csi[k] must contain serving[k]. Throws ConfigError otherwise.
  ClusterMap(int num_rrh, std::vector<std::vector<int>> serving, std::vector<std::vector<int>> csi);

  int num_rrh() const { return num_rrh_; }
  int num_ue() const { return static_cast<int>(serving_.size()); }

  const std::vector<int>& serving(int k) const { return serving_[k]; }
  const std::vector<int>& csi(int k) const { return csi_[k]; }
  const std::vector<int>& served(int i) const { return served_[i]; }
  const std::vector<int>& coordinated(int k) const { return coordinated_[k]; }

  // Position of RRH i inside serving(k), or -1.
  int slot(int k, int i) const { return slot_[static_cast<std::size_t>(k) * num_rrh_ + i]; }
  bool serves(int i, int k) const { return slot(k, i) >= 0; }
  bool csi_known(int i, int k) const { return known_[static_cast<std::size_t>(k) * num_rrh_ + i] != 0; }

 private:
  int num_rrh_ = 0;
  std::vector<std::vector<int>> serving_;
  std::vector<std::vector<int>> csi_;
  std::vector<std::vector<int>> served_;
  std::vector<std::vector<int>> coordinated_;
  std::vector<int> slot_;
  std::vector<char> known_;
};

NetworkScenario generate_scenario(const ScenarioConfig& config);

struct GridScenario {
  NetworkScenario scenario;
  ClusterMap clusters;
  int center_ue = 4;  // zero-based index of the UE in the middle square
};

// Nine D/3 squares, one UE per center, three RRHs per square serving only it.
// Uses config for power and noise parameters; geometry fields are overridden.
GridScenario generate_grid_scenario(double d_km, const ScenarioConfig& config);

ClusterMap build_clusters(const NetworkScenario& scenario);

double distance_m(const Point& a, const Point& b);

// RRH power with the threshold indicator.
double rrh_power(double p_tr, const ScenarioConfig& config);

std::string scenario_to_text(const NetworkScenario& scenario, const ClusterMap& clusters);

}  // namespace crannpc
