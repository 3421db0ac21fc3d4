#include "crannpc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "crannpc/rng.hpp"
#include "crannpc/types.hpp"

namespace crannpc {
namespace {

void require(bool ok, const char* invariant) {
  if (!ok) throw ConfigError(std::string("configuration violates invariant: ") + invariant);
}

}  // namespace

void ScenarioConfig::validate() const {
  require(num_rrh >= 1, "I >= 1");
  require(num_ue >= 1, "K >= 1");
  require(antennas_per_rrh >= 1, "M >= 1");
  require(num_subchannels >= 1, "N >= 1");
  require(serving_cluster_size >= 1, "X >= 1");
  require(serving_cluster_size <= csi_cluster_size, "X <= Y");
  require(csi_cluster_size <= num_rrh, "Y <= I");
  require(amplifier_inefficiency > 1.0, "eta > 1");
  require(active_power_w > sleep_power_w, "P_active > P_sleep");
  require(sleep_power_w >= 0.0, "P_sleep >= 0");
  require(smoothing_theta > 0.0, "theta > 0");
  require(per_rrh_power_cap_w > 0.0, "P_max > 0");
  require(fronthaul_cap_normalized > 0.0, "C_max > 0");
  require(rate_target > 0.0, "R_min > 0");
  require(fronthaul_scale >= 0.0, "rho >= 0");
  require(bandwidth_hz > 0.0, "bandwidth > 0");
  require(area_half_width_m > 0.0, "area half width > 0");
  require(tolerance_delta > 0.0, "delta > 0");
  require(zero_power_threshold_w >= 0.0, "zero_power_threshold >= 0");
  require(std::isfinite(noise_psd_dbm_hz), "noise_psd finite");
}

double ScenarioConfig::noise_power_w() const {
  const double dbm = noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz / num_subchannels);
  return std::pow(10.0, (dbm - 30.0) / 10.0);
}

ScenarioConfig desk_scale(ScenarioConfig base) {
  base.num_rrh = 12;
  base.num_ue = 8;
  base.num_subchannels = 2;
  base.antennas_per_rrh = 2;
  return base;
}

double distance_m(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

NetworkScenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.rng_seed, {stream::kPositions}));
  const double h = config.area_half_width_m;
  std::uniform_real_distribution<double> coord(-h, h);
  NetworkScenario s;
  s.config = config;
  s.rrh_positions.resize(config.num_rrh);
  s.ue_positions.resize(config.num_ue);
  for (auto& p : s.rrh_positions) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  for (auto& p : s.ue_positions) {
    p.x = coord(rng);
    p.y = coord(rng);
  }
  return s;
}

GridScenario generate_grid_scenario(double d_km, const ScenarioConfig& config) {
  if (!(d_km > 0.0)) throw DomainError("grid scenario needs d_km > 0");
  ScenarioConfig c = config;
  c.num_rrh = 27;
  c.num_ue = 9;
  c.serving_cluster_size = 3;
  c.csi_cluster_size = 3;
  c.area_half_width_m = 1500.0 * d_km;
  c.validate();

  const double side = 1000.0 * d_km / 3.0;
  Rng rng(derive_seed(c.rng_seed, {stream::kGrid}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GridScenario g;
  g.scenario.config = c;
  std::vector<std::vector<int>> serving(9);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      const int k = row * 3 + col;
      const double x0 = -1.5 * side + col * side;
      const double y0 = 1.5 * side - (row + 1) * side;
      g.scenario.ue_positions.push_back({x0 + 0.5 * side, y0 + 0.5 * side});
      for (int r = 0; r < 3; ++r) {
        serving[k].push_back(static_cast<int>(g.scenario.rrh_positions.size()));
        g.scenario.rrh_positions.push_back({x0 + side * unit(rng), y0 + side * unit(rng)});
      }
    }
  }
  g.clusters = ClusterMap(27, serving, serving);
  g.center_ue = 4;
  return g;
}

ClusterMap::ClusterMap(int num_rrh, std::vector<std::vector<int>> serving, std::vector<std::vector<int>> csi)
    : num_rrh_(num_rrh), serving_(std::move(serving)), csi_(std::move(csi)) {
  const int K = static_cast<int>(serving_.size());
  if (static_cast<int>(csi_.size()) != K) throw ConfigError("cluster map: csi and serving lists differ in length");
  served_.assign(num_rrh_, {});
  coordinated_.assign(K, {});
  slot_.assign(static_cast<std::size_t>(K) * num_rrh_, -1);
  known_.assign(static_cast<std::size_t>(K) * num_rrh_, 0);
  for (int k = 0; k < K; ++k) {
    for (int i : csi_[k]) {
      if (i < 0 || i >= num_rrh_) throw ConfigError("cluster map: RRH index out of range");
      known_[static_cast<std::size_t>(k) * num_rrh_ + i] = 1;
    }
    for (std::size_t s = 0; s < serving_[k].size(); ++s) {
      const int i = serving_[k][s];
      if (i < 0 || i >= num_rrh_) throw ConfigError("cluster map: RRH index out of range");
      if (!csi_known(i, k)) throw ConfigError("cluster map: serving set must be inside CSI set");
      if (slot(k, i) >= 0) throw ConfigError("cluster map: duplicate RRH in serving set");
      slot_[static_cast<std::size_t>(k) * num_rrh_ + i] = static_cast<int>(s);
      served_[i].push_back(k);
    }
    for (int i : csi_[k])
      if (slot(k, i) < 0) coordinated_[k].push_back(i);
  }
}

ClusterMap build_clusters(const NetworkScenario& scenario) {
  const auto& c = scenario.config;
  if (c.serving_cluster_size > c.csi_cluster_size || c.csi_cluster_size > scenario.num_rrh())
    throw ConfigError("configuration violates invariant: X <= Y <= I");
  const int I = scenario.num_rrh();
  std::vector<std::vector<int>> serving(scenario.num_ue()), csi(scenario.num_ue());
  std::vector<int> order(I);
  for (int k = 0; k < scenario.num_ue(); ++k) {
    std::iota(order.begin(), order.end(), 0);
    const Point& ue = scenario.ue_positions[k];
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return distance_m(scenario.rrh_positions[a], ue) < distance_m(scenario.rrh_positions[b], ue);
    });
    serving[k].assign(order.begin(), order.begin() + c.serving_cluster_size);
    csi[k].assign(order.begin(), order.begin() + c.csi_cluster_size);
  }
  return ClusterMap(I, std::move(serving), std::move(csi));
}

double rrh_power(double p_tr, const ScenarioConfig& config) {
  if (p_tr < 0.0) throw DomainError("rrh_power: negative transmit power");
  if (p_tr > config.zero_power_threshold_w) return config.amplifier_inefficiency * p_tr + config.active_power_w;
  return config.sleep_power_w;
}

std::string scenario_to_text(const NetworkScenario& scenario, const ClusterMap& clusters) {
  const auto& c = scenario.config;
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# cran-npc scenario\n";
  os << "area_half_width_m " << c.area_half_width_m << "\n";
  os << "num_rrh " << c.num_rrh << "\nnum_ue " << c.num_ue << "\n";
  os << "antennas_per_rrh " << c.antennas_per_rrh << "\nnum_subchannels " << c.num_subchannels << "\n";
  os << "serving_cluster_size " << c.serving_cluster_size << "\ncsi_cluster_size " << c.csi_cluster_size << "\n";
  os << "per_rrh_power_cap_w " << c.per_rrh_power_cap_w << "\n";
  os << "fronthaul_cap_normalized " << c.fronthaul_cap_normalized << "\n";
  os << "rate_target " << c.rate_target << "\n";
  os << "rng_seed " << c.rng_seed << "\n";
  for (int i = 0; i < scenario.num_rrh(); ++i)
    os << "rrh " << i << ' ' << scenario.rrh_positions[i].x << ' ' << scenario.rrh_positions[i].y << "\n";
  for (int k = 0; k < scenario.num_ue(); ++k) {
    os << "ue " << k << ' ' << scenario.ue_positions[k].x << ' ' << scenario.ue_positions[k].y << " serving";
    for (int i : clusters.serving(k)) os << ' ' << i;
    os << " csi";
    for (int i : clusters.csi(k)) os << ' ' << i;
    os << "\n";
  }
  return os.str();
}

}  // namespace crannpc
