#pragma once

#include <cstdint>
#include <vector>

#include "crannpc/scenario.hpp"
#include "crannpc/types.hpp"

namespace crannpc {

// Pathloss in dB for a distance in km; distances below 1 m are floored.
double pathloss_db(double d_km);

inline constexpr double kShadowingStdDb = 8.0;

class ChannelState {
 public:
  ChannelState() = default;
  ChannelState(int num_rrh, int num_ue, int num_subchannels, int antennas, std::uint64_t seed);

  int num_rrh() const { return I_; }
  int num_ue() const { return K_; }
  int num_subchannels() const { return N_; }
  int antennas() const { return M_; }
  std::uint64_t seed() const { return seed_; }

  // h_{i,k}^(n) as an M-vector (row orientation is applied by callers).
  Eigen::Map<const CVector> h(int i, int k, int n) const { return Eigen::Map<const CVector>(&h_[index(i, k, n)], M_); }
  Eigen::Map<CVector> h(int i, int k, int n) { return Eigen::Map<CVector>(&h_[index(i, k, n)], M_); }

  // Large-scale amplitude gain. Shared across subchannels.
  double alpha(int i, int k, int /*n*/ = 0) const { return alpha_[static_cast<std::size_t>(i) * K_ + k]; }
  void set_alpha(int i, int k, double a) { alpha_[static_cast<std::size_t>(i) * K_ + k] = a; }

 private:
  std::size_t index(int i, int k, int n) const {
    return ((static_cast<std::size_t>(i) * K_ + k) * N_ + n) * M_;
  }
  int I_ = 0, K_ = 0, N_ = 0, M_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Complex> h_;
  std::vector<double> alpha_;
};

// Pathloss with 8 dB log-normal shadowing per (i,k) and Rayleigh fading per (i,k,n).
ChannelState draw_channels(const NetworkScenario& scenario, std::uint64_t seed);

struct InterferenceCovariance {
  CMatrix A;
  CMatrix V;
  int rank = 0;
};

// What the BBU knows: instantaneous h_{i,k} for i in the CSI set of k, large
// scale gains everywhere. Unknown instantaneous entries are never copied in.
// Also caches the covariance matrices A_{l,k}^(n) for every ordered pair l != k.
class PartialCsiView {
 public:
  PartialCsiView(const ChannelState& channels, const ClusterMap& clusters, double noise_power);

  const ClusterMap& clusters() const { return clusters_; }
  int num_ue() const { return clusters_.num_ue(); }
  int num_rrh() const { return clusters_.num_rrh(); }
  int num_subchannels() const { return N_; }
  int antennas() const { return M_; }
  double noise_power() const { return noise_; }

  bool known(int i, int k) const { return clusters_.csi_known(i, k); }
  double alpha(int i, int k) const { return alpha_[static_cast<std::size_t>(i) * num_ue() + k]; }
  // Throws DomainError when (i,k) lies outside the CSI set of k.
  CVector known_h(int i, int k, int n) const;

  // h̄_{l,k}^(n): channel from the serving RRHs of l to UE k. All of I_l must
  // be known to k.
  CRowVector aggregated(int l, int k, int n) const;
  const CRowVector& own_channel(int k, int n) const { return own_[static_cast<std::size_t>(k) * N_ + n]; }

  const CMatrix& covariance(int l, int k, int n) const;

 private:
  ClusterMap clusters_;
  int N_ = 0, M_ = 0;
  double noise_ = 0.0;
  std::vector<double> alpha_;
  std::vector<std::vector<CVector>> known_;  // [k*I + i] -> per-subchannel vectors, empty if unknown
  std::vector<CRowVector> own_;
  std::vector<CMatrix> cov_;
};

// E[h̄ᴴh̄] for UE k's channel from UE l's serving RRHs: the covariance UE l's beam
// interferes through. Unknown links contribute α² I. l == k is a domain error.
InterferenceCovariance build_A(const PartialCsiView& view, int l, int k, int n);
CMatrix build_A_matrix(const PartialCsiView& view, int l, int k, int n);

// Eigendecomposition A = V V^H keeping eigenvalues above 1e-12 * lambda_max.
InterferenceCovariance decompose_A(const CMatrix& A);

std::string channels_to_text(const ChannelState& channels);

}  // namespace crannpc
