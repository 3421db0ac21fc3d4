#pragma once

#include <vector>

#include "crannpc/beams.hpp"
#include "crannpc/channel.hpp"

namespace crannpc {

inline constexpr double kWeightCap = 1e12;

struct AuxiliaryState {
  int num_ue = 0;
  int num_subchannels = 0;
  std::vector<Complex> u;  // receive coefficient per (k, n)
  std::vector<double> q;   // MSE weight per (k, n)

  AuxiliaryState() = default;
  AuxiliaryState(int K, int N) : num_ue(K), num_subchannels(N), u(static_cast<std::size_t>(K) * N), q(u.size(), 1.0) {}

  Complex& u_at(int k, int n) { return u[static_cast<std::size_t>(k) * num_subchannels + n]; }
  Complex u_at(int k, int n) const { return u[static_cast<std::size_t>(k) * num_subchannels + n]; }
  double& q_at(int k, int n) { return q[static_cast<std::size_t>(k) * num_subchannels + n]; }
  double q_at(int k, int n) const { return q[static_cast<std::size_t>(k) * num_subchannels + n]; }
};

// |u* h̄w̄ - 1|² + |u|² Σ w̄ᴴAw̄ + σ²|u|²
double mse(const BeamformerSet& w, const PartialCsiView& view, Complex u, int k, int n);

// MMSE receiver (|h̄w̄|² + Σ w̄ᴴAw̄ + σ²)^{-1} h̄w̄.
Complex update_u(const BeamformerSet& w, const PartialCsiView& view, int k, int n);

// 1 / eps, capped at kWeightCap.
double update_q(double eps);

// log2(e) (ln q - q mse + 1), in bit/s/Hz.
double psi(const BeamformerSet& w, const PartialCsiView& view, Complex u, double q, int k, int n);

// Optimal (u, q) for every UE and subchannel at beams w.
AuxiliaryState optimal_auxiliary(const BeamformerSet& w, const PartialCsiView& view);

}  // namespace crannpc
