#pragma once

#include <cstdint>

#include "crannpc/beams.hpp"
#include "crannpc/channel.hpp"

namespace crannpc {

// e^x * Ei(-x) for x > 0, computed without forming e^x.
double expint_scaled(double x);

// Full-CSI SINR of UE k on subchannel n.
double sinr(const BeamformerSet& w, const ChannelState& channels, const ClusterMap& clusters, double noise_power,
            int k, int n);

// h̄_kk w̄_k as seen by the BBU.
Complex desired_amplitude(const BeamformerSet& w, const PartialCsiView& view, int k, int n);
// Σ_{l≠k} w̄_lᴴ A_{l,k} w̄_l: expected interference power over unknown entries.
double expected_interference(const BeamformerSet& w, const PartialCsiView& view, int k, int n);

// Jensen lower bound r̃_k^(n) in bit/s/Hz.
double rate_lower_bound(const BeamformerSet& w, const PartialCsiView& view, int k, int n);
double rate_lower_bound_total(const BeamformerSet& w, const PartialCsiView& view, int k);

enum class McEstimator {
  kPlain,           // sample mean of log2(1 + SINR)
  kControlVariate,  // sample mean corrected with the interference power, whose mean is known exactly
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

// Expected rate over redraws of the unknown small-scale entries {h_{i,k}: i ∉ Ĩ_k}.
// Samples are split in fixed shards seeded from (seed, k, n, shard).
McEstimate rate_monte_carlo(const BeamformerSet& w, const PartialCsiView& view, int k, int n, long samples,
                            std::uint64_t seed, McEstimator estimator = McEstimator::kControlVariate);

// Closed-form expected rate for non-overlapping clusters with no CSI of
// interfering links (generalized chi-squared interference). Tied interferer
// variances are split by a relative 1e-7 and reported through log_warning.
double rate_exact_special(const BeamformerSet& w, const PartialCsiView& view, int k, int n);

}  // namespace crannpc
