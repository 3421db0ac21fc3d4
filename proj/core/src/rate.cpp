#include "crannpc/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "crannpc/log.hpp"
#include "crannpc/rng.hpp"

namespace crannpc {

double sinr(const BeamformerSet& w, const ChannelState& channels, const ClusterMap& clusters, double noise_power,
            int k, int n) {
  const int M = channels.antennas();
  auto amplitude = [&](int l) {
    Complex a{0.0, 0.0};
    const auto& rrhs = clusters.serving(l);
    for (std::size_t s = 0; s < rrhs.size(); ++s)
      a += (channels.h(rrhs[s], k, n).transpose() * w.at(l, n).segment(static_cast<Eigen::Index>(s) * M, M)).value();
    return a;
  };
  double interference = 0.0;
  for (int l = 0; l < clusters.num_ue(); ++l)
    if (l != k) interference += std::norm(amplitude(l));
  return std::norm(amplitude(k)) / (interference + noise_power);
}

Complex desired_amplitude(const BeamformerSet& w, const PartialCsiView& view, int k, int n) {
  return (view.own_channel(k, n) * w.at(k, n))(0);
}

double expected_interference(const BeamformerSet& w, const PartialCsiView& view, int k, int n) {
  double total = 0.0;
  for (int l = 0; l < view.num_ue(); ++l) {
    if (l == k) continue;
    const CVector& wl = w.at(l, n);
    if (wl.squaredNorm() == 0.0) continue;
    total += std::real(wl.dot(view.covariance(l, k, n) * wl));
  }
  return total;
}

double rate_lower_bound(const BeamformerSet& w, const PartialCsiView& view, int k, int n) {
  const double signal = std::norm(desired_amplitude(w, view, k, n));
  return std::log2(1.0 + signal / (expected_interference(w, view, k, n) + view.noise_power()));
}

double rate_lower_bound_total(const BeamformerSet& w, const PartialCsiView& view, int k) {
  double r = 0.0;
  for (int n = 0; n < view.num_subchannels(); ++n) r += rate_lower_bound(w, view, k, n);
  return r;
}

namespace {

constexpr long kShardSize = 4096;

struct UnknownTap {
  int interferer;   // index into the interferer list
  int rrh_slot;     // index into the unknown RRH list
  CVector weight;   // alpha_{i,k} * w_{i,l}
};

}  // namespace

McEstimate rate_monte_carlo(const BeamformerSet& w, const PartialCsiView& view, int k, int n, long samples,
                            std::uint64_t seed, McEstimator estimator) {
  if (samples < 1) throw DomainError("rate_monte_carlo needs at least one sample");
  const auto& clusters = view.clusters();
  const int M = view.antennas();
  const double noise = view.noise_power();
  const double signal = std::norm(desired_amplitude(w, view, k, n));

  // Split each interferer amplitude into its known part and per-RRH taps on the unknown channels.
  std::vector<Complex> known_part;
  std::vector<int> unknown_rrhs;
  std::vector<UnknownTap> taps;
  for (int l = 0; l < view.num_ue(); ++l) {
    if (l == k || w.at(l, n).squaredNorm() == 0.0) continue;
    const int idx = static_cast<int>(known_part.size());
    Complex c{0.0, 0.0};
    const auto& rrhs = clusters.serving(l);
    for (std::size_t s = 0; s < rrhs.size(); ++s) {
      const int i = rrhs[s];
      const auto seg = w.at(l, n).segment(static_cast<Eigen::Index>(s) * M, M);
      if (view.known(i, k)) {
        c += (view.known_h(i, k, n).transpose() * seg).value();
      } else {
        auto it = std::find(unknown_rrhs.begin(), unknown_rrhs.end(), i);
        const int slot = static_cast<int>(it - unknown_rrhs.begin());
        if (it == unknown_rrhs.end()) unknown_rrhs.push_back(i);
        taps.push_back({idx, slot, view.alpha(i, k) * seg});
      }
    }
    known_part.push_back(c);
  }

  const double mean_interference = expected_interference(w, view, k, n);
  const double reference = std::log2(1.0 + signal / (mean_interference + noise));
  const double z_scale = mean_interference + noise;

  McEstimate out;
  out.samples = samples;
  if (taps.empty()) {
    double z = 0.0;
    for (const auto& c : known_part) z += std::norm(c);
    out.mean = std::log2(1.0 + signal / (z + noise));
    out.std_error = 0.0;
    return out;
  }

  // Sums of centered values: f - reference and (Z - E[Z]) / z_scale.
  double sf = 0.0, sz = 0.0, sff = 0.0, szz = 0.0, sfz = 0.0;
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  std::vector<CVector> g(unknown_rrhs.size(), CVector(M));
  std::vector<Complex> amp(known_part.size());
  const long shards = (samples + kShardSize - 1) / kShardSize;
  for (long shard = 0; shard < shards; ++shard) {
    Rng rng(derive_seed(seed, {stream::kMonteCarlo, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n),
                               static_cast<std::uint64_t>(shard)}));
    const long count = std::min(kShardSize, samples - shard * kShardSize);
    for (long s = 0; s < count; ++s) {
      for (auto& v : g)
        for (int m = 0; m < M; ++m) v(m) = Complex(gauss(rng), gauss(rng));
      std::copy(known_part.begin(), known_part.end(), amp.begin());
      for (const auto& t : taps) amp[t.interferer] += (g[t.rrh_slot].transpose() * t.weight).value();
      double z = 0.0;
      for (const auto& a : amp) z += std::norm(a);
      const double f = std::log2(1.0 + signal / (z + noise)) - reference;
      const double zc = (z - mean_interference) / z_scale;
      sf += f;
      sz += zc;
      sff += f * f;
      szz += zc * zc;
      sfz += f * zc;
    }
  }

  const double cnt = static_cast<double>(samples);
  const double mf = sf / cnt, mz = sz / cnt;
  if (samples == 1) {
    out.mean = reference + mf;
    return out;
  }
  const double cff = sff - cnt * mf * mf;
  const double czz = szz - cnt * mz * mz;
  const double cfz = sfz - cnt * mf * mz;
  if (estimator == McEstimator::kControlVariate && czz > 0.0 && samples > 2) {
    const double b = cfz / czz;
    out.mean = reference + mf - b * mz;
    const double resid = std::max(cff - b * cfz, 0.0) / (cnt - 2.0);
    out.std_error = std::sqrt(resid / cnt);
  } else {
    out.mean = reference + mf;
    out.std_error = std::sqrt(std::max(cff, 0.0) / (cnt - 1.0) / cnt);
  }
  return out;
}

double rate_exact_special(const BeamformerSet& w, const PartialCsiView& view, int k, int n) {
  const auto& clusters = view.clusters();
  const int M = view.antennas();
  for (int i : clusters.csi(k))
    if (clusters.slot(k, i) < 0) throw PreconditionError("rate_exact_special: CSI set must equal serving set");

  std::vector<double> var;
  for (int l = 0; l < view.num_ue(); ++l) {
    if (l == k) continue;
    double v = 0.0;
    const auto& rrhs = clusters.serving(l);
    for (std::size_t s = 0; s < rrhs.size(); ++s) {
      if (view.known(rrhs[s], k))
        throw PreconditionError("rate_exact_special: interfering clusters must not overlap the CSI set");
      const double a = view.alpha(rrhs[s], k);
      v += a * a * w.at(l, n).segment(static_cast<Eigen::Index>(s) * M, M).squaredNorm();
    }
    if (v > 0.0) var.push_back(v);
  }

  const double noise = view.noise_power();
  const double x2 = std::norm(desired_amplitude(w, view, k, n));
  if (var.empty()) return std::log2(1.0 + x2 / noise);

  std::sort(var.begin(), var.end());
  for (std::size_t j = 1; j < var.size(); ++j) {
    if (var[j] - var[j - 1] <= 1e-9 * var[j]) {
      std::ostringstream msg;
      msg << "rate_exact_special: tied interferer variances for UE " << k << " subchannel " << n
          << "; perturbing by relative 1e-7";
      log_warning(msg.str());
      var[j] = var[j - 1] * (1.0 + 1e-7);
    }
  }

  const double base = std::log1p(x2 / noise);
  double nats = 0.0;
  for (std::size_t l = 0; l < var.size(); ++l) {
    double weight = 1.0;  // T_l * var_l
    for (std::size_t j = 0; j < var.size(); ++j)
      if (j != l) weight /= 1.0 - var[j] / var[l];
    nats += weight * (base - expint_scaled((noise + x2) / var[l]) + expint_scaled(noise / var[l]));
  }
  return nats / std::log(2.0);
}

}  // namespace crannpc
