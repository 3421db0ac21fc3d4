#include "crannpc/channel.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "crannpc/rng.hpp"

namespace crannpc {

double pathloss_db(double d_km) { return 148.1 + 37.6 * std::log10(std::max(d_km, 1e-3)); }

ChannelState::ChannelState(int num_rrh, int num_ue, int num_subchannels, int antennas, std::uint64_t seed)
    : I_(num_rrh), K_(num_ue), N_(num_subchannels), M_(antennas), seed_(seed),
      h_(static_cast<std::size_t>(num_rrh) * num_ue * num_subchannels * antennas),
      alpha_(static_cast<std::size_t>(num_rrh) * num_ue, 1.0) {}

ChannelState draw_channels(const NetworkScenario& scenario, std::uint64_t seed) {
  const auto& c = scenario.config;
  const int I = scenario.num_rrh(), K = scenario.num_ue();
  ChannelState ch(I, K, c.num_subchannels, c.antennas_per_rrh, seed);

  Rng shadow_rng(derive_seed(seed, {stream::kShadowing}));
  std::normal_distribution<double> shadow(0.0, kShadowingStdDb);
  for (int i = 0; i < I; ++i) {
    for (int k = 0; k < K; ++k) {
      const double d_km = distance_m(scenario.rrh_positions[i], scenario.ue_positions[k]) / 1000.0;
      const double loss_db = pathloss_db(d_km) + shadow(shadow_rng);
      ch.set_alpha(i, k, std::pow(10.0, -loss_db / 20.0));
    }
  }

  Rng fade_rng(derive_seed(seed, {stream::kFading}));
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < c.num_subchannels; ++n) {
        auto h = ch.h(i, k, n);
        for (int m = 0; m < c.antennas_per_rrh; ++m) {
          const double re = gauss(fade_rng);
          const double im = gauss(fade_rng);
          h(m) = ch.alpha(i, k) * Complex(re, im);
        }
      }
  return ch;
}

PartialCsiView::PartialCsiView(const ChannelState& channels, const ClusterMap& clusters, double noise_power)
    : clusters_(clusters), N_(channels.num_subchannels()), M_(channels.antennas()), noise_(noise_power) {
  const int I = clusters.num_rrh(), K = clusters.num_ue();
  alpha_.resize(static_cast<std::size_t>(I) * K);
  known_.resize(static_cast<std::size_t>(K) * I);
  for (int i = 0; i < I; ++i)
    for (int k = 0; k < K; ++k) alpha_[static_cast<std::size_t>(i) * K + k] = channels.alpha(i, k);
  for (int k = 0; k < K; ++k)
    for (int i : clusters.csi(k)) {
      auto& v = known_[static_cast<std::size_t>(k) * I + i];
      for (int n = 0; n < N_; ++n) v.emplace_back(channels.h(i, k, n));
    }

  own_.resize(static_cast<std::size_t>(K) * N_);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N_; ++n) own_[static_cast<std::size_t>(k) * N_ + n] = aggregated(k, k, n);

  cov_.resize(static_cast<std::size_t>(K) * K * N_);
  for (int l = 0; l < K; ++l)
    for (int k = 0; k < K; ++k) {
      if (l == k) continue;
      for (int n = 0; n < N_; ++n) cov_[(static_cast<std::size_t>(l) * K + k) * N_ + n] = build_A_matrix(*this, l, k, n);
    }
}

CVector PartialCsiView::known_h(int i, int k, int n) const {
  const auto& v = known_[static_cast<std::size_t>(k) * num_rrh() + i];
  if (v.empty()) throw DomainError("instantaneous CSI of this link is not available to the BBU");
  return v[n];
}

CRowVector PartialCsiView::aggregated(int l, int k, int n) const {
  const auto& rrhs = clusters_.serving(l);
  CRowVector out(static_cast<Eigen::Index>(rrhs.size()) * M_);
  for (std::size_t s = 0; s < rrhs.size(); ++s)
    out.segment(static_cast<Eigen::Index>(s) * M_, M_) = known_h(rrhs[s], k, n).transpose();
  return out;
}

const CMatrix& PartialCsiView::covariance(int l, int k, int n) const {
  if (l == k) throw DomainError("covariance A_{l,k} is defined only for l != k");
  return cov_[(static_cast<std::size_t>(l) * num_ue() + k) * N_ + n];
}

CMatrix build_A_matrix(const PartialCsiView& view, int l, int k, int n) {
  if (l == k) throw DomainError("build_A requires an interferer l != k");
  const auto& rrhs = view.clusters().serving(l);
  const int M = view.antennas();
  const auto L = static_cast<Eigen::Index>(rrhs.size());
  CMatrix A = CMatrix::Zero(L * M, L * M);
  // Known part: h̄ᴴh̄ restricted to the known blocks.
  CRowVector known_row = CRowVector::Zero(L * M);
  for (Eigen::Index s = 0; s < L; ++s)
    if (view.known(rrhs[s], k)) known_row.segment(s * M, M) = view.known_h(rrhs[s], k, n).transpose();
  A.noalias() = known_row.adjoint() * known_row;
  for (Eigen::Index s = 0; s < L; ++s) {
    if (view.known(rrhs[s], k)) continue;
    const double a = view.alpha(rrhs[s], k);
    A.block(s * M, s * M, M, M).diagonal().setConstant(Complex(a * a, 0.0));
  }
  return A;
}

InterferenceCovariance build_A(const PartialCsiView& view, int l, int k, int n) {
  return decompose_A(build_A_matrix(view, l, k, n));
}

InterferenceCovariance decompose_A(const CMatrix& A) {
  if (A.rows() != A.cols()) throw DomainError("decompose_A: matrix is not square");
  const double scale = std::max(A.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("decompose_A: matrix is not Hermitian");
  InterferenceCovariance out;
  out.A = A;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (A + A.adjoint()));
  const auto& vals = eig.eigenvalues();
  const double lmax = vals.size() ? vals.maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = vals.size() - 1; j >= 0; --j)
    if (lmax > 0.0 && vals(j) > 1e-12 * lmax) keep.push_back(j);
  out.rank = static_cast<int>(keep.size());
  out.V.resize(A.rows(), out.rank);
  for (int c = 0; c < out.rank; ++c) out.V.col(c) = eig.eigenvectors().col(keep[c]) * std::sqrt(vals(keep[c]));
  return out;
}

std::string channels_to_text(const ChannelState& ch) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# cran-npc channels I K N M seed\n";
  os << ch.num_rrh() << ' ' << ch.num_ue() << ' ' << ch.num_subchannels() << ' ' << ch.antennas() << ' ' << ch.seed()
     << "\n# alpha i k value\n";
  for (int i = 0; i < ch.num_rrh(); ++i)
    for (int k = 0; k < ch.num_ue(); ++k) os << "alpha " << i << ' ' << k << ' ' << ch.alpha(i, k) << "\n";
  os << "# h i k n then M (re im) pairs\n";
  for (int i = 0; i < ch.num_rrh(); ++i)
    for (int k = 0; k < ch.num_ue(); ++k)
      for (int n = 0; n < ch.num_subchannels(); ++n) {
        os << "h " << i << ' ' << k << ' ' << n;
        const auto h = ch.h(i, k, n);
        for (int m = 0; m < ch.antennas(); ++m) os << ' ' << h(m).real() << ' ' << h(m).imag();
        os << "\n";
      }
  return os.str();
}

}  // namespace crannpc
