#include <gtest/gtest.h>

#include <cmath>

#include "crannpc/rate.hpp"
#include "crannpc/wmmse.hpp"
#include "helpers.hpp"

using namespace crannpc;
using namespace crannpc::testing;

TEST(Mse, ScalarCases) {
  const ScalarLink s;
  const PartialCsiView v = s.view(1.0);
  const BeamformerSet w = s.beams(1.0);
  EXPECT_DOUBLE_EQ(mse(w, v, 0.0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(mse(w, v, 0.5, 0, 0), 0.5);
  EXPECT_NEAR(std::abs(update_u(w, v, 0, 0) - Complex(0.5)), 0.0, 1e-15);
  EXPECT_EQ(update_u(s.beams(0.0), v, 0, 0), Complex(0.0));
}

TEST(Mse, WeightUpdate) {
  EXPECT_DOUBLE_EQ(update_q(0.5), 2.0);
  EXPECT_DOUBLE_EQ(update_q(1.0), 1.0);
  EXPECT_DOUBLE_EQ(update_q(1e-13), kWeightCap);
  EXPECT_THROW(update_q(0.0), DomainError);
}

TEST(Psi, ScalarCases) {
  const ScalarLink s;
  const PartialCsiView v = s.view(1.0);
  const BeamformerSet w = s.beams(1.0);
  EXPECT_NEAR(psi(w, v, 0.0, 1.0, 0, 0), 0.0, 1e-15);
  const Complex u = update_u(w, v, 0, 0);
  const double q = update_q(mse(w, v, u, 0, 0));
  EXPECT_NEAR(psi(w, v, u, q, 0, 0), 1.0, 1e-15);
}

TEST(Mse, ReceiverIsTheGridMinimizer) {
  const Drop d = make_drop(desk_scale(ScenarioConfig{}), 2);
  const PartialCsiView v = view_of(d);
  Rng rng(3);
  const BeamformerSet w = random_beams(d.clusters, d.config.num_subchannels, d.config.antennas_per_rrh, rng, 0.1);
  for (int k = 0; k < 4; ++k) {
    const Complex u = update_u(w, v, k, 0);
    const double best = mse(w, v, u, k, 0);
    const double r = std::max(std::abs(u), 1e-12);
    double grid_min = std::numeric_limits<double>::infinity();
    for (int a = -40; a <= 40; ++a)
      for (int b = -40; b <= 40; ++b) grid_min = std::min(grid_min, mse(w, v, u + Complex(a, b) * (0.05 * r / 40), k, 0));
    EXPECT_LE(best, grid_min * (1.0 + 1e-12));
    // the closed form: the optimal MSE is 1 / (1 + SINR lower-bound argument)
    const double snr = std::exp2(rate_lower_bound(w, v, k, 0)) - 1.0;
    EXPECT_NEAR(update_q(best), 1.0 + snr, 1e-9 * (1.0 + snr));
  }
}

TEST(Psi, TightAtTheOptimumAndBelowElsewhere) {
  Rng rng(10);
  std::uniform_real_distribution<double> jitter(0.3, 1.7);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Drop d = make_drop(desk_scale(ScenarioConfig{}), seed);
    const PartialCsiView v = view_of(d);
    const BeamformerSet w = random_beams(d.clusters, d.config.num_subchannels, d.config.antennas_per_rrh, rng, 0.2);
    const AuxiliaryState aux = optimal_auxiliary(w, v);
    for (int k = 0; k < d.config.num_ue; ++k)
      for (int n = 0; n < d.config.num_subchannels; ++n) {
        const double lb = rate_lower_bound(w, v, k, n);
        EXPECT_NEAR(psi(w, v, aux.u_at(k, n), aux.q_at(k, n), k, n), lb, 1e-9 * std::max(1.0, lb));
        const Complex u = aux.u_at(k, n) * Complex(jitter(rng), jitter(rng) - 1.0);
        const double q = aux.q_at(k, n) * jitter(rng);
        EXPECT_LE(psi(w, v, u, q, k, n), lb + 1e-12 * std::max(1.0, lb));
      }
  }
}
