#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>

#include "crannpc/harness.hpp"
#include "crannpc/rate.hpp"
#include "helpers.hpp"

using namespace crannpc;
using namespace crannpc::testing;

namespace {

// e^x Ei(-x) = -∫_0^∞ e^{-t} / (t + x) dt
double scaled_ei_quadrature(double x) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return -integrator.integrate([x](double t) { return std::exp(-t) / (t + x); });
}

}  // namespace

TEST(ExpInt, AgainstQuadrature) {
  for (double x : {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1e3}) {
    const double ref = scaled_ei_quadrature(x);
    EXPECT_NEAR(expint_scaled(x), ref, 1e-12 * std::abs(ref)) << "x = " << x;
  }
  EXPECT_NEAR(expint_scaled(1.0), -0.596347, 1e-6);
  EXPECT_NEAR(expint_scaled(0.5), -0.9229106, 1e-7);
}

TEST(ExpInt, LargeArgumentAsymptote) {
  const double x = 1e6;
  EXPECT_NEAR(expint_scaled(x), -1.0 / x, 1e-5 / x);
  EXPECT_THROW(expint_scaled(0.0), DomainError);
}

TEST(Sinr, ScalarCases) {
  const ScalarLink s;
  EXPECT_DOUBLE_EQ(sinr(s.beams(1.0), s.channels, s.clusters, 1.0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sinr(s.beams(0.0), s.channels, s.clusters, 1.0, 0, 0), 0.0);
}

TEST(Sinr, ScalingIdentity) {
  const Drop d = make_drop(desk_scale(ScenarioConfig{}), 12);
  Rng rng(1);
  BeamformerSet w = random_beams(d.clusters, d.config.num_subchannels, d.config.antennas_per_rrh, rng);
  const double noise = d.config.noise_power_w();
  const double c = 0.37;
  BeamformerSet wc = w;
  wc.scale(c);
  for (int k = 0; k < d.config.num_ue; ++k) {
    // SINR = S / (I + σ²): recover S and I from the SINRs at two noise levels
    const double g1 = sinr(w, d.channels, d.clusters, noise, k, 0);
    const double g2 = sinr(w, d.channels, d.clusters, 2.0 * noise, k, 0);
    const double interf = noise * (g1 - 2.0 * g2) / (g2 - g1);
    const double signal = g1 * (interf + noise);
    const double expect = c * c * signal / (c * c * interf + noise);
    EXPECT_NEAR(sinr(wc, d.channels, d.clusters, noise, k, 0), expect, 1e-9 * expect);
  }
}

TEST(LowerBound, EqualsFullCsiRateWhenEverythingIsKnown) {
  ScenarioConfig c = desk_scale(ScenarioConfig{});
  c.csi_cluster_size = c.num_rrh;
  const Drop d = make_drop(c, 5);
  const PartialCsiView v = view_of(d);
  Rng rng(2);
  const BeamformerSet w = random_beams(d.clusters, c.num_subchannels, c.antennas_per_rrh, rng, 1e-3);
  for (int k = 0; k < c.num_ue; ++k)
    for (int n = 0; n < c.num_subchannels; ++n) {
      const double exact = std::log2(1.0 + sinr(w, d.channels, d.clusters, v.noise_power(), k, n));
      EXPECT_NEAR(rate_lower_bound(w, v, k, n), exact, 1e-12 * std::max(1.0, exact));
      const McEstimate mc = rate_monte_carlo(w, v, k, n, 1000, 9);
      EXPECT_EQ(mc.std_error, 0.0);
      EXPECT_NEAR(mc.mean, exact, 1e-12 * std::max(1.0, exact));
    }
}

TEST(LowerBound, NoiseOnlyOneBit) {
  const ScalarLink s;
  const PartialCsiView v = s.view(1.0);
  EXPECT_NEAR(rate_lower_bound(s.beams(1.0), v, 0, 0), 1.0, 1e-15);
  EXPECT_NEAR(rate_lower_bound(s.beams(Complex(0.0, std::sqrt(3.0))), v, 0, 0), 2.0, 1e-15);
}

TEST(LowerBound, BelowMonteCarloOnRandomDrops) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Drop d = make_drop(desk_scale(ScenarioConfig{}), seed);
    const PartialCsiView v = view_of(d);
    Rng rng(seed);
    const BeamformerSet w = random_beams(d.clusters, d.config.num_subchannels, d.config.antennas_per_rrh, rng, 0.3);
    for (int k = 0; k < d.config.num_ue; ++k) {
      const McEstimate mc = rate_monte_carlo(w, v, k, 0, 4000, seed);
      const double lb = rate_lower_bound(w, v, k, 0);
      EXPECT_GE(mc.mean + 3.0 * mc.std_error, lb * (1.0 - 1e-12)) << "seed " << seed << " UE " << k;
    }
  }
}

TEST(MonteCarlo, EstimatorsAgreeAndAreDeterministic) {
  const Drop d = make_drop(desk_scale(ScenarioConfig{}), 21);
  const PartialCsiView v = view_of(d);
  Rng rng(4);
  const BeamformerSet w = random_beams(d.clusters, d.config.num_subchannels, d.config.antennas_per_rrh, rng, 0.3);
  for (int k = 0; k < 3; ++k) {
    const McEstimate cv = rate_monte_carlo(w, v, k, 1, 20000, 5, McEstimator::kControlVariate);
    const McEstimate plain = rate_monte_carlo(w, v, k, 1, 20000, 5, McEstimator::kPlain);
    const double se = std::hypot(cv.std_error, plain.std_error);
    EXPECT_LE(std::abs(cv.mean - plain.mean), 4.0 * se + 1e-12);
    EXPECT_LE(cv.std_error, plain.std_error * (1.0 + 1e-12));
    const McEstimate again = rate_monte_carlo(w, v, k, 1, 20000, 5, McEstimator::kControlVariate);
    EXPECT_EQ(again.mean, cv.mean);
  }
}

TEST(ExactRate, NoInterferersIsDeterministic) {
  const ScalarLink s(Complex(0.0, 2.0));
  const PartialCsiView v = s.view(0.5);
  EXPECT_NEAR(rate_exact_special(s.beams(0.5), v, 0, 0), std::log2(1.0 + 1.0 / 0.5), 1e-14);
}

TEST(ExactRate, SingleInterfererAgainstMonteCarlo) {
  // two UEs, one RRH each, neither knows the other's channel
  ClusterMap m(2, {{0}, {1}}, {{0}, {1}});
  ChannelState ch(2, 2, 1, 1, 3);
  ch.set_alpha(0, 0, 1.0);
  ch.set_alpha(1, 0, 0.6);
  ch.set_alpha(0, 1, 0.4);
  ch.set_alpha(1, 1, 1.0);
  ch.h(0, 0, 0)(0) = Complex(0.8, -0.3);
  ch.h(1, 1, 0)(0) = Complex(1.1, 0.2);
  ch.h(1, 0, 0)(0) = 0.6;
  ch.h(0, 1, 0)(0) = 0.4;
  const PartialCsiView v(ch, m, 0.2);
  BeamformerSet w(m, 1, 1);
  w.at(0, 0)(0) = 1.0;
  w.at(1, 0)(0) = Complex(0.0, 1.3);

  // closed form with T = 1/ϖ: E[log2(1 + X/(Z+σ²))], Z ~ Exp(mean ϖ)
  const double X = std::norm(Complex(0.8, -0.3));
  const double varpi = 0.36 * 1.69;
  const double exact = rate_exact_special(w, v, 0, 0);
  EXPECT_GT(exact, rate_lower_bound(w, v, 0, 0));
  const McEstimate mc = rate_monte_carlo(w, v, 0, 0, 1000000, 77, McEstimator::kPlain);
  EXPECT_LE(std::abs(exact - mc.mean), 3.0 * mc.std_error);

  // independent check of the same expectation by quadrature over Z
  boost::math::quadrature::exp_sinh<double> integrator;
  const double quad = integrator.integrate([&](double z) {
    return std::log2(1.0 + X / (z + 0.2)) * std::exp(-z / varpi) / varpi;
  });
  EXPECT_NEAR(exact, quad, 1e-9 * quad);
}

TEST(ExactRate, GridTightness) {
  const TightnessPoint p = tightness_point(3.0, 40.0, 100000, 31);
  EXPECT_LE(std::abs(p.exact - p.monte_carlo), 3.0 * p.mc_std_error);
  EXPECT_LE(std::abs(p.exact - p.monte_carlo), 0.01 * p.exact);
  EXPECT_LT(p.lower_bound, p.exact);
  EXPECT_LE((p.exact - p.lower_bound) / p.exact, 0.05);
}
