#include "crannpc/wmmse.hpp"

#include <cmath>

#include "crannpc/log.hpp"
#include "crannpc/rate.hpp"

namespace crannpc {

double mse(const BeamformerSet& w, const PartialCsiView& view, Complex u, int k, int n) {
  const Complex x = desired_amplitude(w, view, k, n);
  const double u2 = std::norm(u);
  return std::norm(std::conj(u) * x - 1.0) + u2 * (expected_interference(w, view, k, n) + view.noise_power());
}

Complex update_u(const BeamformerSet& w, const PartialCsiView& view, int k, int n) {
  const Complex x = desired_amplitude(w, view, k, n);
  const double den = std::norm(x) + expected_interference(w, view, k, n) + view.noise_power();
  return x / den;
}

double update_q(double eps) {
  if (!(eps > 0.0)) throw DomainError("update_q requires a positive MSE");
  const double q = 1.0 / eps;
  if (q > kWeightCap) {
    log_warning("MSE weight capped at 1e12");
    return kWeightCap;
  }
  return q;
}

double psi(const BeamformerSet& w, const PartialCsiView& view, Complex u, double q, int k, int n) {
  return (std::log(q) - q * mse(w, view, u, k, n) + 1.0) / std::log(2.0);
}

AuxiliaryState optimal_auxiliary(const BeamformerSet& w, const PartialCsiView& view) {
  const int K = view.num_ue(), N = view.num_subchannels();
  AuxiliaryState aux(K, N);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) {
      const Complex x = desired_amplitude(w, view, k, n);
      const double floor = expected_interference(w, view, k, n) + view.noise_power();
      const double den = std::norm(x) + floor;
      aux.u_at(k, n) = x / den;
      // mse at the MMSE receiver equals floor / den; this form avoids 1 - |x|²/den cancellation.
      aux.q_at(k, n) = update_q(floor / den);
    }
  return aux;
}

}  // namespace crannpc
