#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "crannpc/log.hpp"
#include "crannpc/orchestrator.hpp"
#include "crannpc/rate.hpp"
#include "crannpc/wmmse.hpp"

namespace crannpc {

namespace {

constexpr double kRateSlack = 1e-6;          // acceptance: r̃ >= R (1 - slack)
constexpr double kTargetMargin = 1e-9;       // subproblems aim at R (1 + margin)
constexpr double kCapRounding = 1e-12;
constexpr double kPhiDone = 1e-7;
constexpr double kBackOffMargin = 1e-7;
constexpr double kCertifyAttempt = 1e-4;     // only certify when phi is this close to 1

}  // namespace

FeasibilityCheck check_feasibility(const BeamformerSet& w, const PartialCsiView& view, const ScenarioConfig& config,
                                   const std::vector<int>& admitted) {
  const auto& clusters = view.clusters();
  FeasibilityCheck c;
  c.min_rate_ratio = 1.0;
  std::ostringstream why;
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    const double ratio = rrh_transmit_power(w, clusters, i) / config.per_rrh_power_cap_w;
    c.max_power_ratio = std::max(c.max_power_ratio, ratio);
    if (ratio > 1.0 + kCapRounding && why.tellp() == 0) why << "RRH " << i << " exceeds P_max by " << ratio - 1.0;
    const double load = fronthaul_load_rmin(w, clusters, config, i) / config.fronthaul_cap();
    c.max_fronthaul_ratio = std::max(c.max_fronthaul_ratio, load);
    if (load > 1.0 + kCapRounding && why.tellp() == 0) why << "RRH " << i << " exceeds the fronthaul cap";
  }
  std::vector<char> in(view.num_ue(), 0);
  for (int k : admitted) in[k] = 1;
  for (int k = 0; k < view.num_ue(); ++k) {
    if (!in[k]) {
      for (int n = 0; n < view.num_subchannels(); ++n)
        if (w.at(k, n).squaredNorm() > 0.0 && why.tellp() == 0) why << "UE " << k << " is not admitted but has a beam";
      continue;
    }
    const double ratio = rate_lower_bound_total(w, view, k) / config.rate_target;
    c.min_rate_ratio = std::min(c.min_rate_ratio, ratio);
    if (ratio < 1.0 - kRateSlack && why.tellp() == 0) why << "UE " << k << " reaches only " << ratio << " of R_min";
  }
  c.reason = why.str();
  c.ok = c.reason.empty();
  return c;
}

void clip_power(BeamformerSet& w, const ClusterMap& clusters, double p_max) {
  const int M = w.antennas();
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    const double p = rrh_transmit_power(w, clusters, i);
    if (p <= p_max) continue;
    const double s = std::sqrt(p_max / p);
    for (int k : clusters.served(i)) {
      const int slot = clusters.slot(k, i);
      for (int n = 0; n < w.num_subchannels(); ++n) w.at(k, n).segment(slot * M, M) *= s;
    }
  }
}

BeamformerSet canonical_init(const PartialCsiView& view, const ScenarioConfig& config,
                             const std::vector<int>& subset) {
  const auto& clusters = view.clusters();
  const int N = view.num_subchannels(), M = view.antennas();
  BeamformerSet w(clusters, N, M);
  std::vector<char> in(view.num_ue(), 0);
  for (int k : subset) in[k] = 1;
  const double cap = config.fronthaul_cap() * (1.0 + kCapRounding);
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    std::vector<int> cand;
    for (int k : clusters.served(i))
      if (in[k]) cand.push_back(k);
    std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return view.alpha(i, a) > view.alpha(i, b); });
    std::vector<int> kept;
    double load = 0.0;
    for (int k : cand) {
      if (load + config.rate_target > cap) break;
      load += config.rate_target;
      kept.push_back(k);
    }
    if (kept.empty()) continue;
    const double amp = std::sqrt(config.per_rrh_power_cap_w / (static_cast<double>(kept.size()) * N));
    for (int k : kept) {
      const int slot = clusters.slot(k, i);
      for (int n = 0; n < N; ++n) {
        const CVector h = view.known_h(i, k, n);
        const double norm = h.norm();
        if (norm > 0.0) w.at(k, n).segment(slot * M, M) = (amp / norm) * h.conjugate();
      }
    }
  }
  return w;
}

namespace {

struct FractionOutcome {
  std::vector<double> phi;  // per UE, 0 outside the subset
  double common_phi = 0.0;
  BeamformerSet w;
  int iterations = 0;
  std::vector<double> trace;
};

std::vector<double> fractions(const BeamformerSet& w, const PartialCsiView& view, const ScenarioConfig& config,
                              const std::vector<int>& subset) {
  std::vector<double> phi(view.num_ue(), 0.0);
  for (int k : subset) phi[k] = std::min(1.0, std::sqrt(rate_lower_bound_total(w, view, k) / config.rate_target));
  return phi;
}

double total_power(const BeamformerSet& w) {
  double p = 0.0;
  for (int k = 0; k < w.num_ue(); ++k)
    for (int n = 0; n < w.num_subchannels(); ++n) p += w.at(k, n).squaredNorm();
  return p;
}

// Block-coordinate loop shared by the per-UE and the common fraction problems.
FractionOutcome run_fraction_loop(const std::vector<int>& subset, const PartialCsiView& view,
                                  const ScenarioConfig& config, BeamMode mode, RateTerm term,
                                  const FeasibilityOptions& options, const BeamformerSet* start = nullptr) {
  FractionOutcome out;
  if (start) {
    out.w = *start;
    std::vector<char> in(view.num_ue(), 0);
    for (int k : subset) in[k] = 1;
    for (int k = 0; k < view.num_ue(); ++k)
      if (!in[k]) out.w.zero_ue(k);
  } else {
    out.w = canonical_init(view, config, subset);
  }
  auto score = [&](const std::vector<double>& phi, const BeamformerSet& w, double& common) {
    common = 1.0;
    double f = 0.0;
    for (int k : subset) {
      common = std::min(common, phi[k]);
      if (term == RateTerm::kPerUeFraction) f += (phi[k] - 1.0) * (phi[k] - 1.0);
    }
    if (term == RateTerm::kCommonFraction) f = (common - 1.0) * (common - 1.0);
    return f + options.regularization * total_power(w) / config.per_rrh_power_cap_w;
  };
  out.phi = fractions(out.w, view, config, subset);
  double f_prev = score(out.phi, out.w, out.common_phi);
  out.trace.push_back(f_prev);

  std::vector<double> targets(view.num_ue(), config.rate_target);
  DualState duals;
  for (int it = 0; it < options.max_iterations; ++it) {
    const bool done = term == RateTerm::kCommonFraction
                          ? out.common_phi >= 1.0 - kPhiDone
                          : std::all_of(subset.begin(), subset.end(), [&](int k) { return out.phi[k] >= 1.0 - kPhiDone; });
    if (done) break;
    const AuxiliaryState aux = optimal_auxiliary(out.w, view);
    const SCACoefficients co = linearize(out.w, view, config, subset);
    SubproblemSpec spec;
    spec.view = &view;
    spec.config = &config;
    spec.admitted = subset;
    spec.mode = mode;
    spec.aux = &aux;
    spec.coeffs = &co;
    spec.rate_term = term;
    spec.rate_targets = targets;
    spec.regularization = options.regularization;
    SubproblemResult res;
    try {
      res = solve_subproblem(spec, duals, options.dual);
    } catch (const NumericalError& e) {
      log_warning(std::string("feasibility loop stopped: ") + e.what());
      break;
    }
    if (res.kkt.infeasible) {
      log_warning("feasibility subproblem reported an unbounded dual; keeping the previous beams");
      break;
    }
    duals = res.duals;
    clip_power(res.w, view.clusters(), config.per_rrh_power_cap_w);
    std::vector<double> phi = fractions(res.w, view, config, subset);
    double common = 0.0;
    const double f = score(phi, res.w, common);
    ++out.iterations;
    if (f > f_prev) {
      // Only reachable through inner inaccuracy; keep the better point.
      log_debug("feasibility objective increased; stopping");
      break;
    }
    out.w = std::move(res.w);
    out.phi = std::move(phi);
    out.common_phi = common;
    out.trace.push_back(f);
    const double change = (f_prev - f) / std::max(f_prev, 1e-300);
    f_prev = f;
    if (change < options.relative_tolerance) break;
  }
  return out;
}

}  // namespace

BeamformerSet back_off(const BeamformerSet& w, const std::vector<int>& subset, const PartialCsiView& view,
                       const ScenarioConfig& config) {
  if (subset.empty()) return w;
  auto ok = [&](double s) {
    BeamformerSet t = w;
    t.scale(s);
    if (!check_feasibility(t, view, config, subset).ok) return false;
    for (int k : subset)
      if (rate_lower_bound_total(t, view, k) < config.rate_target * (1.0 + kBackOffMargin)) return false;
    return true;
  };
  if (!ok(1.0)) return w;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  BeamformerSet out = w;
  out.scale(hi);
  return out;
}

bool certify_supportable(const std::vector<int>& subset, const PartialCsiView& view, const ScenarioConfig& config, BeamMode mode,
             const DualSolverOptions& dual, BeamformerSet& w) {
  const AuxiliaryState aux = optimal_auxiliary(w, view);
  const SCACoefficients co = linearize(w, view, config, subset);
  SubproblemSpec spec;
  spec.view = &view;
  spec.config = &config;
  spec.admitted = subset;
  spec.mode = mode;
  spec.aux = &aux;
  spec.coeffs = &co;
  spec.rate_targets.assign(view.num_ue(), config.rate_target * (1.0 + kTargetMargin));
  SubproblemResult res;
  try {
    res = solve_subproblem(spec, DualState{}, dual);
  } catch (const NumericalError& e) {
    log_warning(std::string("certification solve failed: ") + e.what());
    return false;
  }
  if (res.kkt.infeasible) return false;
  clip_power(res.w, view.clusters(), config.per_rrh_power_cap_w);
  if (!check_feasibility(res.w, view, config, subset).ok) return false;
  w = std::move(res.w);
  return true;
}

P9Result solve_feasibility_p9(const PartialCsiView& view, const ScenarioConfig& config, BeamMode mode,
                              const FeasibilityOptions& options) {
  std::vector<int> all(view.num_ue());
  std::iota(all.begin(), all.end(), 0);
  FractionOutcome f = run_fraction_loop(all, view, config, mode, RateTerm::kPerUeFraction, options);
  P9Result r;
  r.phi = std::move(f.phi);
  r.w = std::move(f.w);
  r.iterations = f.iterations;
  r.objective_trace = std::move(f.trace);
  return r;
}

P10Result solve_feasibility_p10(const std::vector<int>& subset, const PartialCsiView& view,
                                const ScenarioConfig& config, BeamMode mode, const FeasibilityOptions& options,
                                const BeamformerSet* start) {
  if (subset.empty()) throw PreconditionError("P10 needs a nonempty UE subset");
  std::vector<int> s = subset;
  std::sort(s.begin(), s.end());
  FractionOutcome f = run_fraction_loop(s, view, config, mode, RateTerm::kCommonFraction, options, start);
  P10Result r;
  r.phi = f.common_phi;
  r.iterations = f.iterations;
  if (f.common_phi >= 1.0 - kCertifyAttempt) {
    BeamformerSet w = f.w;
    if (certify_supportable(s, view, config, mode, options.certify_dual, w)) {
      r.supportable = true;
      r.phi = 1.0;
      r.w = std::move(w);
      return r;
    }
    if (check_feasibility(f.w, view, config, s).ok) {
      r.supportable = true;
      r.w = std::move(f.w);
      return r;
    }
  }
  r.w = std::move(f.w);
  return r;
}

}  // namespace crannpc
