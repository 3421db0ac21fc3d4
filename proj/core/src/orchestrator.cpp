#include "crannpc/orchestrator.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "crannpc/log.hpp"
#include "crannpc/rate.hpp"
#include "crannpc/wmmse.hpp"

namespace crannpc {
namespace {

constexpr double kTargetMargin = 1e-9;

std::vector<double> lower_bound_rates(const BeamformerSet& w, const PartialCsiView& view,
                                      const std::vector<int>& admitted) {
  std::vector<double> r(view.num_ue(), 0.0);
  for (int k : admitted) r[k] = rate_lower_bound_total(w, view, k);
  return r;
}

std::vector<int> ordered_subset(const std::vector<int>& order, int from) {
  std::vector<int> s(order.begin() + from, order.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

SelectionResult select_users_bues(const PartialCsiView& view, const ScenarioConfig& config, BeamMode mode,
                                  const FeasibilityOptions& options) {
  const int K = view.num_ue();
  SelectionResult out;
  if (K == 0) {
    out.status = "no UE can be supported";
    return out;
  }
  P9Result p9 = solve_feasibility_p9(view, config, mode, options);
  out.phi = p9.phi;

  std::vector<int> all(K);
  std::iota(all.begin(), all.end(), 0);
  if (std::all_of(p9.phi.begin(), p9.phi.end(), [](double p) { return p >= 1.0 - 1e-6; })) {
    BeamformerSet w = p9.w;
    if (certify_supportable(all, view, config, mode, options.certify_dual, w)) {
      out.admitted = all;
      out.w = back_off(w, all, view, config);
      out.status = "all UEs supported";
      return out;
    }
    log_info("BUES: all fractions reached 1 but certification failed; bisecting");
  }

  std::vector<int> order(all);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p9.phi[a] < p9.phi[b]; });

  std::map<int, P10Result> memo;
  auto supportable = [&](int L) {
    auto it = memo.find(L);
    if (it == memo.end()) {
      ++out.p10_calls;
      it = memo.emplace(L, solve_feasibility_p10(ordered_subset(order, L), view, config, mode, options, &p9.w)).first;
    }
    return it->second.supportable;
  };

  if (!supportable(K - 1)) {
    out.w = BeamformerSet(view.clusters(), view.num_subchannels(), view.antennas());
    out.status = "no UE can be supported";
    return out;
  }
  int lo = 0, hi = K;
  while (hi - lo > 1) {
    const int L = (lo + hi) / 2;
    if (supportable(L)) {
      hi = L;
    } else {
      lo = L;
    }
  }
  out.admitted = ordered_subset(order, hi);
  out.w = back_off(memo.at(hi).w, out.admitted, view, config);
  out.status = "bisection";
  return out;
}

SelectionResult select_users_exhaustive(const PartialCsiView& view, const ScenarioConfig& config, BeamMode mode,
                                        const FeasibilityOptions& options) {
  const int K = view.num_ue();
  if (K > kExhaustiveMaxUe) {
    std::ostringstream msg;
    msg << "exhaustive search is capped at K <= " << kExhaustiveMaxUe << " (got K = " << K << ")";
    throw ConfigError(msg.str());
  }
  SelectionResult out;
  // Each subset gets the start BUES would use as well as the canonical one, so
  // the search is never weaker than the bisection it is compared against.
  const P9Result p9 = solve_feasibility_p9(view, config, mode, options);
  for (int size = K; size >= 1; --size) {
    double best = -1.0;
    for (unsigned mask = 1; mask < (1u << K); ++mask) {
      if (std::popcount(mask) != size) continue;
      std::vector<int> subset;
      for (int k = 0; k < K; ++k)
        if (mask & (1u << k)) subset.push_back(k);
      ++out.p10_calls;
      P10Result r = solve_feasibility_p10(subset, view, config, mode, options);
      if (!r.supportable) {
        ++out.p10_calls;
        r = solve_feasibility_p10(subset, view, config, mode, options, &p9.w);
      }
      if (!r.supportable) continue;
      double total = 0.0;
      for (int k : subset) total += rate_lower_bound_total(r.w, view, k);
      if (total > best) {
        best = total;
        out.admitted = subset;
        out.w = std::move(r.w);
      }
    }
    if (best >= 0.0) {
      out.w = back_off(out.w, out.admitted, view, config);
      out.status = "exhaustive";
      return out;
    }
  }
  out.w = BeamformerSet(view.clusters(), view.num_subchannels(), view.antennas());
  out.status = "no UE can be supported";
  return out;
}

double conventional_network_power(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config,
                                  const std::vector<int>& admitted, const std::vector<double>& rates) {
  std::vector<char> on(clusters.num_rrh(), 0);
  for (int k : admitted)
    for (int i : clusters.serving(k)) on[i] = 1;
  double total = 0.0;
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    total += config.amplifier_inefficiency * rrh_transmit_power(w, clusters, i);
    total += on[i] ? config.active_power_w : config.sleep_power_w;
    for (int k : clusters.served(i))
      if (link_power(w, clusters, i, k) > config.zero_power_threshold_w) total += config.fronthaul_scale * rates.at(k);
  }
  return total;
}

namespace {

void finalize(SolveReport& r, const PartialCsiView& view, const ScenarioConfig& config, PowerObjective objective) {
  const auto& clusters = view.clusters();
  r.rates = lower_bound_rates(r.w, view, r.admitted);
  r.active = active_sets(r.w, clusters, config.zero_power_threshold_w);
  if (objective == PowerObjective::kTransmitOnly) {
    r.network_power = conventional_network_power(r.w, clusters, config, r.admitted, r.rates);
    r.unsmoothed_objective = 0.0;
    for (int i = 0; i < clusters.num_rrh(); ++i)
      r.unsmoothed_objective += config.amplifier_inefficiency * rrh_transmit_power(r.w, clusters, i);
  } else {
    r.network_power = network_power(r.w, clusters, config, r.rates);
    r.unsmoothed_objective = network_power_rmin(r.w, clusters, config);
  }
  r.feasibility = check_feasibility(r.w, view, config, r.admitted);
}

void record(SolveReport& r, double objective, const BeamformerSet& w, const ClusterMap& clusters, double thr) {
  r.objective_trace.push_back(objective);
  const ActiveSets a = active_sets(w, clusters, thr);
  r.active_rrh_trace.push_back(static_cast<int>(a.rrhs.size()));
  r.active_link_trace.push_back(static_cast<int>(a.links.size()));
}

}  // namespace

SolveReport minimize_npc(const BeamformerSet& w0, const std::vector<int>& admitted_in, const PartialCsiView& view,
                         const ScenarioConfig& config, BeamMode mode, PowerObjective objective,
                         const NpcOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto& clusters = view.clusters();
  SolveReport r;
  r.admitted = admitted_in;
  std::sort(r.admitted.begin(), r.admitted.end());
  r.w = w0;
  if (r.admitted.empty()) {
    r.converged = true;
    r.status = "no admitted UE";
    finalize(r, view, config, objective);
    return r;
  }
  const FeasibilityCheck initial = check_feasibility(w0, view, config, r.admitted);
  if (!initial.ok) throw PreconditionError("minimize_npc needs feasible initial beams: " + initial.reason);

  double obj = smoothed_network_power(r.w, clusters, config, r.admitted, objective);
  record(r, obj, r.w, clusters, config.zero_power_threshold_w);
  const std::vector<double> targets(view.num_ue(), config.rate_target * (1.0 + kTargetMargin));
  DualState duals;
  r.status = "iteration cap reached";
  for (int it = 0; it < options.max_iterations; ++it) {
    const AuxiliaryState aux = optimal_auxiliary(r.w, view);
    const SCACoefficients co = linearize(r.w, view, config, r.admitted, objective);
    SubproblemSpec spec;
    spec.view = &view;
    spec.config = &config;
    spec.admitted = r.admitted;
    spec.mode = mode;
    spec.aux = &aux;
    spec.coeffs = &co;
    spec.rate_targets = targets;
    SubproblemResult res;
    try {
      res = solve_subproblem(spec, duals, options.dual);
    } catch (const NumericalError& e) {
      r.inner_failure = true;
      r.status = std::string("inner solver failed: ") + e.what();
      break;
    }
    if (res.kkt.infeasible) {
      r.inner_failure = true;
      r.status = "subproblem reported infeasible";
      break;
    }
    clip_power(res.w, clusters, config.per_rrh_power_cap_w);
    const FeasibilityCheck chk = check_feasibility(res.w, view, config, r.admitted);
    if (!chk.ok) {
      r.inner_failure = true;
      r.status = "iterate left the feasible set: " + chk.reason;
      break;
    }
    if (!res.kkt.converged) log_warning("NPC subproblem did not reach its tolerance; continuing with a feasible iterate");
    const double next = smoothed_network_power(res.w, clusters, config, r.admitted, objective);
    if (next > obj * (1.0 + 1e-9)) log_warning("NPC objective increased between iterates");
    r.w = std::move(res.w);
    duals = std::move(res.duals);
    ++r.iterations;
    record(r, next, r.w, clusters, config.zero_power_threshold_w);
    const double change = std::abs(obj - next) / std::max(std::abs(next), 1e-300);
    obj = next;
    if (change < config.tolerance_delta) {
      r.converged = true;
      r.status = "converged";
      break;
    }
  }
  finalize(r, view, config, objective);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SolveReport baseline_mf(const PartialCsiView& view, const ScenarioConfig& config, BaselineKind kind,
                        const NpcOptions& npc, const FeasibilityOptions& feas) {
  const auto start = std::chrono::steady_clock::now();
  SelectionResult sel = select_users_bues(view, config, BeamMode::kMatchedFilter, feas);
  SolveReport r;
  switch (kind) {
    case BaselineKind::kBues:
      r.admitted = sel.admitted;
      r.w = sel.w;
      r.converged = true;
      r.status = sel.status;
      finalize(r, view, config, PowerObjective::kNetworkPower);
      record(r, smoothed_network_power(r.w, view.clusters(), config, r.admitted), r.w, view.clusters(),
             config.zero_power_threshold_w);
      break;
    case BaselineKind::kNpc:
      r = minimize_npc(sel.w, sel.admitted, view, config, BeamMode::kMatchedFilter, PowerObjective::kNetworkPower,
                       npc);
      break;
    case BaselineKind::kConventional:
      r = minimize_npc(sel.w, sel.admitted, view, config, BeamMode::kMatchedFilter, PowerObjective::kTransmitOnly,
                       npc);
      break;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string report_to_text(const SolveReport& r, const ScenarioConfig& c) {
  std::ostringstream o;
  o.precision(10);
  o << "[config]\n"
    << "num_rrh = " << c.num_rrh << "\nnum_ue = " << c.num_ue << "\nantennas_per_rrh = " << c.antennas_per_rrh
    << "\nnum_subchannels = " << c.num_subchannels << "\nserving_cluster_size = " << c.serving_cluster_size
    << "\ncsi_cluster_size = " << c.csi_cluster_size << "\nper_rrh_power_cap_w = " << c.per_rrh_power_cap_w
    << "\nfronthaul_cap_normalized = " << c.fronthaul_cap_normalized << "\nrate_target = " << c.rate_target
    << "\nrng_seed = " << c.rng_seed << "\n\n[result]\n"
    << "status = " << r.status << "\nconverged = " << (r.converged ? "true" : "false")
    << "\ninner_failure = " << (r.inner_failure ? "true" : "false") << "\niterations = " << r.iterations
    << "\nwall_seconds = " << r.wall_seconds << "\nnetwork_power_w = " << r.network_power
    << "\nunsmoothed_objective_w = " << r.unsmoothed_objective << "\nfeasible = " << (r.feasibility.ok ? "true" : "false")
    << "\nmax_power_ratio = " << r.feasibility.max_power_ratio << "\nmin_rate_ratio = " << r.feasibility.min_rate_ratio
    << "\nmax_fronthaul_ratio = " << r.feasibility.max_fronthaul_ratio << "\n";
  o << "admitted =";
  for (int k : r.admitted) o << ' ' << k;
  o << "\nactive_rrhs =";
  for (int i : r.active.rrhs) o << ' ' << i;
  o << "\nactive_links =";
  for (const auto& [i, k] : r.active.links) o << ' ' << i << ':' << k;
  o << "\n\n[rates]\n";
  for (std::size_t k = 0; k < r.rates.size(); ++k) o << "ue" << k << " = " << r.rates[k] << '\n';
  o << "\n[trace]\niteration,objective_w,active_rrhs,active_links\n";
  for (std::size_t t = 0; t < r.objective_trace.size(); ++t)
    o << t << ',' << r.objective_trace[t] << ',' << r.active_rrh_trace[t] << ',' << r.active_link_trace[t] << '\n';
  return o.str();
}

}  // namespace crannpc
