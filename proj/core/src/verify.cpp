#include "crannpc/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "crannpc/harness.hpp"
#include "crannpc/orchestrator.hpp"
#include "crannpc/rate.hpp"
#include "crannpc/rng.hpp"
#include "crannpc/wmmse.hpp"

namespace crannpc {
namespace {

using Clock = std::chrono::steady_clock;

int scaled(int full, const VerifyOptions& o, int floor = 1) {
  return std::max(floor, static_cast<int>(std::lround(full * o.scale)));
}

struct Instance {
  ScenarioConfig config;
  NetworkScenario scenario;
  ClusterMap clusters;
  ChannelState channels;
};

Instance make_instance(ScenarioConfig c, std::uint64_t seed) {
  Instance in;
  c.rng_seed = seed;
  in.config = c;
  in.scenario = generate_scenario(c);
  in.clusters = build_clusters(in.scenario);
  in.channels = draw_channels(in.scenario, seed);
  return in;
}

// Random complex beams with every RRH at a random fraction of P_max.
BeamformerSet random_beams(const ClusterMap& clusters, const ScenarioConfig& c, Rng& rng) {
  BeamformerSet w(clusters, c.num_subchannels, c.antennas_per_rrh);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int k = 0; k < clusters.num_ue(); ++k)
    for (int n = 0; n < c.num_subchannels; ++n)
      for (Eigen::Index j = 0; j < w.at(k, n).size(); ++j) w.at(k, n)(j) = Complex(g(rng), g(rng));
  for (int i = 0; i < clusters.num_rrh(); ++i) {
    const double p = rrh_transmit_power(w, clusters, i);
    if (p <= 0.0) continue;
    const double s = std::sqrt(u(rng) * c.per_rrh_power_cap_w / p);
    for (int k : clusters.served(i))
      for (int n = 0; n < c.num_subchannels; ++n)
        w.at(k, n).segment(clusters.slot(k, i) * c.antennas_per_rrh, c.antennas_per_rrh) *= s;
  }
  return w;
}

bool nonincreasing(const std::vector<double>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[i - 1] + 1e-9 * std::abs(t[i - 1])) return false;
  return true;
}

void tally(FeasibilityTally& t, const FeasibilityCheck& c, const std::string& where) {
  ++t.runs;
  if (c.ok) return;
  if (t.violations++ == 0) t.first_violation = where + ": " + c.reason;
}

CheckResult finish(CheckResult r, Clock::time_point start, double limit_s) {
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (r.seconds > limit_s) {
    r.passed = false;
    std::ostringstream o;
    o << "; runtime " << r.seconds << " s exceeds " << limit_s << " s";
    r.detail += o.str();
  }
  return r;
}

// Smallest per-link power meeting c(P) <= budget on a single link, where
// c(P) = q (|u|² |h|² P - 2 |u| |h| sqrt(P)). Scalar bisection on sqrt(P).
double single_link_min_power(double q, double u_abs, double h_norm, double budget) {
  auto c = [&](double s) { return q * (u_abs * u_abs * h_norm * h_norm * s * s - 2.0 * u_abs * h_norm * s); };
  double lo = 0.0, hi = 1.0 / (u_abs * h_norm);  // c decreases on [0, hi]
  if (c(hi) > budget) return std::numeric_limits<double>::infinity();
  if (c(lo) <= budget) return 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (c(mid) <= budget ? hi : lo) = mid;
  }
  return hi * hi;
}

}  // namespace

CheckResult check_wmmse_equality(const VerifyOptions& o) {
  const auto start = Clock::now();
  CheckResult r;
  r.name = "rate/WMMSE equality at the optimal receiver and weight";
  const int n_inst = scaled(200, o);
  double worst = 0.0;
  for (int t = 0; t < n_inst; ++t) {
    Rng rng(derive_seed(o.seed, {1, static_cast<std::uint64_t>(t)}));
    const Instance in = make_instance(desk_scale(ScenarioConfig{}), derive_seed(o.seed, {1, 1000u + t}));
    const PartialCsiView view(in.channels, in.clusters, in.config.noise_power_w());
    const BeamformerSet w = random_beams(in.clusters, in.config, rng);
    const AuxiliaryState aux = optimal_auxiliary(w, view);
    double sum_psi = 0.0, sum_rate = 0.0;
    for (int k = 0; k < view.num_ue(); ++k)
      for (int n = 0; n < view.num_subchannels(); ++n) {
        sum_psi += psi(w, view, aux.u_at(k, n), aux.q_at(k, n), k, n);
        sum_rate += rate_lower_bound(w, view, k, n);
      }
    worst = std::max(worst, std::abs(sum_psi - sum_rate) / sum_rate);
  }
  std::ostringstream d;
  d << n_inst << " instances, max relative deviation " << worst << " (limit 1e-9)";
  r.detail = d.str();
  r.passed = worst <= 1e-9;
  return finish(r, start, 10.0);
}

CheckResult check_jensen_bound(const VerifyOptions& o) {
  const auto start = Clock::now();
  CheckResult r;
  r.name = "lower bound below the Monte-Carlo expected rate";
  const int n_inst = scaled(100, o);
  const long samples = 10000;
  int pairs = 0, violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_inst; ++t) {
    Rng rng(derive_seed(o.seed, {2, static_cast<std::uint64_t>(t)}));
    const Instance in = make_instance(desk_scale(ScenarioConfig{}), derive_seed(o.seed, {2, 1000u + t}));
    const PartialCsiView view(in.channels, in.clusters, in.config.noise_power_w());
    const BeamformerSet w = random_beams(in.clusters, in.config, rng);
    for (int k = 0; k < view.num_ue(); ++k)
      for (int n = 0; n < view.num_subchannels(); ++n) {
        const double lb = rate_lower_bound(w, view, k, n);
        const McEstimate mc = rate_monte_carlo(w, view, k, n, samples, derive_seed(o.seed, {2, 7, 1000u + t}));
        ++pairs;
        const double margin = (mc.mean + 3.0 * mc.std_error - lb) / std::max(lb, 1e-12);
        worst = std::min(worst, margin);
        if (mc.mean + 3.0 * mc.std_error < lb - 1e-12 * lb) ++violations;  // rounding when the rate is deterministic
      }
  }
  std::ostringstream d;
  d << pairs << " (k,n) pairs over " << n_inst << " instances at " << samples << " samples, " << violations
    << " with MC + 3 se < lower bound (smallest relative margin " << worst << ")";
  r.detail = d.str();
  r.passed = violations == 0;
  return finish(r, start, 120.0);
}

CheckResult check_closed_form(const VerifyOptions& o) {
  const auto start = Clock::now();
  CheckResult r;
  r.name = "closed-form expected rate against Monte-Carlo on the grid scenario";
  const long samples = std::max<long>(1000, std::lround(100000 * o.scale));
  const std::vector<double> powers = default_sweep(ExperimentKind::kTightness);
  int points = 0, bad = 0;
  double worst_sigma = 0.0, worst_rel = 0.0, sparse_gap = 0.0;
  std::ostringstream fails;
  for (double d_km : {3.0, 1.0}) {
    const std::uint64_t seed = derive_seed(o.seed, {3, static_cast<std::uint64_t>(d_km)});
    for (double p : powers) {
      const TightnessPoint tp = tightness_point(d_km, p, samples, seed);
      ++points;
      const double diff = std::abs(tp.exact - tp.monte_carlo);
      const double sigmas = diff / tp.mc_std_error;
      const double rel = diff / tp.exact;
      worst_sigma = std::max(worst_sigma, sigmas);
      worst_rel = std::max(worst_rel, rel);
      if (sigmas > 3.0 || rel > 0.01) {
        if (bad++ == 0) fails << "; first miss at D=" << d_km << " p=" << p << " dBm";
      }
      if (d_km == 3.0 && p == powers.back()) sparse_gap = (tp.exact - tp.lower_bound) / tp.exact;
    }
  }
  std::ostringstream d;
  d << points << " power points, worst |exact - MC| = " << worst_sigma << " se / " << worst_rel
    << " relative (limits 3 se, 1%), lower-bound gap at the top power for D=3: " << sparse_gap << " (limit 0.05)"
    << fails.str();
  r.detail = d.str();
  r.passed = bad == 0 && sparse_gap <= 0.05 && points >= 20;
  return finish(r, start, 300.0);
}

CheckResult check_inner_kkt(const VerifyOptions& o) {
  const auto start = Clock::now();
  CheckResult r;
  r.name = "inner convex solve: KKT residuals, weak duality, single-link oracle";
  const int n_inst = scaled(100, o);
  int failures = 0, weak = 0;
  double worst_res = 0.0, worst_slack = 0.0, worst_gap = 0.0;
  std::string first;
  for (int t = 0; t < n_inst; ++t) {
    Rng rng(derive_seed(o.seed, {7, static_cast<std::uint64_t>(t)}));
    const Instance in = make_instance(desk_scale(ScenarioConfig{}), derive_seed(o.seed, {7, 1000u + t}));
    const PartialCsiView view(in.channels, in.clusters, in.config.noise_power_w());
    std::vector<int> subset;
    std::bernoulli_distribution pick(0.6);
    for (int k = 0; k < view.num_ue(); ++k)
      if (pick(rng)) subset.push_back(k);
    if (subset.empty()) subset.push_back(0);
    BeamformerSet w_t = canonical_init(view, in.config, subset);
    w_t.scale(std::sqrt(std::uniform_real_distribution<double>(0.2, 1.0)(rng)));
    const AuxiliaryState aux = optimal_auxiliary(w_t, view);
    const SCACoefficients co = linearize(w_t, view, in.config, subset);
    SubproblemSpec spec;
    spec.view = &view;
    spec.config = &in.config;
    spec.admitted = subset;
    spec.mode = t % 2 ? BeamMode::kMatchedFilter : BeamMode::kJoint;
    spec.aux = &aux;
    spec.coeffs = &co;
    spec.rate_targets.assign(view.num_ue(), 0.0);
    std::uniform_real_distribution<double> frac(0.3, 0.95);
    for (int k : subset) spec.rate_targets[k] = frac(rng) * rate_lower_bound_total(w_t, view, k);
    const SubproblemResult res = solve_p8(spec, DualState{});
    double f_t = 0.0;
    for (int k : subset)
      for (int i : in.clusters.serving(k)) f_t += co.kappa_at(i, k) * link_power(w_t, in.clusters, i, k);
    worst_res = std::max(worst_res, res.kkt.max_primal_residual);
    worst_slack = std::max(worst_slack, res.kkt.max_slackness);
    worst_gap = std::max(worst_gap, std::abs(res.kkt.duality_gap));
    if (res.kkt.dual_value > f_t * (1.0 + 1e-12)) ++weak;
    if (res.kkt.max_primal_residual > 1e-6 || res.kkt.max_slackness > 1e-6 || res.kkt.dual_value > f_t * (1.0 + 1e-12)) {
      if (failures++ == 0) first = "instance " + std::to_string(t);
    }
  }

  // Single link, single subchannel: the optimum is the smallest matched-filter power meeting the target.
  const int n_single = scaled(20, o);
  double worst_single = 0.0;
  for (int t = 0; t < n_single; ++t) {
    ScenarioConfig c;
    c.num_rrh = 1;
    c.num_ue = 1;
    c.num_subchannels = 1;
    c.serving_cluster_size = 1;
    c.csi_cluster_size = 1;
    c.area_half_width_m = 300.0;
    c.antennas_per_rrh = 1 + t % 3;
    const Instance in = make_instance(c, derive_seed(o.seed, {7, 5000u + t}));
    const PartialCsiView view(in.channels, in.clusters, c.noise_power_w());
    BeamformerSet w_t = canonical_init(view, c, {0});
    w_t.scale(std::sqrt(0.01 + 0.5 * (t % 5) / 5.0));
    const AuxiliaryState aux = optimal_auxiliary(w_t, view);
    const SCACoefficients co = linearize(w_t, view, c, {0});
    SubproblemSpec spec;
    spec.view = &view;
    spec.config = &c;
    spec.admitted = {0};
    spec.aux = &aux;
    spec.coeffs = &co;
    const double target = (0.4 + 0.1 * (t % 5)) * rate_lower_bound_total(w_t, view, 0);
    spec.rate_targets = {target};
    const SubproblemResult res = solve_p8(spec, DualState{});
    const double q = aux.q_at(0, 0);
    const Complex u = aux.u_at(0, 0);
    const double h = view.own_channel(0, 0).norm();
    const double omega = std::log(q) - q * c.noise_power_w() * std::norm(u) - q + 1.0;
    const double p_star = single_link_min_power(q, std::abs(u), h, omega - target * std::log(2.0));
    const double p_solver = link_power(res.w, in.clusters, 0, 0);
    worst_single = std::max(worst_single, std::abs(p_solver - p_star) / p_star);
  }
  std::ostringstream d;
  d << n_inst << " random instances: max primal residual " << worst_res << ", max slackness " << worst_slack
    << ", max duality gap " << worst_gap << " (limits 1e-6), weak duality violations " << weak << "; " << n_single
    << " single-link instances, max relative deviation from bisection " << worst_single << " (limit 1e-6)";
  if (!first.empty()) d << "; first failure at " << first;
  r.detail = d.str();
  r.passed = failures == 0 && worst_single <= 1e-6;
  return finish(r, start, 300.0);
}

CheckResult check_descent(const VerifyOptions& o, FeasibilityTally& t) {
  const auto start = Clock::now();
  CheckResult r;
  r.name = "successive approximation descent and convergence";
  const int n_inst = scaled(50, o);
  int used = 0, monotone = 0, fast = 0, skipped = 0;
  int max_it = 0;
  for (int s = 0; used < n_inst && s < 50 * n_inst; ++s) {
    const Instance in = make_instance(desk_scale(ScenarioConfig{}), derive_seed(o.seed, {4, static_cast<std::uint64_t>(s)}));
    const PartialCsiView view(in.channels, in.clusters, in.config.noise_power_w());
    const SelectionResult sel = select_users_bues(view, in.config, BeamMode::kJoint);
    tally(t, check_feasibility(sel.w, view, in.config, sel.admitted), "descent admission seed " + std::to_string(s));
    if (sel.admitted.empty()) {
      ++skipped;
      continue;
    }
    ++used;
    const SolveReport rep =
        minimize_npc(sel.w, sel.admitted, view, in.config, BeamMode::kJoint, PowerObjective::kNetworkPower);
    tally(t, rep.feasibility, "descent output seed " + std::to_string(s));
    if (nonincreasing(rep.objective_trace)) ++monotone;
    if (rep.converged && rep.iterations <= 50) ++fast;
    max_it = std::max(max_it, rep.iterations);
  }
  std::ostringstream d;
  d << used << " instances with a nonempty admitted set (" << skipped << " empty skipped): nonincreasing trace on "
    << monotone << ", converged within 50 iterations on " << fast << " (need 90%), max iterations " << max_it;
  r.detail = d.str();
  r.passed = used == n_inst && monotone == used && fast >= 0.9 * used;
  return finish(r, start, 600.0);
}

CheckResult check_selection(const VerifyOptions& o, FeasibilityTally& t) {
  const auto start = Clock::now();
  CheckResult r;
  r.name = "bisection selection against exhaustive search";
  const int n_inst = scaled(50, o);
  const int K = 6;
  const int call_cap = static_cast<int>(std::ceil(std::log2(1.0 + K))) + 1;
  int dominated = 0, within = 0, calls_ok = 0, exact = 0;
  for (int s = 0; s < n_inst; ++s) {
    ScenarioConfig c;
    c.num_rrh = 8;
    c.num_ue = K;
    c.num_subchannels = 2;
    c.antennas_per_rrh = 2;
    const Instance in = make_instance(c, derive_seed(o.seed, {6, static_cast<std::uint64_t>(s)}));
    const PartialCsiView view(in.channels, in.clusters, c.noise_power_w());
    const SelectionResult b = select_users_bues(view, c, BeamMode::kJoint);
    const SelectionResult e = select_users_exhaustive(view, c, BeamMode::kJoint);
    tally(t, check_feasibility(b.w, view, c, b.admitted), "selection (bisection) seed " + std::to_string(s));
    tally(t, check_feasibility(e.w, view, c, e.admitted), "selection (exhaustive) seed " + std::to_string(s));
    if (b.admitted.size() <= e.admitted.size()) ++dominated;
    if (b.admitted.size() + 1 >= e.admitted.size()) ++within;
    if (b.admitted.size() == e.admitted.size()) ++exact;
    if (b.p10_calls <= call_cap) ++calls_ok;
  }
  std::ostringstream d;
  d << n_inst << " instances: |bisection| <= |exhaustive| on " << dominated << ", within one on " << within
    << " (need 90%), equal on " << exact << ", common-fraction solves <= " << call_cap << " on " << calls_ok;
  r.detail = d.str();
  r.passed = dominated == n_inst && within >= 0.9 * n_inst && calls_ok == n_inst;
  return finish(r, start, 1200.0);
}

CheckResult check_output_feasibility(const FeasibilityTally& t) {
  CheckResult r;
  r.name = "feasibility of every returned solution";
  std::ostringstream d;
  d << t.runs << " returned solutions checked (power cap, rate >= R_min (1 - 1e-6), thresholded fronthaul), "
    << t.violations << " violations";
  if (t.violations) d << "; first: " << t.first_violation;
  r.detail = d.str();
  r.passed = t.violations == 0 && t.runs > 0;
  return r;
}

namespace {

std::vector<double> metric_means(const ExperimentResult& res, const std::string& metric) {
  std::vector<double> v;
  for (const auto& row : res.summary.rows)
    if (row[1] == metric) v.push_back(row[2] == "NA" ? std::nan("") : std::stod(row[2]));
  return v;
}

bool nondecreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] >= v[i - 1])) return false;
  return true;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream o;
  o.precision(4);
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? " " : "") << v[i];
  return o.str();
}

}  // namespace

CheckResult check_trends(const VerifyOptions& o) {
  const auto start = Clock::now();
  CheckResult r;
  r.name = "qualitative trends at desk scale";
  ExperimentSpec spec;
  spec.base = desk_scale(ScenarioConfig{});
  spec.trials = scaled(10, o, 2);
  spec.seed = derive_seed(o.seed, {8});
  spec.threads = 0;
  bool ok = true;
  std::ostringstream d;
  int failed = 0;
  for (ExperimentKind kind : {ExperimentKind::kAdmittedVsX, ExperimentKind::kAdmittedVsY, ExperimentKind::kAdmittedVsCmax}) {
    spec.kind = kind;
    const ExperimentResult res = run_experiment(spec);
    failed += res.failed_trials + res.invariant_failures;
    for (const char* m : {"joint_bues", "mf_bues"}) {
      const auto means = metric_means(res, m);
      const bool mono = nondecreasing(means);
      ok = ok && mono;
      d << to_string(kind) << " " << m << " [" << join(means) << "]" << (mono ? "" : " NOT nondecreasing") << "; ";
    }
  }
  spec.kind = ExperimentKind::kNpcVsCmax;
  {
    const ExperimentResult res = run_experiment(spec);
    failed += res.failed_trials + res.invariant_failures;
    const auto joint = metric_means(res, "joint_npc_w"), mf = metric_means(res, "mf_npc_w");
    const auto jc = metric_means(res, "joint_conven_w"), mc = metric_means(res, "mf_conven_w");
    bool order = true;
    for (std::size_t i = 0; i < joint.size(); ++i)
      order = order && joint[i] <= mf[i] && mf[i] <= jc[i] && mf[i] <= mc[i];
    ok = ok && order;
    d << "NPC means over C_max: joint [" << join(joint) << "], MF [" << join(mf) << "], conventional joint [" << join(jc)
      << "], conventional MF [" << join(mc) << "]" << (order ? "" : " ordering violated") << "; ";
  }
  spec.kind = ExperimentKind::kConvergenceTrace;
  {
    const ExperimentResult res = run_experiment(spec);
    failed += res.failed_trials + res.invariant_failures;
    const auto init = metric_means(res, "initial_links"), fin = metric_means(res, "final_links");
    const bool fewer = res.invariant_failures == 0 && !init.empty() && fin[0] <= init[0];
    ok = ok && fewer;
    d << "active links " << join(init) << " -> " << join(fin) << (fewer ? "" : " (increase)") << "; ";
  }
  d << spec.trials << " trials per point, " << failed << " failed or invariant-violating trials";
  ok = ok && failed == 0;
  r.detail = d.str();
  r.passed = ok;
  return finish(r, start, 1800.0);
}

std::vector<CheckResult> run_all_checks(const VerifyOptions& o, const std::function<void(const CheckResult&)>& on_result) {
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  add(check_wmmse_equality(o));
  add(check_jensen_bound(o));
  add(check_closed_form(o));
  FeasibilityTally t;
  add(check_descent(o, t));
  // feasibility is reported after both of the runs it covers
  CheckResult selection = check_selection(o, t);
  add(check_output_feasibility(t));
  add(selection);
  add(check_inner_kkt(o));
  add(check_trends(o));
  return out;
}

std::string format_check(const CheckResult& r) {
  std::ostringstream o;
  o.precision(3);
  o << (r.passed ? "PASS" : "FAIL") << "  " << r.name << " (" << std::fixed << r.seconds << " s): " << r.detail;
  return o.str();
}

}  // namespace crannpc
