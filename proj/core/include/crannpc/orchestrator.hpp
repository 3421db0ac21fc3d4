#pragma once

#include <string>
#include <vector>

#include "crannpc/beams.hpp"
#include "crannpc/channel.hpp"
#include "crannpc/subsolver.hpp"

namespace crannpc {

// Outcome of the true (unsmoothed) constraint check on a set of beams.
struct FeasibilityCheck {
  bool ok = false;
  double max_power_ratio = 0.0;      // max_i P_i / P_max
  double min_rate_ratio = 0.0;       // min over admitted k of r̃_k / R_min (1 when none admitted)
  double max_fronthaul_ratio = 0.0;  // max_i thresholded link count * R_min / C_max
  std::string reason;                // empty when ok
};

// C3 up to rounding, r̃_k >= R_min (1 - 1e-6) for admitted UEs, and the
// thresholded fronthaul constraint. UEs outside `admitted` must have zero beams.
FeasibilityCheck check_feasibility(const BeamformerSet& w, const PartialCsiView& view, const ScenarioConfig& config,
                                   const std::vector<int>& admitted);

// Scales every RRH above P_max back onto the cap.
void clip_power(BeamformerSet& w, const ClusterMap& clusters, double p_max);

// Smallest common scaling s in (0, 1] of all beams that keeps `w` feasible for
// `subset`. Every lower-bound SINR grows with s, so bisection applies. Hands
// the NPC iteration a start near the rate targets instead of near P_max, where the
// rate surrogate is so curved that each iteration moves very little.
BeamformerSet back_off(const BeamformerSet& w, const std::vector<int>& subset, const PartialCsiView& view,
                       const ScenarioConfig& config);

// History-independent starting point for the feasibility solvers: matched-filter
// directions, the strongest links per RRH that fit the fronthaul cap, and P_max
// split evenly across kept links and subchannels.
BeamformerSet canonical_init(const PartialCsiView& view, const ScenarioConfig& config, const std::vector<int>& subset);

// The fraction loops only steer towards a point worth certifying, so their inner
// solves run looser than the certification solve.
inline DualSolverOptions fraction_dual_defaults() {
  DualSolverOptions o;
  o.max_iterations = 300;
  o.residual_tolerance = 1e-9;
  o.slackness_tolerance = 1e-9;
  return o;
}

struct FeasibilityOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-4;
  double regularization = 1e-10;
  DualSolverOptions dual = fraction_dual_defaults();
  DualSolverOptions certify_dual;
};

struct P9Result {
  std::vector<double> phi;  // per UE
  BeamformerSet w;
  int iterations = 0;
  std::vector<double> objective_trace;
};

struct P10Result {
  double phi = 0.0;
  bool supportable = false;
  BeamformerSet w;  // certified beams when supportable
  int iterations = 0;
};

P9Result solve_feasibility_p9(const PartialCsiView& view, const ScenarioConfig& config, BeamMode mode,
                              const FeasibilityOptions& options = {});

// Common-fraction feasibility for `subset`. Supportable iff a P8 solve from the
// final beams yields beams that pass check_feasibility. The loop starts from
// `start` restricted to the subset when given, else from canonical_init.
P10Result solve_feasibility_p10(const std::vector<int>& subset, const PartialCsiView& view,
                                const ScenarioConfig& config, BeamMode mode, const FeasibilityOptions& options = {},
                                const BeamformerSet* start = nullptr);

// Solves P8 (targets slightly above R_min) linearized at w. On success w holds
// the new beams, which pass check_feasibility; otherwise w is untouched.
bool certify_supportable(const std::vector<int>& subset, const PartialCsiView& view, const ScenarioConfig& config,
                         BeamMode mode, const DualSolverOptions& dual, BeamformerSet& w);

struct SelectionResult {
  std::vector<int> admitted;  // ascending
  BeamformerSet w;
  std::vector<double> phi;    // P9 fractions (BUES only)
  int p10_calls = 0;
  std::string status;
};

SelectionResult select_users_bues(const PartialCsiView& view, const ScenarioConfig& config, BeamMode mode,
                                  const FeasibilityOptions& options = {});

inline constexpr int kExhaustiveMaxUe = 8;

// Largest supportable subset; ties go to the larger total lower-bound rate.
SelectionResult select_users_exhaustive(const PartialCsiView& view, const ScenarioConfig& config, BeamMode mode,
                                        const FeasibilityOptions& options = {});

struct NpcOptions {
  int max_iterations = 200;
  DualSolverOptions dual;
};

struct SolveReport {
  std::vector<double> objective_trace;  // smoothed objective per iterate, W
  std::vector<int> active_rrh_trace;
  std::vector<int> active_link_trace;
  BeamformerSet w;
  std::vector<int> admitted;
  ActiveSets active;
  std::vector<double> rates;    // per UE lower-bound rate, bit/s/Hz
  double network_power = 0.0;   // true NPC at the final beams, sleep power included
  double unsmoothed_objective = 0.0;
  FeasibilityCheck feasibility;
  int iterations = 0;
  bool converged = false;
  bool inner_failure = false;
  std::string status;
  double wall_seconds = 0.0;
};

// Successive convex approximation on the smoothed NPC starting from feasible w0.
// kTransmitOnly reproduces the conventional baseline: every RRH in an admitted
// UE's serving set is treated as active when reporting network_power.
SolveReport minimize_npc(const BeamformerSet& w0, const std::vector<int>& admitted, const PartialCsiView& view,
                         const ScenarioConfig& config, BeamMode mode, PowerObjective objective,
                         const NpcOptions& options = {});

// NPC with every RRH serving an admitted UE counted as active.
double conventional_network_power(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config,
                                  const std::vector<int>& admitted, const std::vector<double>& rates);

enum class BaselineKind { kBues, kNpc, kConventional };

// Matched-filter pipelines: admission only, admission + NPC minimization, or
// admission + transmit-power minimization.
SolveReport baseline_mf(const PartialCsiView& view, const ScenarioConfig& config, BaselineKind kind,
                        const NpcOptions& npc = {}, const FeasibilityOptions& feas = {});

std::string report_to_text(const SolveReport& report, const ScenarioConfig& config);

}  // namespace crannpc
