#pragma once

#include <string>
#include <vector>

#include "crannpc/beams.hpp"
#include "crannpc/channel.hpp"
#include "crannpc/wmmse.hpp"

namespace crannpc {

double smooth_indicator(double x, double theta);
double smooth_indicator_derivative(double x, double theta);

// kJoint optimizes full complex beams; kMatchedFilter fixes each per-link
// direction to h_{i,k}ᴴ/‖h_{i,k}‖ and optimizes one real amplitude per link.
enum class BeamMode { kJoint, kMatchedFilter };

// kNetworkPower: smoothed NPC weights. kTransmitOnly: eta * transmit power,
// used by the conventional baselines.
enum class PowerObjective { kNetworkPower, kTransmitOnly };

struct SCACoefficients {
  int num_rrh = 0;
  int num_ue = 0;
  std::vector<double> beta;              // per RRH
  std::vector<double> chi;               // per (i,k), row-major i*K + k
  std::vector<double> kappa;             // per (i,k)
  std::vector<double> tau;               // per (i,k)
  std::vector<double> fronthaul_budget;  // adjusted C_i,max(t)
  std::vector<char> fronthaul_imposed;   // false when the link count can never exceed the cap

  double chi_at(int i, int k) const { return chi[static_cast<std::size_t>(i) * num_ue + k]; }
  double kappa_at(int i, int k) const { return kappa[static_cast<std::size_t>(i) * num_ue + k]; }
  double tau_at(int i, int k) const { return tau[static_cast<std::size_t>(i) * num_ue + k]; }
};

// Tangent coefficients of the smoothed indicators at w_t, over the admitted UEs.
SCACoefficients linearize(const BeamformerSet& w_t, const PartialCsiView& view, const ScenarioConfig& config,
                          const std::vector<int>& admitted, PowerObjective objective = PowerObjective::kNetworkPower);

// Smoothed NPC without the sleep constant (the objective minimize_npc descends).
double smoothed_network_power(const BeamformerSet& w, const ClusterMap& clusters, const ScenarioConfig& config,
                              const std::vector<int>& admitted,
                              PowerObjective objective = PowerObjective::kNetworkPower);

struct DualState {
  std::vector<double> lambda;  // per RRH
  std::vector<double> mu;      // per RRH
  std::vector<double> nu;      // per UE

  DualState() = default;
  DualState(int num_rrh, int num_ue) : lambda(num_rrh, 0.0), mu(num_rrh, 0.0), nu(num_ue, 0.0) {}
  bool empty() const { return nu.empty(); }
};

// How the per-UE rate constraints enter the subproblem.
enum class RateTerm {
  kTargets,         // Σ_n Ψ_k >= target_k (P8)
  kPerUeFraction,   // Σ_n Ψ_k >= φ_k² R_k, minimize Σ (φ_k - 1)² (P9)
  kCommonFraction,  // Σ_n Ψ_k >= φ² R_k, minimize (φ - 1)² (P10)
};

struct SubproblemSpec {
  const PartialCsiView* view = nullptr;
  const ScenarioConfig* config = nullptr;
  std::vector<int> admitted;
  BeamMode mode = BeamMode::kJoint;
  const AuxiliaryState* aux = nullptr;
  const SCACoefficients* coeffs = nullptr;
  RateTerm rate_term = RateTerm::kTargets;
  std::vector<double> rate_targets;  // per UE, bit/s/Hz (targets for P8, R_k for the fraction forms)
  // When positive, the beam objective is regularization * Σ‖w‖² / P_max instead of Σ w̄ᴴG w̄.
  double regularization = 0.0;
};

enum class DualMethod { kProjectedNewton, kProjectedGradient };

struct DualSolverOptions {
  DualMethod method = DualMethod::kProjectedNewton;
  int max_iterations = 5000;
  double residual_tolerance = 1e-10;    // constraint residuals relative to budgets
  double slackness_tolerance = 1e-10;   // y_j |r_j| relative to the objective scale
  double improvement_tolerance = 1e-8;  // projected-gradient stall test on the dual value
  bool record_trace = false;
};

struct DualTraceRow {
  int iteration = 0;
  double dual_value = 0.0;
  double primal_residual = 0.0;
  double slackness = 0.0;
};

struct KktReport {
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;
  double dual_value = 0.0;
  double primal_objective = 0.0;
  double max_primal_residual = 0.0;  // max_j max(0, r_j) / budget_j
  double max_slackness = 0.0;        // max_j y_j |r_j| / objective scale
  double duality_gap = 0.0;          // primal - dual, relative to objective scale
  double max_condition = 0.0;        // largest estimated condition number of J
  std::vector<DualTraceRow> trace;
};

struct SubproblemResult {
  BeamformerSet w;
  DualState duals;
  KktReport kkt;
};

// Dual of the per-iteration convex subproblem. Coordinates: each (k,n) beam is
// D_{k,n} x with D = I (joint) or the matched-filter directions (real x).
class DualProblem {
 public:
  explicit DualProblem(const SubproblemSpec& spec);

  int dimension() const { return dim_; }
  std::vector<double> pack(const DualState& duals) const;
  DualState unpack(const std::vector<double>& y) const;
  // Budget scale per dual coordinate (P_max, C_max or the rate target in nats).
  const std::vector<double>& budgets() const { return budget_; }

  // J_k^(n) in coordinate space (equal to the beam space for the joint mode).
  CMatrix build_J(int k, int n, const std::vector<double>& y) const;

  struct Evaluation {
    double value = 0.0;           // g(y)
    std::vector<double> residual; // ∇g(y) = constraint residuals at the Lagrangian minimizer
    RMatrix hessian;              // filled when requested
    std::vector<CVector> x;       // per block coordinates
    double objective = 0.0;       // primal objective at x
    double max_condition = 0.0;
  };
  Evaluation evaluate(const std::vector<double>& y, bool with_hessian) const;
  BeamformerSet beams(const Evaluation& e) const;
  // Upper bound on the optimal value of any feasible instance, used to certify infeasibility.
  double value_upper_bound() const { return upper_bound_; }

 private:
  struct SlotInfo {
    int rrh = -1;
    int start = 0;
    int len = 0;
    int lambda_index = -1;
    int mu_index = -1;
    double tau = 0.0;
  };
  struct Block {
    int ue = 0;
    int admitted_index = 0;
    int n = 0;
    int dim = 0;
    CMatrix basis;            // empty for the joint mode
    CVector h;                // (h̄_kk D)ᴴ
    RVector g_diag;           // objective weights
    std::vector<SlotInfo> slots;
    std::vector<CMatrix> cov; // per admitted index: interference covariance towards that UE (empty for self)
    Complex u;
    double q = 1.0;
  };

  CMatrix assemble_J(const Block& b, const std::vector<double>& y) const;
  double rate_term_value(const std::vector<double>& y) const;

  SubproblemSpec spec_;
  std::vector<Block> blocks_;
  std::vector<int> lambda_rrh_, mu_rrh_;  // dual coordinate -> RRH
  std::vector<int> nu_ue_;                // dual coordinate -> UE
  std::vector<int> nu_index_;             // UE -> dual coordinate or -1
  std::vector<double> budget_;
  std::vector<double> psi_constant_;      // per admitted index, nats
  int dim_ = 0;
  int num_lambda_ = 0, num_mu_ = 0;
  double upper_bound_ = 0.0;
};

// Solves the subproblem's dual; infeasibility is reported when the dual value
// exceeds value_upper_bound().
SubproblemResult solve_subproblem(const SubproblemSpec& spec, const DualState& warm_start,
                                  const DualSolverOptions& options = {});

// Convenience wrappers with the P8 names.
CMatrix build_J(const SubproblemSpec& spec, const DualState& duals, int k, int n);
BeamformerSet recover_primal(const SubproblemSpec& spec, const DualState& duals);
double dual_value(const SubproblemSpec& spec, const DualState& duals);
SubproblemResult solve_p8(const SubproblemSpec& spec, const DualState& warm_start,
                          const DualSolverOptions& options = {});

}  // namespace crannpc
