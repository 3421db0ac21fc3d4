#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "crannpc/log.hpp"
#include "crannpc/subsolver.hpp"

namespace crannpc {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kFronthaulMargin = 1e-9;

void realify(CVector& v) { v = v.real().cast<Complex>(); }

}  // namespace

DualProblem::DualProblem(const SubproblemSpec& spec) : spec_(spec) {
  if (!spec.view || !spec.config || !spec.aux || !spec.coeffs) throw PreconditionError("subproblem spec is incomplete");
  const auto& view = *spec.view;
  const auto& cfg = *spec.config;
  const auto& co = *spec.coeffs;
  const auto& aux = *spec.aux;
  const auto& clusters = view.clusters();
  const int I = view.num_rrh(), K = view.num_ue(), N = view.num_subchannels(), M = view.antennas();
  std::sort(spec_.admitted.begin(), spec_.admitted.end());
  spec_.admitted.erase(std::unique(spec_.admitted.begin(), spec_.admitted.end()), spec_.admitted.end());
  const auto& adm = spec_.admitted;
  if (static_cast<int>(spec_.rate_targets.size()) != K) throw PreconditionError("rate_targets must have one entry per UE");

  std::vector<int> adm_index(K, -1);
  for (std::size_t a = 0; a < adm.size(); ++a) adm_index[adm[a]] = static_cast<int>(a);

  std::vector<int> lambda_of(I, -1), mu_of(I, -1);
  for (int i = 0; i < I; ++i) {
    bool any = false;
    for (int k : clusters.served(i)) any = any || adm_index[k] >= 0;
    if (!any) continue;
    lambda_of[i] = static_cast<int>(lambda_rrh_.size());
    lambda_rrh_.push_back(i);
  }
  for (int i = 0; i < I; ++i) {
    if (lambda_of[i] < 0 || !co.fronthaul_imposed[i]) continue;
    mu_of[i] = static_cast<int>(mu_rrh_.size());
    mu_rrh_.push_back(i);
  }
  num_lambda_ = static_cast<int>(lambda_rrh_.size());
  num_mu_ = static_cast<int>(mu_rrh_.size());
  nu_index_.assign(K, -1);
  for (std::size_t a = 0; a < adm.size(); ++a) {
    nu_index_[adm[a]] = num_lambda_ + num_mu_ + static_cast<int>(a);
    nu_ue_.push_back(adm[a]);
  }
  dim_ = num_lambda_ + num_mu_ + static_cast<int>(adm.size());

  budget_.reserve(dim_);
  for (int j = 0; j < num_lambda_; ++j) budget_.push_back(cfg.per_rrh_power_cap_w);
  for (int j = 0; j < num_mu_; ++j) budget_.push_back(cfg.fronthaul_cap());
  for (int k : adm) budget_.push_back(std::max(spec_.rate_targets[k], 1e-3) * kLn2);

  const double noise = view.noise_power();
  for (int k : adm) {
    double c = 0.0;
    for (int n = 0; n < N; ++n) {
      const double q = aux.q_at(k, n);
      c += std::log(q) - q * noise * std::norm(aux.u_at(k, n)) - q + 1.0;
    }
    psi_constant_.push_back(c);
  }

  const bool mf = spec_.mode == BeamMode::kMatchedFilter;
  for (std::size_t a = 0; a < adm.size(); ++a) {
    const int k = adm[a];
    const auto& rrhs = clusters.serving(k);
    const int X = static_cast<int>(rrhs.size());
    for (int n = 0; n < N; ++n) {
      Block b;
      b.ue = k;
      b.admitted_index = static_cast<int>(a);
      b.n = n;
      b.dim = mf ? X : X * M;
      b.u = aux.u_at(k, n);
      b.q = aux.q_at(k, n);
      const CRowVector& hrow = view.own_channel(k, n);
      if (mf) {
        b.basis = CMatrix::Zero(X * M, X);
        for (int s = 0; s < X; ++s) {
          const CVector hs = hrow.segment(s * M, M).adjoint();
          b.basis.block(s * M, s, M, 1) = hs / hs.norm();
        }
        b.h = (hrow * b.basis).adjoint();
        realify(b.h);
      } else {
        b.h = hrow.adjoint();
      }
      b.g_diag.resize(b.dim);
      for (int s = 0; s < X; ++s) {
        SlotInfo si;
        si.rrh = rrhs[s];
        si.start = mf ? s : s * M;
        si.len = mf ? 1 : M;
        si.lambda_index = lambda_of[si.rrh];
        si.mu_index = mu_of[si.rrh] >= 0 ? num_lambda_ + mu_of[si.rrh] : -1;
        si.tau = co.tau_at(si.rrh, k);
        const double weight =
            spec_.regularization > 0.0 ? spec_.regularization / cfg.per_rrh_power_cap_w : co.kappa_at(si.rrh, k);
        b.g_diag.segment(si.start, si.len).setConstant(weight);
        b.slots.push_back(si);
      }
      b.cov.resize(adm.size());
      for (std::size_t a2 = 0; a2 < adm.size(); ++a2) {
        if (a2 == a) continue;
        const CMatrix& A = view.covariance(k, adm[a2], n);
        if (mf) {
          b.cov[a2] = (b.basis.adjoint() * A * b.basis).real().cast<Complex>();
        } else {
          b.cov[a2] = A;
        }
      }
      blocks_.push_back(std::move(b));
    }
  }

  if (spec_.regularization > 0.0) {
    const double fraction_max = spec_.rate_term == RateTerm::kCommonFraction ? 1.0 : static_cast<double>(adm.size());
    upper_bound_ = fraction_max + spec_.regularization * num_lambda_;
  } else {
    for (int i : lambda_rrh_) {
      double kmax = 0.0;
      for (int k : clusters.served(i))
        if (adm_index[k] >= 0) kmax = std::max(kmax, co.kappa_at(i, k));
      upper_bound_ += kmax * cfg.per_rrh_power_cap_w;
    }
    if (spec_.rate_term != RateTerm::kTargets) upper_bound_ += static_cast<double>(adm.size());
  }
}

std::vector<double> DualProblem::pack(const DualState& d) const {
  std::vector<double> y(dim_, 0.0);
  if (d.empty()) return y;
  for (int j = 0; j < num_lambda_; ++j) y[j] = std::max(0.0, d.lambda.at(lambda_rrh_[j]));
  for (int j = 0; j < num_mu_; ++j) y[num_lambda_ + j] = std::max(0.0, d.mu.at(mu_rrh_[j]));
  for (std::size_t a = 0; a < nu_ue_.size(); ++a) y[num_lambda_ + num_mu_ + a] = std::max(0.0, d.nu.at(nu_ue_[a]));
  return y;
}

DualState DualProblem::unpack(const std::vector<double>& y) const {
  DualState d(spec_.view->num_rrh(), spec_.view->num_ue());
  for (int j = 0; j < num_lambda_; ++j) d.lambda[lambda_rrh_[j]] = y[j];
  for (int j = 0; j < num_mu_; ++j) d.mu[mu_rrh_[j]] = y[num_lambda_ + j];
  for (std::size_t a = 0; a < nu_ue_.size(); ++a) d.nu[nu_ue_[a]] = y[num_lambda_ + num_mu_ + a];
  return d;
}

CMatrix DualProblem::assemble_J(const Block& b, const std::vector<double>& y) const {
  CMatrix J = CMatrix::Zero(b.dim, b.dim);
  J.diagonal() = b.g_diag.cast<Complex>();
  for (const auto& s : b.slots) {
    double add = 0.0;
    if (s.lambda_index >= 0) add += y[s.lambda_index];
    if (s.mu_index >= 0) add += y[s.mu_index] * s.tau;
    J.diagonal().segment(s.start, s.len).array() += add;
  }
  const double nu = y[nu_index_[b.ue]];
  if (nu > 0.0) J.noalias() += (nu * b.q * std::norm(b.u)) * (b.h * b.h.adjoint());
  const auto& aux = *spec_.aux;
  for (std::size_t a2 = 0; a2 < b.cov.size(); ++a2) {
    if (static_cast<int>(a2) == b.admitted_index) continue;
    const int k2 = spec_.admitted[a2];
    const double nu2 = y[nu_index_[k2]];
    if (nu2 <= 0.0) continue;
    J.noalias() += (nu2 * aux.q_at(k2, b.n) * std::norm(aux.u_at(k2, b.n))) * b.cov[a2];
  }
  return J;
}

CMatrix DualProblem::build_J(int k, int n, const std::vector<double>& y) const {
  for (const auto& b : blocks_)
    if (b.ue == k && b.n == n) return assemble_J(b, y);
  throw PreconditionError("build_J: UE is not admitted in this subproblem");
}

double DualProblem::rate_term_value(const std::vector<double>& y) const {
  double v = 0.0;
  switch (spec_.rate_term) {
    case RateTerm::kTargets:
      for (int k : spec_.admitted) v += y[nu_index_[k]] * spec_.rate_targets[k] * kLn2;
      break;
    case RateTerm::kPerUeFraction:
      for (int k : spec_.admitted) {
        const double a = y[nu_index_[k]] * spec_.rate_targets[k] * kLn2;
        v += a / (1.0 + a);
      }
      break;
    case RateTerm::kCommonFraction: {
      double a = 0.0;
      for (int k : spec_.admitted) a += y[nu_index_[k]] * spec_.rate_targets[k] * kLn2;
      v = a / (1.0 + a);
      break;
    }
  }
  return v;
}

DualProblem::Evaluation DualProblem::evaluate(const std::vector<double>& y, bool with_hessian) const {
  const auto& cfg = *spec_.config;
  const auto& co = *spec_.coeffs;
  const auto& aux = *spec_.aux;
  const bool mf = spec_.mode == BeamMode::kMatchedFilter;
  Evaluation e;
  e.residual.assign(dim_, 0.0);
  if (with_hessian) e.hessian = RMatrix::Zero(dim_, dim_);
  double value = 0.0;

  for (int j = 0; j < num_lambda_; ++j) {
    value -= y[j] * cfg.per_rrh_power_cap_w;
    e.residual[j] -= cfg.per_rrh_power_cap_w;
  }
  for (int j = 0; j < num_mu_; ++j) {
    // The margin keeps the next linearization strictly feasible at this solution.
    const double c = co.fronthaul_budget[mu_rrh_[j]] - kFronthaulMargin * cfg.fronthaul_cap();
    value -= y[num_lambda_ + j] * c;
    e.residual[num_lambda_ + j] -= c;
  }
  for (std::size_t a = 0; a < nu_ue_.size(); ++a) {
    const int j = num_lambda_ + num_mu_ + static_cast<int>(a);
    value -= y[j] * psi_constant_[a];
    e.residual[j] -= psi_constant_[a];
  }

  // Rate term and the fraction part of the primal objective.
  value += rate_term_value(y);
  switch (spec_.rate_term) {
    case RateTerm::kTargets:
      for (int k : spec_.admitted) e.residual[nu_index_[k]] += spec_.rate_targets[k] * kLn2;
      break;
    case RateTerm::kPerUeFraction:
      for (int k : spec_.admitted) {
        const int j = nu_index_[k];
        const double r = spec_.rate_targets[k] * kLn2;
        const double a = y[j] * r;
        const double phi = 1.0 / (1.0 + a);
        e.residual[j] += r * phi * phi;
        e.objective += (phi - 1.0) * (phi - 1.0);
        if (with_hessian) e.hessian(j, j) += -2.0 * r * r * phi * phi * phi;
      }
      break;
    case RateTerm::kCommonFraction: {
      double a = 0.0;
      for (int k : spec_.admitted) a += y[nu_index_[k]] * spec_.rate_targets[k] * kLn2;
      const double phi = 1.0 / (1.0 + a);
      e.objective += (phi - 1.0) * (phi - 1.0);
      for (int k : spec_.admitted) {
        const int j = nu_index_[k];
        const double r = spec_.rate_targets[k] * kLn2;
        e.residual[j] += r * phi * phi;
        if (with_hessian)
          for (int k2 : spec_.admitted)
            e.hessian(j, nu_index_[k2]) += -2.0 * r * spec_.rate_targets[k2] * kLn2 * phi * phi * phi;
      }
      break;
    }
  }

  e.x.resize(blocks_.size());
  std::vector<int> touched;
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    CMatrix J = assemble_J(b, y);
    Eigen::LDLT<CMatrix> ldlt(J);
    if (!(ldlt.vectorD().real().minCoeff() > 0.0)) {
      // J is positive definite in exact arithmetic; a nonpositive pivot is
      // rounding once the weighted covariances dwarf the diagonal term.
      const double shift = 64.0 * std::numeric_limits<double>::epsilon() * J.diagonal().real().cwiseAbs().maxCoeff();
      J.diagonal().array() += shift;
      ldlt.compute(J);
    }
    const auto D = ldlt.vectorD().real();
    const double dmin = D.minCoeff(), dmax = D.maxCoeff();
    if (!(dmin > 0.0)) {
      std::ostringstream msg;
      msg << "J is not positive definite for UE " << b.ue << " subchannel " << b.n << " (min pivot " << dmin << ")";
      throw NumericalError(msg.str());
    }
    e.max_condition = std::max(e.max_condition, dmax / dmin);

    const int jk = nu_index_[b.ue];
    const double nu = y[jk];
    CVector rhs = (nu * b.q) * b.u * b.h;
    if (mf) realify(rhs);
    const CVector x = ldlt.solve(rhs);
    value -= std::real(rhs.dot(x));
    e.objective += (b.g_diag.array() * x.array().abs2()).sum();

    for (const auto& s : b.slots) {
      const double p = x.segment(s.start, s.len).squaredNorm();
      if (s.lambda_index >= 0) e.residual[s.lambda_index] += p;
      if (s.mu_index >= 0) e.residual[s.mu_index] += s.tau * p;
    }
    const Complex hx = b.h.dot(x);
    const double u2 = std::norm(b.u);
    e.residual[jk] += b.q * (u2 * std::norm(hx) - 2.0 * std::real(std::conj(b.u) * hx));
    for (std::size_t a2 = 0; a2 < b.cov.size(); ++a2) {
      if (static_cast<int>(a2) == b.admitted_index) continue;
      const int k2 = spec_.admitted[a2];
      const double w2 = aux.q_at(k2, b.n) * std::norm(aux.u_at(k2, b.n));
      e.residual[nu_index_[k2]] += w2 * std::real(x.dot(b.cov[a2] * x));
    }

    if (with_hessian) {
      touched.clear();
      std::vector<CVector> cols;
      for (const auto& s : b.slots) {
        CVector v = CVector::Zero(b.dim);
        v.segment(s.start, s.len) = -x.segment(s.start, s.len);
        if (s.lambda_index >= 0) {
          touched.push_back(s.lambda_index);
          cols.push_back(v);
        }
        if (s.mu_index >= 0) {
          touched.push_back(s.mu_index);
          cols.push_back(s.tau * v);
        }
      }
      {
        CVector v = b.q * b.u * b.h - (b.q * u2 * hx) * b.h;
        if (mf) realify(v);
        touched.push_back(jk);
        cols.push_back(v);
      }
      for (std::size_t a2 = 0; a2 < b.cov.size(); ++a2) {
        if (static_cast<int>(a2) == b.admitted_index) continue;
        const int k2 = spec_.admitted[a2];
        const double w2 = aux.q_at(k2, b.n) * std::norm(aux.u_at(k2, b.n));
        touched.push_back(nu_index_[k2]);
        cols.push_back(-w2 * (b.cov[a2] * x));
      }
      CMatrix V(b.dim, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) V.col(static_cast<Eigen::Index>(c)) = cols[c];
      const CMatrix Z = ldlt.solve(V);
      const RMatrix Hb = -2.0 * (Z.adjoint() * V).real();
      for (std::size_t r = 0; r < touched.size(); ++r)
        for (std::size_t c = 0; c < touched.size(); ++c)
          e.hessian(touched[r], touched[c]) += 0.5 * (Hb(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +
                                                      Hb(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)));
    }
    e.x[bi] = x;
  }
  e.value = value;
  return e;
}

BeamformerSet DualProblem::beams(const Evaluation& e) const {
  const auto& view = *spec_.view;
  BeamformerSet w(view.clusters(), view.num_subchannels(), view.antennas());
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    if (b.basis.size() == 0) {
      w.at(b.ue, b.n) = e.x[bi];
    } else {
      w.at(b.ue, b.n) = b.basis * e.x[bi];
    }
  }
  return w;
}

namespace {

struct Measures {
  double primal = 0.0;
  double slack = 0.0;
  double projected = 0.0;
};

Measures measure(const DualProblem& p, const DualProblem::Evaluation& e, const std::vector<double>& y) {
  Measures m;
  const auto& budget = p.budgets();
  const double scale = std::max({std::abs(e.objective), std::abs(e.value), 1e-12});
  for (int j = 0; j < p.dimension(); ++j) {
    const double r = e.residual[j] / budget[j];
    m.primal = std::max(m.primal, std::max(0.0, r));
    m.slack = std::max(m.slack, y[j] * std::abs(e.residual[j]) / scale);
    m.projected = std::max(m.projected, y[j] > 0.0 ? std::abs(r) : std::max(0.0, r));
  }
  return m;
}

}  // namespace

SubproblemResult solve_subproblem(const SubproblemSpec& spec, const DualState& warm_start,
                                  const DualSolverOptions& options) {
  DualProblem problem(spec);
  const int D = problem.dimension();
  std::vector<double> y = problem.pack(warm_start);
  const bool newton = options.method == DualMethod::kProjectedNewton;
  const double bound = problem.value_upper_bound();

  SubproblemResult out;
  auto e = problem.evaluate(y, newton);
  double last_improvement = std::numeric_limits<double>::infinity();
  int it = 0;
  bool stalled = false;
  for (; it < options.max_iterations; ++it) {
    const Measures m = measure(problem, e, y);
    if (options.record_trace) out.kkt.trace.push_back({it, e.value, m.primal, m.slack});
    const bool improvement_ok = newton || last_improvement < options.improvement_tolerance;
    if (m.primal <= options.residual_tolerance && m.slack <= options.slackness_tolerance && improvement_ok) {
      out.kkt.converged = true;
      break;
    }
    if (e.value > bound * (1.0 + 1e-9) + 1e-12) {
      out.kkt.infeasible = true;
      break;
    }
    if (stalled) break;

    // Search direction.
    std::vector<double> d(D, 0.0);
    if (newton) {
      std::vector<char> active(D, 0);
      std::vector<int> free_idx;
      for (int j = 0; j < D; ++j) {
        const double curv = std::max(-e.hessian(j, j), 1e-300);
        const double scaled = e.residual[j] / curv;
        const double eps = std::min(1e-8 * (1.0 + y[j]), std::abs(y[j] - std::max(0.0, y[j] + scaled)));
        if (y[j] <= eps && e.residual[j] < 0.0) {
          active[j] = 1;
          d[j] = scaled;
        } else {
          free_idx.push_back(j);
        }
      }
      if (!free_idx.empty()) {
        const auto F = static_cast<Eigen::Index>(free_idx.size());
        RMatrix H(F, F);
        RVector r(F);
        double diag_max = 0.0;
        for (Eigen::Index a = 0; a < F; ++a) {
          r(a) = e.residual[free_idx[a]];
          for (Eigen::Index b = 0; b < F; ++b) H(a, b) = -e.hessian(free_idx[a], free_idx[b]);
          diag_max = std::max(diag_max, H(a, a));
        }
        H.diagonal().array() += 1e-13 * diag_max + 1e-300;
        Eigen::LDLT<RMatrix> ldlt(H);
        RVector step = ldlt.solve(r);
        if (ldlt.info() != Eigen::Success || !step.allFinite() || r.dot(step) <= 0.0) {
          for (Eigen::Index a = 0; a < F; ++a) step(a) = r(a) / std::max(H(a, a), 1e-300);
        }
        for (Eigen::Index a = 0; a < F; ++a) d[free_idx[a]] = step(a);
      }
    } else {
      d = e.residual;
    }

    // Armijo backtracking along the projection arc.
    const Measures current = measure(problem, e, y);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      std::vector<double> y_new(D);
      double predicted = 0.0;
      for (int j = 0; j < D; ++j) {
        y_new[j] = std::max(0.0, y[j] + t * d[j]);
        predicted += e.residual[j] * (y_new[j] - y[j]);
      }
      if (!(predicted > 0.0)) continue;
      auto e_new = problem.evaluate(y_new, newton);
      const bool armijo = e_new.value >= e.value + 1e-4 * predicted;
      bool residual_drop = false;
      if (!armijo && newton) {
        // Near the optimum the ascent drops below the rounding of g; accept steps
        // that shrink the residual without a visible loss in g.
        residual_drop = measure(problem, e_new, y_new).projected < 0.9 * current.projected &&
                        e_new.value >= e.value - 1e-13 * std::max(1.0, std::abs(e.value));
      }
      if (armijo || residual_drop) {
        last_improvement = std::abs(e_new.value - e.value) / std::max(std::abs(e.value), 1e-300);
        y = std::move(y_new);
        e = std::move(e_new);
        accepted = true;
        break;
      }
    }
    if (!accepted) stalled = true;
  }

  const Measures m = measure(problem, e, y);
  if (log_level() >= LogLevel::kDebug) {
    std::ostringstream msg;
    msg << "dual solve: dim " << D << " iterations " << it << " value " << e.value << " bound " << bound
        << " primal " << m.primal << " slack " << m.slack << (out.kkt.infeasible ? " infeasible" : "")
        << (stalled ? " stalled" : "");
    log_debug(msg.str());
  }
  out.kkt.iterations = it;
  out.kkt.dual_value = e.value;
  out.kkt.primal_objective = e.objective;
  out.kkt.max_primal_residual = m.primal;
  out.kkt.max_slackness = m.slack;
  out.kkt.duality_gap = (e.objective - e.value) / std::max({std::abs(e.objective), std::abs(e.value), 1e-12});
  out.kkt.max_condition = e.max_condition;
  if (spec.regularization == 0.0 && e.max_condition > 1e12) log_warning("subproblem: J condition estimate above 1e12");
  out.w = problem.beams(e);
  out.duals = problem.unpack(y);
  return out;
}

CMatrix build_J(const SubproblemSpec& spec, const DualState& duals, int k, int n) {
  DualProblem p(spec);
  return p.build_J(k, n, p.pack(duals));
}

BeamformerSet recover_primal(const SubproblemSpec& spec, const DualState& duals) {
  DualProblem p(spec);
  return p.beams(p.evaluate(p.pack(duals), false));
}

double dual_value(const SubproblemSpec& spec, const DualState& duals) {
  DualProblem p(spec);
  return p.evaluate(p.pack(duals), false).value;
}

SubproblemResult solve_p8(const SubproblemSpec& spec, const DualState& warm_start, const DualSolverOptions& options) {
  return solve_subproblem(spec, warm_start, options);
}

}  // namespace crannpc
