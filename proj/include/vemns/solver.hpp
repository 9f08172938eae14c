#pragma once

#include "vemns/assembly.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vemns {

struct AHParams {
  double nu = 1.0;      // viscosity
  double rho = 0.5;     // velocity relaxation
  double alpha = 0.25;  // pressure relaxation
  double tol = 1e-8;    // pressure-increment stopping tolerance (L2 norm)
  int max_iter = 500;

  void validate() const {
    if (!(nu > 0.0 && rho > 0.0 && alpha > 0.0 && tol > 0.0) || max_iter < 1)
      throw std::invalid_argument("AHParams: parameters must be positive, max_iter >= 1");
  }

  /// rho = 1/(2 nu), alpha = rho^2, and the h^4 stopping rule. The reference
  /// iteration tables read the pressure increment in the raw coefficient
  /// norm, which sits one power of h above the L2 norm on near-uniform
  /// meshes; since the solver stops on the L2 norm, the equivalent default
  /// threshold is h^5.
  static AHParams defaults_for(double nu, double h) {
    AHParams p;
    p.nu = nu;
    p.rho = 1.0 / (2.0 * nu);
    p.alpha = p.rho * p.rho;
    p.tol = h * h * h * h * h;
    return p;
  }

  /// Cavity preset: rho = 1.2, alpha = 7 Re / 10.
  static AHParams cavity_preset(double reynolds, double h) {
    AHParams p;
    p.nu = 1.0 / reynolds;
    p.rho = 1.2;
    p.alpha = 0.7 * reynolds;
    p.tol = h * h * h * h * h;
    return p;
  }
};

struct AHState {
  Eigen::VectorXd chi;  // velocity DoFs, Dirichlet values included
  Eigen::VectorXd p;    // pressure coefficients
  double lambda = 0.0;
  int n = 0;
};

struct AHTelemetry {
  int n;
  double dp_norm;
  double lambda;
  double seconds;
};

struct AHResult {
  AHState state;
  std::vector<AHTelemetry> telemetry;
  bool converged = false;
  int iterations = 0;
  double last_dp = 0.0;
  double divergence_norm = 0.0;  // || div u_h || at termination
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Step 1: one sparse direct solve of the Stokes saddle system
/// [nu A, B, 0; B^T, 0, d; 0, d^T, 0] on the free velocity DoFs.
inline AHState solve_stokes_init(const GlobalSystem& sys, const AHParams& params) {
  params.validate();
  const auto& dm = sys.dofs;
  const int nf = dm.n_free;
  const int m = sys.n_pressure();
  const Eigen::VectorXd g = dirichlet_vector(sys);
  const Eigen::VectorXd Ag = sys.A * g;
  const Eigen::VectorXd Btg = sys.B.transpose() * g;

  std::vector<Triplet> t;
  t.reserve(sys.A.nonZeros() + 2 * sys.B.nonZeros() + 2 * m + 2);
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.A, k); it; ++it) {
      const int r = dm.free_of_full[it.row()], c = dm.free_of_full[it.col()];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, params.nu * it.value());
    }
  for (int k = 0; k < sys.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.B, k); it; ++it) {
      const int r = dm.free_of_full[it.row()];
      if (r >= 0) {
        t.emplace_back(r, nf + static_cast<int>(it.col()), it.value());
        t.emplace_back(nf + static_cast<int>(it.col()), r, it.value());
      }
    }
  for (int l = 0; l < m; ++l) {
    t.emplace_back(nf + l, nf + m, sys.d(l));
    t.emplace_back(nf + m, nf + l, sys.d(l));
  }
  SpMat S(nf + m + 1, nf + m + 1);
  S.setFromTriplets(t.begin(), t.end());

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + m + 1);
  for (int i = 0; i < sys.n_velocity(); ++i) {
    const int r = dm.free_of_full[i];
    if (r >= 0) rhs(r) = sys.F(i) - params.nu * Ag(i);
  }
  rhs.segment(nf, m) = -Btg;

  Eigen::SparseLU<SpMat> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success)
    throw NumericalError(
        "solve_stokes_init: factorization failed (structurally singular saddle system; "
        "probable inf-sup violation of the mesh)");
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) throw NumericalError("solve_stokes_init: non-finite solution");

  AHState st;
  st.chi = g;
  for (int f = 0; f < nf; ++f) st.chi(dm.full_of_free[f]) = sol(f);
  st.p = sol.segment(nf, m);
  st.lambda = sol(nf + m);
  st.n = 0;
  return st;
}

/// Reusable velocity-substep solver: the sparsity pattern of
/// rho^-1 A + N2tilde(chi) is fixed, so it is analyzed once.
class VelocityStepSolver {
 public:
  explicit VelocityStepSolver(const GlobalSystem& sys) : sys_(sys) {}

  /// Solves (rho^-1 A + N2tilde(chi_n)) chi_next = rhs_full (restricted to the
  /// free DoFs, Dirichlet values of chi_next prescribed).
  Eigen::VectorXd solve(const Eigen::VectorXd& chi_n, double rho,
                        const Eigen::VectorXd& rhs_full) {
    const auto& dm = sys_.dofs;
    const int nf = dm.n_free;
    Eigen::VectorXd rhs(nf);
    for (int f = 0; f < nf; ++f) rhs(f) = rhs_full(dm.full_of_free[f]);

    std::vector<Triplet> t;
    t.reserve(sys_.A.nonZeros());
    for (int c = 0; c < sys_.mesh.n_cells(); ++c) {
      const auto& gd = dm.cell_dofs[c];
      const int nk = static_cast<int>(gd.size());
      Eigen::VectorXd chi_K(nk);
      for (int i = 0; i < nk; ++i) chi_K(i) = chi_n(gd[i]);
      const auto nl = nonlinear_matrices(sys_.elements[c], chi_K);
      const Eigen::MatrixXd Mloc = sys_.elements[c].A_K / rho + nl.N2_skew;
      for (int i = 0; i < nk; ++i) {
        const int fi = dm.free_of_full[gd[i]];
        if (fi < 0) continue;
        for (int j = 0; j < nk; ++j) {
          const int fj = dm.free_of_full[gd[j]];
          if (fj >= 0)
            t.emplace_back(fi, fj, Mloc(i, j));
          else
            rhs(fi) -= Mloc(i, j) * dm.dirichlet_value[gd[j]];
        }
      }
    }
    SpMat Mff(nf, nf);
    Mff.setFromTriplets(t.begin(), t.end());

    if (!analyzed_) {
      lu_.analyzePattern(Mff);
      analyzed_ = true;
    }
    lu_.factorize(Mff);
    if (lu_.info() != Eigen::Success)
      throw NumericalError("velocity substep: factorization failed");
    const Eigen::VectorXd xf = lu_.solve(rhs);
    if (!xf.allFinite())
      throw NumericalError(
          "velocity substep: non-finite iterate (divergence); try a smaller rho inside the "
          "admissible region");

    Eigen::VectorXd chi = dirichlet_vector(sys_);
    for (int f = 0; f < nf; ++f) chi(dm.full_of_free[f]) = xf(f);
    return chi;
  }

 private:
  const GlobalSystem& sys_;
  Eigen::SparseLU<SpMat> lu_;
  bool analyzed_ = false;
};

/// One A-H step: nonsymmetric velocity solve, then the block-diagonal
/// pressure update with the zero-mean multiplier.
inline AHState ah_step_with(const GlobalSystem& sys, const AHState& state,
                            const AHParams& params, VelocityStepSolver& vel) {
  const double rho = params.rho, alpha = params.alpha, nu = params.nu;
  const Eigen::VectorXd rhs_full =
      (1.0 / rho - nu) * (sys.A * state.chi) - sys.B * state.p + sys.F;
  AHState next;
  next.chi = vel.solve(state.chi, rho, rhs_full);

  const Eigen::VectorXd r = alpha * sys.apply_C(state.p) + rho * (sys.B.transpose() * next.chi);
  const Eigen::VectorXd Cinv_r = sys.apply_Cinv(r);
  const Eigen::VectorXd Cinv_d = sys.apply_Cinv(sys.d);
  next.lambda = sys.d.dot(Cinv_r) / sys.d.dot(Cinv_d);
  next.p = sys.apply_Cinv(r - next.lambda * sys.d) / alpha;
  next.n = state.n + 1;
  if (!next.p.allFinite() || !std::isfinite(next.lambda))
    throw NumericalError("pressure substep: non-finite iterate");
  return next;
}

inline AHState ah_step(const GlobalSystem& sys, const AHState& state, const AHParams& params) {
  params.validate();
  VelocityStepSolver vel(sys);
  return ah_step_with(sys, state, params, vel);
}

/// Full iteration: Stokes initializer, then A-H steps until the C-weighted
/// pressure increment drops below params.tol or max_iter is reached.
inline AHResult ah_solve(const GlobalSystem& sys, const AHParams& params) {
  params.validate();
  AHResult res;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  res.state = solve_stokes_init(sys, params);
  VelocityStepSolver vel(sys);
  for (int n = 1; n <= params.max_iter; ++n) {
    const AHState next = ah_step_with(sys, res.state, params, vel);
    const double dp = sys.pressure_norm(next.p - res.state.p);
    const double dchi = (next.chi - res.state.chi).norm();
    const double scale = std::max({1.0, sys.pressure_norm(next.p), next.chi.norm()});
    res.state = next;
    res.telemetry.push_back({n, dp, next.lambda, elapsed()});
    res.last_dp = dp;
    if (n == 1 && dp <= 1e-14 * scale && dchi <= 1e-14 * scale) {
      // initializer already was the fixed point
      res.converged = true;
      res.iterations = 0;
      break;
    }
    if (dp < params.tol) {
      res.converged = true;
      res.iterations = n;
      break;
    }
    res.iterations = n;
  }
  res.divergence_norm = sys.divergence_norm(sys.B.transpose() * res.state.chi);
  return res;
}

// ---------------------------------------------------------------------------

/// User-supplied estimates of the stability constants entering the
/// convergence condition; they have no computable closed form.
struct StabilityEstimates {
  double alpha_star = 1.0;   // lower norm-equivalence constant
  double alpha_sup = 1.0;    // upper norm-equivalence constant
  double lambda_tilde = 0.0; // scaled data size, must be < 1
};

struct ParameterReport {
  double condition_lhs = 0.0;   // alpha^* |1 - rho nu| + rho alpha_* nu Lt + rho^2/(2 alpha)
  bool satisfied = false;
  bool lambda_ok = false;
  // admissible (rho, alpha) regions, split at rho = 1/nu
  double rho_lower_small = 0.0, rho_upper_small = 0.0, alpha_min_small = 0.0;
  double rho_lower_large = 0.0, rho_upper_large = 0.0, alpha_min_large = 0.0;
  std::string text;
};

/// Evaluates the sufficient convergence condition and the two-branch
/// admissible parameter regions. Advisory only; the solver never refuses to
/// run on a violated condition.
inline ParameterReport parameter_diagnostics(const AHParams& params,
                                             const StabilityEstimates& est) {
  if (!(est.alpha_star > 0.0 && est.alpha_sup > 0.0 && est.lambda_tilde >= 0.0))
    throw std::invalid_argument("parameter_diagnostics: estimates must be positive");
  const double nu = params.nu, rho = params.rho, alpha = params.alpha;
  const double as = est.alpha_star, au = est.alpha_sup, lt = est.lambda_tilde;
  ParameterReport rep;
  rep.lambda_ok = lt < 1.0;
  rep.condition_lhs = au * std::abs(1.0 - rho * nu) + rho * (as * nu) * lt +
                      rho * rho / (2.0 * alpha);
  rep.satisfied = rep.lambda_ok && rep.condition_lhs < as;

  // rho <= 1/nu branch: rho^2/(2 alpha) < alpha_* - alpha^* + rho nu (alpha^* - alpha_* Lt)
  rep.rho_lower_small = (au - as) / (nu * (au - as * lt));
  rep.rho_upper_small = 1.0 / nu;
  const double denom_small = 2.0 * (as - au + rho * nu * (au - as * lt));
  rep.alpha_min_small = denom_small > 0.0 ? rho * rho / denom_small
                                          : std::numeric_limits<double>::infinity();
  // rho > 1/nu branch: rho^2/(2 alpha) < alpha^* + alpha_* - rho nu (alpha^* + alpha_* Lt)
  rep.rho_lower_large = 1.0 / nu;
  rep.rho_upper_large = (au + as) / (nu * (au + as * lt));
  const double denom_large = 2.0 * (au + as - rho * nu * (au + as * lt));
  rep.alpha_min_large = denom_large > 0.0 ? rho * rho / denom_large
                                          : std::numeric_limits<double>::infinity();

  std::ostringstream os;
  os << "condition lhs = " << rep.condition_lhs << (rep.satisfied ? " < " : " >= ")
     << as << " (alpha_*), Lambda~ " << (rep.lambda_ok ? "< 1" : ">= 1") << "\n";
  os << "admissible rho <= 1/nu: rho in (" << rep.rho_lower_small << ", " << rep.rho_upper_small
     << "], alpha > " << rep.alpha_min_small << " at the given rho\n";
  os << "admissible rho  > 1/nu: rho in (" << rep.rho_lower_large << ", " << rep.rho_upper_large
     << "), alpha > " << rep.alpha_min_large << " at the given rho";
  rep.text = os.str();
  return rep;
}

// ---------------------------------------------------------------------------

using TimeField = std::function<Vec2(const Vec2&, double)>;

struct TimeStepRecord {
  double t = 0.0;
  AHResult result;
};

/// Copy of the system with A replaced by A + sigma M, both globally and in
/// the per-element blocks the velocity substep assembles from.
inline GlobalSystem augment_with_mass(const GlobalSystem& sys, double sigma) {
  GlobalSystem out = sys;
  out.A = sys.A + sigma * sys.M;
  for (auto& ops : out.elements) ops.A_K += sigma * ops.M_K;
  return out;
}

/// Backward-Euler time stepping: each step augments the viscous block with
/// M/dt (so nu A_eff = nu A + M/dt) and the load with (1/dt) M chi_prev, then
/// reuses the steady A-H solve. t_end is hit exactly by rounding the step
/// count; the records hold the state after each step.
inline std::vector<TimeStepRecord> backward_euler_solve(const GlobalSystem& sys,
                                                        const AHParams& params, double dt,
                                                        double t_end,
                                                        const Eigen::VectorXd& chi_initial,
                                                        const TimeField& forcing,
                                                        const TimeField& boundary,
                                                        bool flux_correction = true) {
  params.validate();
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::invalid_argument("backward_euler_solve: dt and t_end must be positive");
  const int n_steps = std::max(1, static_cast<int>(std::lround(t_end / dt)));
  const double dt_eff = t_end / n_steps;

  GlobalSystem step_sys = augment_with_mass(sys, 1.0 / (params.nu * dt_eff));

  std::vector<TimeStepRecord> trajectory;
  trajectory.reserve(n_steps);
  Eigen::VectorXd chi_prev = chi_initial;
  for (int s = 1; s <= n_steps; ++s) {
    const double t = s * dt_eff;
    set_dirichlet(step_sys, [&](const Vec2& x) { return boundary(x, t); }, flux_correction);
    assemble_load(step_sys, [&](const Vec2& x) { return forcing(x, t); });
    step_sys.F += (1.0 / dt_eff) * (sys.M * chi_prev);
    TimeStepRecord rec;
    rec.t = t;
    try {
      rec.result = ah_solve(step_sys, params);
    } catch (const NumericalError& e) {
      throw NumericalError("backward_euler_solve: step " + std::to_string(s) + " (t = " +
                           std::to_string(t) + "): " + e.what());
    }
    chi_prev = rec.result.state.chi;
    trajectory.push_back(std::move(rec));
  }
  return trajectory;
}

}  // namespace vemns
