#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "pgrowth/fem/assembly.hpp"
#include "pgrowth/solver/linear.hpp"

namespace pgrowth {

struct LineSearchOptions {
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_backtracks = 40;
};

struct TraceRow {
  int iteration = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double L = std::numeric_limits<double>::infinity();  // inf: penalty off
};

inline constexpr double penalty_off = std::numeric_limits<double>::infinity();

struct SolverOptions {
  double grad_tol = 1e-9;
  int max_iters = 200;
  LineSearchOptions line_search;
  std::vector<double> L_schedule{1.0, 10.0, 100.0, 1000.0, penalty_off};
  double hessian_regularization = 1e-10;
  /// Run the schedule even where the Hessian is defined without it.
  bool always_continue = false;
  /// Return unconverged results instead of throwing MaxIters.
  bool allow_unconverged = false;
  std::function<void(const TraceRow&)> trace;

  void validate() const {
    if (!(grad_tol > 0.0)) throw ConfigError("grad_tol must be > 0");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0)) throw ConfigError("line_search.shrink must lie in (0,1)");
    if (!(line_search.sufficient_decrease > 0.0 && line_search.sufficient_decrease <= 0.5))
      throw ConfigError("line_search.sufficient_decrease must lie in (0,0.5]");
    if (!(hessian_regularization >= 0.0)) throw ConfigError("hessian_regularization must be >= 0");
    if (L_schedule.empty() || L_schedule.back() != penalty_off) throw ConfigError("L_schedule must end at infinity");
    for (std::size_t k = 0; k < L_schedule.size(); ++k) {
      if (!(L_schedule[k] > 0.0)) throw ConfigError("L_schedule entries must be > 0");
      if (k > 0 && !(L_schedule[k] > L_schedule[k - 1])) throw ConfigError("L_schedule must be increasing");
    }
  }
};

template <int D>
struct Solution {
  DiscreteField<D> field;
  int iterations = 0;
  double final_grad_norm = 0.0;
  double energy = 0.0;
  bool converged = false;
  std::vector<std::pair<double, double>> L_path_energies;  // (L, energy), L = inf without penalty
};

namespace solver_detail {

template <int D>
std::vector<bool> constrained_dofs(const ProblemSpec<D>& spec) {
  std::vector<bool> out(spec.mesh->dof_count());
  for (int n = 0; n < spec.mesh->node_count(); ++n)
    for (int i = 0; i < D; ++i) out[n * D + i] = spec.constrained[n];
  return out;
}

struct StageResult {
  int iterations = 0;
  double grad_norm = 0.0;
  double energy = 0.0;
  bool converged = false;
};

// Damped Newton on the free dofs of `spec`, starting from (and overwriting) x.
template <int D>
StageResult newton_stage(const ProblemSpec<D>& spec, DiscreteField<D>& x, const SolverOptions& opts, const HessianFloors& floors,
                         int iteration_offset) {
  const DofRestriction dofs(constrained_dofs(spec));
  const double L_value = spec.L ? *spec.L : penalty_off;
  StageResult r;
  double energy = assemble_energy(x, spec);
  for (int it = 0;; ++it) {
    const AssembledGradient g = assemble_gradient(x, spec);
    const Eigen::VectorXd grad = dofs.restrict(g.free);
    r.grad_norm = grad.norm();
    r.energy = energy;
    r.iterations = it;
    if (!std::isfinite(energy) || !std::isfinite(r.grad_norm)) throw DomainError("non-finite energy or gradient during minimization");
    if (r.grad_norm <= opts.grad_tol || dofs.free_count() == 0) {
      r.converged = true;
      return r;
    }
    if (it >= opts.max_iters) return r;

    const Eigen::SparseMatrix<double> h = dofs.restrict(assemble_hessian(x, spec, floors));
    // Levenberg fallback: shift the diagonal until the factorization is positive definite
    // and the step is a descent direction
    double diag_scale = 0.0;
    for (int k = 0; k < h.outerSize(); ++k) diag_scale = std::max(diag_scale, std::abs(h.coeff(k, k)));
    diag_scale = std::max(diag_scale, 1e-300);
    double shift = 0.0;
    Eigen::VectorXd dir;
    for (int attempt = 0;; ++attempt) {
      Eigen::SparseMatrix<double> a = h;
      if (shift > 0.0) {
        Eigen::SparseMatrix<double> id(h.rows(), h.cols());
        id.setIdentity();
        a += shift * id;
      }
      auto sol = spd_solve(a, -grad);
      if (sol && sol->dot(grad) < 0.0) {
        dir = std::move(*sol);
        break;
      }
      if (attempt > 60) throw LineSearchStalled("no positive definite Newton model could be formed");
      shift = shift == 0.0 ? std::max(opts.hessian_regularization, 1e-14) * diag_scale : 4.0 * shift;
    }

    const Eigen::VectorXd step_full = dofs.extend(dir);
    const double slope = grad.dot(dir);
    double t = 1.0;
    bool accepted = false;
    double trial_energy = energy;
    DiscreteField<D> trial(x.mesh_ptr());
    for (int b = 0; b <= opts.line_search.max_backtracks; ++b) {
      trial.values() = x.values() + t * step_full;
      trial_energy = assemble_energy(trial, spec);
      if (std::isfinite(trial_energy) && trial_energy <= energy + opts.line_search.sufficient_decrease * t * slope) {
        accepted = true;
        break;
      }
      t *= opts.line_search.shrink;
    }
    if (!accepted) {
      // at the roundoff floor of the energy the Armijo test is meaningless: accept the full
      // Newton step if it does not raise the energy beyond roundoff and reduces the gradient
      trial.values() = x.values() + step_full;
      trial_energy = assemble_energy(trial, spec);
      const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(energy), 1e-300);
      const double trial_grad = dofs.restrict(assemble_gradient(trial, spec).free).norm();
      if (!(trial_energy <= energy + noise) || !(trial_grad < r.grad_norm))
        throw LineSearchStalled("line search stalled at gradient norm " + sci(r.grad_norm));
      t = 1.0;
    }
    x = trial;
    energy = trial_energy;
    if (opts.trace) opts.trace(TraceRow{iteration_offset + it + 1, energy, r.grad_norm, t, L_value});
  }
}

}  // namespace solver_detail

/// Minimizes the discrete energy of `spec` over fields with its Dirichlet data. In the degenerate
/// sub-quadratic case (p < 2, mu = 0) the energy is minimized along the L schedule and the
/// last penalized solution is re-polished without penalty using a floored tangent.
template <int D>
Solution<D> minimize(const ProblemSpec<D>& spec, const DiscreteField<D>& initial, const SolverOptions& opts = {}) {
  spec.validate();
  opts.validate();
  if (!initial.mesh_ptr() || !initial.mesh().same_as(*spec.mesh)) throw MeshMismatch("initial guess lives on another mesh");
  if (!initial.finite()) throw DomainError("non-finite initial guess");

  const bool degenerate = spec.params.p < 2.0 && spec.params.mu == 0.0;
  HessianFloors floors;
  if (degenerate) floors.tangent = 1e-10;

  Solution<D> out;
  out.field = spec.impose(initial);
  if (opts.trace) opts.trace(TraceRow{0, assemble_energy(out.field, spec), 0.0, 0.0, spec.L ? *spec.L : penalty_off});

  std::vector<std::optional<double>> stages;
  if ((degenerate || opts.always_continue) && !spec.L) {
    for (double L : opts.L_schedule) stages.push_back(L == penalty_off ? std::nullopt : std::optional<double>(L));
  } else {
    stages.push_back(spec.L);
  }

  int total = 0;
  solver_detail::StageResult last;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    ProblemSpec<D> stage = spec;
    stage.L = stages[s];
    last = solver_detail::newton_stage(stage, out.field, opts, floors, total);
    total += last.iterations;
    out.L_path_energies.emplace_back(stages[s] ? *stages[s] : penalty_off, last.energy);
    const bool final_stage = s + 1 == stages.size();
    if (!last.converged && !(final_stage && degenerate && stages.size() > 1) && !opts.allow_unconverged)
      throw MaxIters("no convergence within " + std::to_string(opts.max_iters) + " Newton iterations (gradient norm " +
                     sci(last.grad_norm) + ")");
  }
  out.iterations = total;
  out.final_grad_norm = last.grad_norm;
  out.energy = last.energy;
  out.converged = last.converged;
  return out;
}

/// Minimizes from the Dirichlet lift of zero.
template <int D>
Solution<D> minimize(const ProblemSpec<D>& spec, const SolverOptions& opts = {}) {
  return minimize(spec, DiscreteField<D>(spec.mesh), opts);
}

}  // namespace pgrowth
