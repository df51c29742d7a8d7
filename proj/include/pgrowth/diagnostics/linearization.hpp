#pragma once

#include <json.hpp>

#include <vector>

#include "pgrowth/diagnostics/excess.hpp"
#include "pgrowth/solver/linearized.hpp"
#include "pgrowth/solver/minimize.hpp"

namespace pgrowth {

/// Blow-up experiment: rescaled deviations u_lambda = (u - A x) / lambda of minimizers with boundary
/// data A x + lambda * perturbation against the solution of the problem linearized at A.
struct LinearizationReport {
  std::vector<double> lambda_sequence;
  std::vector<double> rescaled_error;  // int_B lambda^-2 |V_mu(lambda e(u_lambda - u_inf))|^2
  std::vector<int> iterations;
  double linear_residual = 0.0;  // relative residual of the linearized solve
  bool decreasing = true;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < lambda_sequence.size(); ++k)
      rows.push_back({{"lambda", lambda_sequence[k]}, {"rescaled_error", rescaled_error[k]}, {"iterations", iterations[k]}});
    return {{"points", rows}, {"linear_residual", linear_residual}, {"decreasing", decreasing}};
  }
};

template <int D>
LinearizationReport linearization_experiment(const SymMatrix<D>& base_strain, const DiscreteField<D>& perturbation,
                                             const std::vector<double>& lambda_sequence, const ProblemSpec<D>& spec,
                                             const Ball<D>& ball, const SolverOptions& opts = {}) {
  const GrowthParams& params = spec.params;
  if (!(params.mu > 0.0)) throw DomainError("linearization experiment needs mu > 0");
  if (params.kappa != 0.0) throw DomainError("linearization experiment needs kappa = 0");
  if (lambda_sequence.empty()) throw DomainError("empty lambda sequence");
  for (std::size_t k = 0; k < lambda_sequence.size(); ++k) {
    if (!(lambda_sequence[k] > 0.0)) throw DomainError("lambda values must be positive");
    if (k > 0 && !(lambda_sequence[k] < lambda_sequence[k - 1])) throw DomainError("lambda sequence must be strictly decreasing");
  }
  perturbation.check_same(spec.g);
  const BallRegion<D> region(spec.mesh, ball);
  const Mat<D> a = base_strain.matrix();
  const auto affine = DiscreteField<D>::interpolate(spec.mesh, [&](const Vec<D>& x) -> Vec<D> { return a * x; });

  LinearizationReport rep;
  rep.lambda_sequence = lambda_sequence;
  LinearSolveReport lin;
  const DiscreteField<D> limit = solve_linearized(tangent(base_strain, params, spec.elastic), DiscreteField<D>(spec.mesh),
                                                  perturbation, &spec.constrained, &lin);
  rep.linear_residual = lin.relative_residual;

  for (double lambda : lambda_sequence) {
    ProblemSpec<D> local = spec;
    local.dirichlet = affine;
    local.dirichlet.values() += lambda * perturbation.values();
    DiscreteField<D> start = affine;
    start.values() += lambda * limit.values();
    const Solution<D> sol = minimize(local, start, opts);
    // lambda (u_lambda - u_inf) = u - A x - lambda u_inf
    DiscreteField<D> scaled = sol.field - affine;
    scaled.values() -= lambda * limit.values();
    const double err = region.element_integral([&](int e) {
      return v_transform(scaled.sym_gradient(e), params).squared_norm();
    });
    rep.rescaled_error.push_back(err / (lambda * lambda));
    rep.iterations.push_back(sol.iterations);
  }
  for (std::size_t k = 1; k < rep.rescaled_error.size(); ++k)
    rep.decreasing = rep.decreasing && rep.rescaled_error[k] < rep.rescaled_error[k - 1];
  return rep;
}

}  // namespace pgrowth
