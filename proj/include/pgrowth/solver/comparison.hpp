#pragma once

#include <vector>

#include "pgrowth/fem/ball.hpp"
#include "pgrowth/solver/minimize.hpp"

namespace pgrowth {

/// Nodes whose whole element star lies in the closed ball; only these may move in a
/// comparison solve, so every element they touch is entirely inside the ball.
template <int D>
std::vector<bool> ball_interior_nodes(const Mesh<D>& mesh, const Ball<D>& ball) {
  const double r2 = ball.radius * ball.radius;
  std::vector<bool> inside_node(mesh.node_count());
  for (int n = 0; n < mesh.node_count(); ++n) inside_node[n] = (mesh.node(n) - ball.center).squaredNorm() <= r2;
  std::vector<bool> out(mesh.node_count(), false);
  for (int n = 0; n < mesh.node_count(); ++n) {
    if (!inside_node[n] || mesh.on_boundary(n)) continue;
    bool all = true;
    for (int e : mesh.node_star(n))
      for (int m : mesh.element(e).nodes) all = all && inside_node[m];
    out[n] = all;
  }
  return out;
}

/// int_B f_mu(e(v)) with the ball's quadrature-point inclusion.
template <int D>
double ball_bulk_energy(const DiscreteField<D>& v, const BallRegion<D>& region, const GrowthParams& params,
                        const ElasticTensor<D>& elastic) {
  return region.element_integral([&](int e) { return energy_density(v.sym_gradient(e), params, elastic); });
}

/// Minimizer w of the autonomous energy int_B f_mu(e(w)) over w = u off the ball interior.
template <int D>
DiscreteField<D> solve_autonomous_comparison(const Solution<D>& u, const Ball<D>& ball, const ProblemSpec<D>& spec,
                                             const SolverOptions& opts = {}) {
  check_ball(*spec.mesh, ball);
  if (!(spec.params.mu > 0.0)) throw DomainError("comparison solve needs mu > 0");
  u.field.check_same(spec.g);
  ProblemSpec<D> local = spec;
  local.params.kappa = 0.0;
  local.L.reset();
  local.dirichlet = u.field;
  const auto movable = ball_interior_nodes(*spec.mesh, ball);
  for (int n = 0; n < spec.mesh->node_count(); ++n) local.constrained[n] = !movable[n];
  return minimize(local, u.field, opts).field;
}

}  // namespace pgrowth
