#pragma once

#include <vector>

#include "pgrowth/fem/assembly.hpp"
#include "pgrowth/solver/linear.hpp"

namespace pgrowth {

struct LinearSolveReport {
  double relative_residual = 0.0;
};

/// Solves the frozen-coefficient system int <A e(v), e(phi)> = int <load, phi> for all phi vanishing
/// at the constrained nodes, with v = dirichlet there. `constrained` defaults to the boundary nodes.
template <int D>
DiscreteField<D> solve_linearized(const Tensor4<D>& tangent_tensor, const DiscreteField<D>& load, const DiscreteField<D>& dirichlet,
                                  const std::vector<bool>* constrained = nullptr, LinearSolveReport* report = nullptr) {
  load.check_same(dirichlet);
  const auto [lo, hi] = tangent_tensor.symmetric_eigen_range();
  if (!(lo > 1e-14 * std::max(1.0, std::abs(hi))))
    throw IndefiniteTangent("frozen tangent is not positive definite on symmetric matrices (smallest eigenvalue " +
                            std::to_string(lo) + ")");
  const MeshPtr<D>& mesh = load.mesh_ptr();
  // a p = 2, mu = 0 energy with moduli A has exactly A as its Hessian
  ElasticTensor<D> moduli;
  try {
    moduli = ElasticTensor<D>(tangent_tensor);
  } catch (const DomainError& e) {
    throw IndefiniteTangent(e.what());
  }
  auto spec = ProblemSpec<D>::make(mesh, GrowthParams{2.0, 0.0, 0.0, D}, moduli);
  if (constrained) {
    if (static_cast<int>(constrained->size()) != mesh->node_count()) throw MeshMismatch("constraint mask length");
    spec.constrained = *constrained;
  }
  const Eigen::SparseMatrix<double> k = assemble_hessian(DiscreteField<D>(mesh), spec);

  // consistent load vector (order-2 quadrature is exact for products of P1 functions)
  const auto& quad = mesh->quadrature(2);
  const int nq = quad.per_element();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh->dof_count());
  for (int e = 0; e < mesh->element_count(); ++e) {
    const auto& el = mesh->element(e);
    for (int q = 0; q < nq; ++q) {
      const int g = e * nq + q;
      const Vec<D> f = quad.weight(g) * load.evaluate(e, quad.bary(g));
      for (int a = 0; a <= D; ++a) b.template segment<D>(el.nodes[a] * D) += quad.bary(g)[a] * f;
    }
  }

  std::vector<bool> fixed(mesh->dof_count());
  for (int n = 0; n < mesh->node_count(); ++n)
    for (int i = 0; i < D; ++i) fixed[n * D + i] = spec.constrained[n];
  const DofRestriction dofs(fixed);
  DiscreteField<D> out(mesh);
  for (int n = 0; n < mesh->node_count(); ++n)
    if (spec.constrained[n]) out.set_node(n, dirichlet.at_node(n));
  const Eigen::SparseMatrix<double> kff = dofs.restrict(k);
  const Eigen::VectorXd rhs = dofs.restrict(b) - dofs.coupling(k) * out.values();
  auto x = spd_solve(kff, rhs);
  if (!x) throw IndefiniteTangent("stiffness matrix is not positive definite on the free dofs");
  // one step of iterative refinement
  const Eigen::VectorXd res = rhs - kff * *x;
  if (auto dx = spd_solve(kff, res)) *x += *dx;
  const double scale = std::max(rhs.norm(), (kff * *x).norm());
  const double rel = scale > 0.0 ? (rhs - kff * *x).norm() / scale : 0.0;
  if (report) report->relative_residual = rel;
  if (!(rel <= 1e-10)) throw LinearSolveFailed("linearized solve residual " + sci(rel) + " exceeds 1e-10");
  out.values() += dofs.extend(*x);
  return out;
}

}  // namespace pgrowth
