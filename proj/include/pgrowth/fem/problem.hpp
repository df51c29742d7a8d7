#pragma once

#include <optional>
#include <vector>

#include "pgrowth/fem/field.hpp"
#include "pgrowth/tensor/types.hpp"

namespace pgrowth {

/// Discrete version of F(u) = int f_mu(e(u)) + kappa int |u - g|^p, optionally with the
/// second-gradient penalty of F_L, under Dirichlet constraints at the masked nodes.
template <int D>
struct ProblemSpec {
  MeshPtr<D> mesh;
  GrowthParams params;
  ElasticTensor<D> elastic;
  DiscreteField<D> g;
  DiscreteField<D> dirichlet;      // only entries at constrained nodes are used
  std::vector<bool> constrained;   // per node
  std::optional<double> L;
  int quadrature_order = 2;

  /// Homogeneous data, identity elastic tensor, all boundary nodes constrained.
  static ProblemSpec make(MeshPtr<D> mesh, const GrowthParams& params,
                          const ElasticTensor<D>& elastic = ElasticTensor<D>::identity()) {
    ProblemSpec s;
    s.mesh = mesh;
    s.params = params;
    s.params.dim = D;
    s.elastic = elastic;
    s.g = DiscreteField<D>(mesh);
    s.dirichlet = DiscreteField<D>(mesh);
    s.constrained.assign(mesh->node_count(), false);
    for (int n : mesh->boundary_nodes()) s.constrained[n] = true;
    return s;
  }

  void set_dirichlet(const std::function<Vec<D>(const Vec<D>&)>& f) { dirichlet = DiscreteField<D>::interpolate(mesh, f); }
  void set_g(const std::function<Vec<D>(const Vec<D>&)>& f) { g = DiscreteField<D>::interpolate(mesh, f); }

  void validate() const {
    params.validate();
    if (params.dim != D) throw DomainError("params.dim does not match the mesh dimension");
    if (quadrature_order < 2) throw DomainError("quadrature_order must be >= 2");
    if (L && !(*L > 0.0)) throw DomainError("L must be > 0");
    if (!g.mesh_ptr() || !g.mesh().same_as(*mesh)) throw MeshMismatch("g lives on another mesh");
    if (!dirichlet.mesh_ptr() || !dirichlet.mesh().same_as(*mesh)) throw MeshMismatch("dirichlet data live on another mesh");
    if (static_cast<int>(constrained.size()) != mesh->node_count()) throw MeshMismatch("constraint mask length");
    if (!g.finite() || !dirichlet.finite()) throw DomainError("non-finite data");
  }

  [[nodiscard]] bool is_constrained_dof(int dof) const { return constrained[dof / D]; }

  [[nodiscard]] std::vector<int> free_dofs() const {
    std::vector<int> out;
    for (int n = 0; n < mesh->node_count(); ++n)
      if (!constrained[n])
        for (int i = 0; i < D; ++i) out.push_back(n * D + i);
    return out;
  }

  /// Copy of `field` with the Dirichlet values imposed.
  [[nodiscard]] DiscreteField<D> impose(DiscreteField<D> field) const {
    for (int n = 0; n < mesh->node_count(); ++n)
      if (constrained[n]) field.set_node(n, dirichlet.at_node(n));
    return field;
  }

  /// Largest deviation of `field` from the Dirichlet data.
  [[nodiscard]] double dirichlet_violation(const DiscreteField<D>& field) const {
    double worst = 0.0;
    for (int n = 0; n < mesh->node_count(); ++n)
      if (constrained[n]) worst = std::max(worst, (field.at_node(n) - dirichlet.at_node(n)).cwiseAbs().maxCoeff());
    return worst;
  }
};

}  // namespace pgrowth
