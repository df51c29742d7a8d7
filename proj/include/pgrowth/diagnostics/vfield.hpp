#pragma once

#include <Eigen/Dense>

#include <vector>

#include "pgrowth/core/parallel.hpp"
#include "pgrowth/fem/field.hpp"
#include "pgrowth/tensor/constitutive.hpp"

namespace pgrowth {

/// V_mu(e(u)) on every element (constant per element for P1 fields).
template <int D>
std::vector<SymMatrix<D>> element_v(const DiscreteField<D>& u, const GrowthParams& params) {
  std::vector<SymMatrix<D>> out(u.mesh().element_count());
  parallel_for(out.size(), [&](std::size_t e) { out[e] = v_transform(u.sym_gradient(static_cast<int>(e)), params); });
  return out;
}

template <int D>
std::vector<SymMatrix<D>> element_strain(const DiscreteField<D>& u) {
  std::vector<SymMatrix<D>> out(u.mesh().element_count());
  for (int e = 0; e < u.mesh().element_count(); ++e) out[e] = u.sym_gradient(e);
  return out;
}

/// Squared magnitude of the discrete gradient of a per-element constant field. On each element the
/// gradient G is the least-squares fit of G (c_K - c_E) = value_K - value_E over its face
/// neighbours K (c = centroids), i.e. face jumps over centroid distances along each direction.
/// Exact for fields that are affine in the centroid.
template <int D>
std::vector<double> element_gradient_sq(const Mesh<D>& mesh, const std::vector<SymMatrix<D>>& values) {
  std::vector<std::vector<int>> neighbours(mesh.element_count());
  for (const Facet& f : mesh.interior_facets()) {
    neighbours[f.left].push_back(f.right);
    neighbours[f.right].push_back(f.left);
  }
  std::vector<double> out(mesh.element_count(), 0.0);
  parallel_for(out.size(), [&](std::size_t idx) {
    const int e = static_cast<int>(idx);
    const auto& nb = neighbours[e];
    if (nb.empty()) return;
    Eigen::MatrixXd offsets(nb.size(), D);
    Eigen::MatrixXd jumps(nb.size(), D * D);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      offsets.row(k) = (mesh.element(nb[k]).centroid - mesh.element(e).centroid).transpose();
      const Mat<D> j = values[nb[k]].matrix() - values[e].matrix();
      jumps.row(k) = Eigen::Map<const Eigen::Matrix<double, 1, D * D>>(j.data());
    }
    const Eigen::MatrixXd g = offsets.completeOrthogonalDecomposition().solve(jumps);
    out[idx] = g.squaredNorm();
  });
  return out;
}

/// Nodal |grad V_mu(e(u))|: volume-weighted average of the element gradient magnitudes over each node's star.
template <int D>
Eigen::VectorXd grad_v_field(const DiscreteField<D>& u, const GrowthParams& params) {
  const Mesh<D>& mesh = u.mesh();
  const auto g2 = element_gradient_sq(mesh, element_v(u, params));
  Eigen::VectorXd out(mesh.node_count());
  for (int n = 0; n < mesh.node_count(); ++n) {
    double num = 0.0;
    double den = 0.0;
    for (int e : mesh.node_star(n)) {
      num += mesh.element(e).volume * std::sqrt(g2[e]);
      den += mesh.element(e).volume;
    }
    out(n) = num / den;
  }
  return out;
}

}  // namespace pgrowth
