#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <vector>

#include "pgrowth/core/parallel.hpp"
#include "pgrowth/fem/problem.hpp"
#include "pgrowth/tensor/constitutive.hpp"

namespace pgrowth {

struct EnergyBreakdown {
  double bulk = 0.0;
  double fidelity = 0.0;
  double penalty = 0.0;
  [[nodiscard]] double total() const { return bulk + fidelity + penalty; }
};

/// Free-dof gradient and the reaction channel at constrained dofs; both have full length and
/// are zero on the complementary dofs.
struct AssembledGradient {
  Eigen::VectorXd free;
  Eigen::VectorXd reaction;
};

/// Regularization of the second derivatives where the energy is only C^1.
struct HessianFloors {
  double tangent = 0.0;    // floor on C xi.xi + mu; 0 keeps the exact tangent (and its UndefinedHessian)
  double fidelity = 1e-10; // floor on |u - g| for the p < 2 fidelity term
};

namespace assembly_detail {

template <int D>
void check_field(const DiscreteField<D>& field, const ProblemSpec<D>& spec) {
  if (!field.mesh_ptr() || !field.mesh().same_as(*spec.mesh)) throw MeshMismatch("field is not on the problem mesh");
}

// kappa |w|^p and its first two derivatives in w
template <int D>
struct Fidelity {
  double kappa;
  double p;
  double floor;

  [[nodiscard]] double value(const Vec<D>& w) const { return kappa * shifted_power(w.squaredNorm(), 0.5 * p); }

  [[nodiscard]] Vec<D> gradient(const Vec<D>& w) const {
    const double s2 = w.squaredNorm();
    if (s2 == 0.0) return Vec<D>::Zero();
    return kappa * p * shifted_power(s2, 0.5 * p - 1.0) * w;
  }

  [[nodiscard]] Mat<D> hessian(const Vec<D>& w) const {
    const double s = std::max(w.norm(), p < 2.0 ? floor : 0.0);
    if (s == 0.0) return p == 2.0 ? Mat<D>(2.0 * kappa * Mat<D>::Identity()) : Mat<D>(Mat<D>::Zero());
    const Vec<D> dir = w.norm() > 0.0 ? Vec<D>(w / w.norm()) : Vec<D>::Zero();
    return kappa * p * shifted_power(s, p - 2.0) * (Mat<D>::Identity() + (p - 2.0) * dir * dir.transpose());
  }
};

}  // namespace assembly_detail

template <int D>
EnergyBreakdown energy_breakdown(const DiscreteField<D>& field, const ProblemSpec<D>& spec) {
  assembly_detail::check_field(field, spec);
  const Mesh<D>& mesh = *spec.mesh;
  const auto& quad = mesh.quadrature(spec.quadrature_order);
  const int nq = quad.per_element();
  const assembly_detail::Fidelity<D> fid{spec.params.kappa, spec.params.p, 0.0};
  std::vector<double> bulk(mesh.element_count());
  std::vector<double> fidelity(mesh.element_count(), 0.0);
  parallel_for(mesh.element_count(), [&](std::size_t e) {
    const int el = static_cast<int>(e);
    bulk[e] = mesh.element(el).volume * energy_density(field.sym_gradient(el), spec.params, spec.elastic);
    if (fid.kappa > 0.0) {
      double acc = 0.0;
      for (int q = 0; q < nq; ++q) {
        const int gq = el * nq + q;
        const Vec<D> w = field.evaluate(el, quad.bary(gq)) - spec.g.evaluate(el, quad.bary(gq));
        acc += quad.weight(gq) * fid.value(w);
      }
      fidelity[e] = acc;
    }
  });
  EnergyBreakdown out;
  for (int e = 0; e < mesh.element_count(); ++e) {
    out.bulk += bulk[e];
    out.fidelity += fidelity[e];
  }
  if (spec.L) out.penalty = field.values().dot(mesh.jump_operator() * field.values()) / (2.0 * *spec.L);
  return out;
}

template <int D>
double assemble_energy(const DiscreteField<D>& field, const ProblemSpec<D>& spec) {
  return energy_breakdown(field, spec).total();
}

template <int D>
AssembledGradient assemble_gradient(const DiscreteField<D>& field, const ProblemSpec<D>& spec) {
  assembly_detail::check_field(field, spec);
  const Mesh<D>& mesh = *spec.mesh;
  const auto& quad = mesh.quadrature(spec.quadrature_order);
  const int nq = quad.per_element();
  const assembly_detail::Fidelity<D> fid{spec.params.kappa, spec.params.p, 0.0};
  constexpr int local = D * (D + 1);
  std::vector<Eigen::Matrix<double, local, 1>> slots(mesh.element_count());
  parallel_for(mesh.element_count(), [&](std::size_t e) {
    const int el = static_cast<int>(e);
    const auto& elem = mesh.element(el);
    const Mat<D> sigma = stress(field.sym_gradient(el), spec.params, spec.elastic).matrix();
    Eigen::Matrix<double, local, 1> r;
    for (int a = 0; a <= D; ++a) r.template segment<D>(a * D) = elem.volume * sigma * elem.grads[a];
    if (fid.kappa > 0.0) {
      for (int q = 0; q < nq; ++q) {
        const int gq = el * nq + q;
        const auto& b = quad.bary(gq);
        const Vec<D> w = field.evaluate(el, b) - spec.g.evaluate(el, b);
        const Vec<D> dw = quad.weight(gq) * fid.gradient(w);
        for (int a = 0; a <= D; ++a) r.template segment<D>(a * D) += b[a] * dw;
      }
    }
    slots[e] = r;
  });
  Eigen::VectorXd full = Eigen::VectorXd::Zero(mesh.dof_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& elem = mesh.element(e);
    for (int a = 0; a <= D; ++a) full.template segment<D>(elem.nodes[a] * D) += slots[e].template segment<D>(a * D);
  }
  if (spec.L) full += (mesh.jump_operator() * field.values()) / *spec.L;
  AssembledGradient out{full, Eigen::VectorXd::Zero(full.size())};
  for (int n = 0; n < mesh.node_count(); ++n)
    if (spec.constrained[n]) {
      out.reaction.template segment<D>(n * D) = full.template segment<D>(n * D);
      out.free.template segment<D>(n * D).setZero();
    }
  return out;
}

/// Hessian over all dofs (constraints are applied by the caller).
template <int D>
Eigen::SparseMatrix<double> assemble_hessian(const DiscreteField<D>& field, const ProblemSpec<D>& spec,
                                             const HessianFloors& floors) {
  assembly_detail::check_field(field, spec);
  const Mesh<D>& mesh = *spec.mesh;
  const auto& quad = mesh.quadrature(spec.quadrature_order);
  const int nq = quad.per_element();
  const assembly_detail::Fidelity<D> fid{spec.params.kappa, spec.params.p, floors.fidelity};
  constexpr int local = D * (D + 1);
  using Block = Eigen::Matrix<double, local, local>;
  std::vector<Block> slots(mesh.element_count());
  parallel_for(mesh.element_count(), [&](std::size_t e) {
    const int el = static_cast<int>(e);
    const auto& elem = mesh.element(el);
    const SymMatrix<D> strain = field.sym_gradient(el);
    const Tensor4<D> t = floors.tangent > 0.0 ? floored_tangent(strain, spec.params, spec.elastic, floors.tangent)
                                              : tangent(strain, spec.params, spec.elastic);
    Block k = Block::Zero();
    for (int a = 0; a <= D; ++a)
      for (int b = 0; b <= D; ++b)
        for (int i = 0; i < D; ++i)
          for (int c = 0; c < D; ++c) {
            double v = 0.0;
            for (int j = 0; j < D; ++j)
              for (int l = 0; l < D; ++l) v += t(i, j, c, l) * elem.grads[a](j) * elem.grads[b](l);
            k(a * D + i, b * D + c) = elem.volume * v;
          }
    if (fid.kappa > 0.0) {
      for (int q = 0; q < nq; ++q) {
        const int gq = el * nq + q;
        const auto& bc = quad.bary(gq);
        const Vec<D> w = field.evaluate(el, bc) - spec.g.evaluate(el, bc);
        const Mat<D> h = quad.weight(gq) * fid.hessian(w);
        for (int a = 0; a <= D; ++a)
          for (int b = 0; b <= D; ++b) k.template block<D, D>(a * D, b * D) += bc[a] * bc[b] * h;
      }
    }
    slots[e] = 0.5 * (k + k.transpose());
  });
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.element_count()) * local * local);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const auto& elem = mesh.element(e);
    for (int a = 0; a <= D; ++a)
      for (int b = 0; b <= D; ++b)
        for (int i = 0; i < D; ++i)
          for (int c = 0; c < D; ++c)
            trips.emplace_back(elem.nodes[a] * D + i, elem.nodes[b] * D + c, slots[e](a * D + i, b * D + c));
  }
  Eigen::SparseMatrix<double> h(mesh.dof_count(), mesh.dof_count());
  h.setFromTriplets(trips.begin(), trips.end());
  if (spec.L) h += mesh.jump_operator() / *spec.L;
  return h;
}

/// Exact Hessian; in the sub-quadratic degenerate case (p < 2, mu = 0) a set L selects a floored tangent.
template <int D>
Eigen::SparseMatrix<double> assemble_hessian(const DiscreteField<D>& field, const ProblemSpec<D>& spec) {
  HessianFloors floors;
  if (spec.L && spec.params.p < 2.0 && spec.params.mu == 0.0) floors.tangent = 1e-10;
  return assemble_hessian(field, spec, floors);
}

}  // namespace pgrowth
