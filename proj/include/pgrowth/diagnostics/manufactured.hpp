#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <type_traits>

#include "pgrowth/fem/problem.hpp"
#include "pgrowth/tensor/constitutive.hpp"

namespace pgrowth {

/// Closed-form target field with an optional closed-form Jacobian (d value_i / d x_j).
template <int D>
struct ManufacturedField {
  std::function<Vec<D>(const Vec<D>&)> value;
  std::function<Mat<D>(const Vec<D>&)> jacobian;
  /// Optional closed-form div grad f_mu(e(u*)); finite differences are used otherwise.
  std::function<Vec<D>(const Vec<D>&)> divergence;
};

template <int D>
struct ManufacturedProblem {
  ProblemSpec<D> spec;
  int degenerate_nodes = 0;  // nodes where the inversion met v = 0 with p < 2 and returned w = 0
};

namespace manufactured_detail {

// 4th-order central difference of f along axis j
template <class F, class X>
auto central4(const F& f, const X& x, int j, double step) {
  using R = std::decay_t<decltype(f(x))>;
  auto shifted = [&](double s) -> R {
    X y = x;
    y(j) += s;
    return f(y);
  };
  const R r = ((shifted(-2 * step) - shifted(2 * step)) + 8.0 * (shifted(step) - shifted(-step))) / (12.0 * step);
  return r;
}

}  // namespace manufactured_detail

/// Unique w with kappa p |w|^{p-2} w = v.
template <int D>
Vec<D> invert_fidelity(const Vec<D>& v, double kappa, double p) {
  const Vec<D> z = v / (kappa * p);
  const double s = z.norm();
  if (s == 0.0) return Vec<D>::Zero();
  return shifted_power(s, (2.0 - p) / (p - 1.0)) * z;
}

/// div grad f_mu(e(u*)) at x, by 4th-order central differences of the closed-form stress.
template <int D>
Vec<D> stress_divergence(const ManufacturedField<D>& target, const GrowthParams& params, const ElasticTensor<D>& elastic,
                         const Vec<D>& x, double step) {
  using manufactured_detail::central4;
  auto jac = [&](const Vec<D>& y) -> Mat<D> {
    if (target.jacobian) return target.jacobian(y);
    Mat<D> j;
    for (int c = 0; c < D; ++c) j.col(c) = central4(target.value, y, c, step);
    return j;
  };
  auto sigma = [&](const Vec<D>& y) -> Mat<D> { return stress(SymMatrix<D>::from(jac(y)), params, elastic).matrix(); };
  Vec<D> div = Vec<D>::Zero();
  for (int j = 0; j < D; ++j) div += central4(sigma, x, j, step).col(j);
  // below the rounding noise of the difference quotients the divergence is indistinguishable
  // from zero; flushing it keeps p > 2 inversions (w ~ |v|^{1/(p-1)}) from amplifying noise
  const double noise = 1e3 * std::numeric_limits<double>::epsilon() * std::max(sigma(x).norm(), 1e-300) / step;
  if (div.norm() <= noise) div.setZero();
  return div;
}

/// Problem whose continuous minimizer is u*: Dirichlet data u*, fidelity datum g = u* - w with
/// kappa p |w|^{p-2} w = div grad f_mu(e(u*)).
template <int D>
ManufacturedProblem<D> manufactured_problem(const ManufacturedField<D>& target, const GrowthParams& params,
                                            const ElasticTensor<D>& elastic, MeshPtr<D> mesh, bool strict = false) {
  params.validate();
  if (!(params.kappa > 0.0)) throw DomainError("manufactured problems need kappa > 0");
  if (!target.value) throw DomainError("manufactured problems need a closed-form target");
  ManufacturedProblem<D> out;
  out.spec = ProblemSpec<D>::make(mesh, params, elastic);
  out.spec.set_dirichlet(target.value);
  const double step = 1e-2 * mesh->max_spacing();
  DiscreteField<D> g(mesh);
  for (int n = 0; n < mesh->node_count(); ++n) {
    const Vec<D>& x = mesh->node(n);
    const Vec<D> v = target.divergence ? target.divergence(x) : stress_divergence(target, params, elastic, x, step);
    if (params.p < 2.0 && v.norm() == 0.0) {
      if (strict) throw DegenerateInversion("div grad f_mu(e(u*)) vanishes at node " + std::to_string(n));
      ++out.degenerate_nodes;
    }
    g.set_node(n, target.value(x) - invert_fidelity<D>(v, params.kappa, params.p));
  }
  out.spec.g = g;
  return out;
}

}  // namespace pgrowth
