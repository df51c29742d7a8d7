#pragma once

#include <cmath>
#include <limits>

#include "pgrowth/tensor/types.hpp"

namespace pgrowth {

/// base^expo for base >= 0 via exp/log. Bases below 1e-300 are treated as zero:
/// 0^expo is 0, 1 or +inf for positive, zero and negative exponents.
inline double shifted_power(double base, double expo) {
  if (expo == 0.0) return 1.0;
  if (base < 1e-300) return expo > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::exp(expo * std::log(base));
}

/// f_mu(xi) = ((C xi . xi + mu)^{p/2} - mu^{p/2}) / p
template <int D>
double energy_density(const SymMatrix<D>& xi, const GrowthParams& params, const ElasticTensor<D>& c) {
  const double q = std::max(0.0, c.apply(xi).dot(xi));
  const double half_p = 0.5 * params.p;
  if (params.mu > 0.0) {
    // mu^{p/2} ((1 + q/mu)^{p/2} - 1) without cancellation for q << mu
    return shifted_power(params.mu, half_p) * std::expm1(half_p * std::log1p(q / params.mu)) / params.p;
  }
  return shifted_power(q, half_p) / params.p;
}

/// grad f_mu(xi) = (C xi . xi + mu)^{p/2-1} C xi, zero at xi = 0 when mu = 0.
template <int D>
SymMatrix<D> stress(const SymMatrix<D>& xi, const GrowthParams& params, const ElasticTensor<D>& c) {
  const SymMatrix<D> cxi = c.apply(xi);
  const double base = std::max(0.0, cxi.dot(xi)) + params.mu;
  if (base == 0.0) return SymMatrix<D>::zero();
  return shifted_power(base, 0.5 * params.p - 1.0) * cxi;
}

/// Hessian (C xi.xi + mu)^{p/2-2} ((p-2) C xi (x) C xi + (C xi.xi + mu) C).
/// Throws UndefinedHessian at xi = 0 when mu = 0 and p < 2.
template <int D>
Tensor4<D> tangent(const SymMatrix<D>& xi, const GrowthParams& params, const ElasticTensor<D>& c) {
  const SymMatrix<D> cxi = c.apply(xi);
  const double base = std::max(0.0, cxi.dot(xi)) + params.mu;
  if (base == 0.0) {
    if (params.p > 2.0) return Tensor4<D>();
    if (params.p == 2.0) return c.tensor();
    throw UndefinedHessian("tangent at zero strain with mu = 0 and p < 2");
  }
  const double scale = shifted_power(base, 0.5 * params.p - 2.0);
  Tensor4<D> t = (params.p - 2.0) * Tensor4<D>::outer(cxi, cxi);
  t += base * c.tensor();
  t *= scale;
  return t;
}

/// Tangent with C xi.xi floored at `floor`; finite in the degenerate sub-quadratic regime.
template <int D>
Tensor4<D> floored_tangent(const SymMatrix<D>& xi, const GrowthParams& params, const ElasticTensor<D>& c,
                           double floor) {
  const SymMatrix<D> cxi = c.apply(xi);
  const double base = std::max(floor, std::max(0.0, cxi.dot(xi)) + params.mu);
  Tensor4<D> t = (params.p - 2.0) * Tensor4<D>::outer(cxi, cxi);
  t += base * c.tensor();
  t *= shifted_power(base, 0.5 * params.p - 2.0);
  return t;
}

/// V_mu(xi) = (mu + |xi|^2)^{(p-2)/4} xi on arbitrary square matrices (and vectors).
template <typename Derived>
auto v_transform(const Eigen::MatrixBase<Derived>& xi, const GrowthParams& params) {
  using Plain = typename Derived::PlainObject;
  const double base = params.mu + xi.squaredNorm();
  if (base == 0.0) return Plain(Plain::Zero(xi.rows(), xi.cols()));
  return Plain(shifted_power(base, 0.25 * (params.p - 2.0)) * xi);
}

template <int D>
SymMatrix<D> v_transform(const SymMatrix<D>& xi, const GrowthParams& params) {
  const double base = params.mu + xi.squared_norm();
  if (base == 0.0) return SymMatrix<D>::zero();
  return shifted_power(base, 0.25 * (params.p - 2.0)) * xi;
}

/// |V_mu(xi)| as a function of s = |xi|.
inline double v_magnitude(double s, const GrowthParams& params) {
  const double base = params.mu + s * s;
  if (base == 0.0) return 0.0;
  return shifted_power(base, 0.25 * (params.p - 2.0)) * s;
}

/// Inverse of V_mu: the radial profile s -> |V_mu| is strictly increasing, so the
/// preimage is V scaled by the root s of |V_mu|(s) = |V|.
template <typename Derived>
auto v_inverse(const Eigen::MatrixBase<Derived>& v, const GrowthParams& params) {
  using Plain = typename Derived::PlainObject;
  const double target = v.norm();
  if (target == 0.0) return Plain(Plain::Zero(v.rows(), v.cols()));
  if (params.p == 2.0) return Plain(v);
  double lo = 0.0;
  double hi = std::max(1e-300, target);
  while (v_magnitude(hi, params) < target) hi *= 2.0;
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double base = params.mu + s * s;
    const double val = v_magnitude(s, params) - target;
    if (val > 0.0) hi = s;
    else lo = s;
    // d|V|/ds = base^{(p-2)/4 - 1} (mu + p s^2 / 2)
    const double deriv = shifted_power(base, 0.25 * (params.p - 2.0) - 1.0) * (params.mu + 0.5 * params.p * s * s);
    double next = s - val / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-16 * std::max(s, 1e-300)) {
      s = next;
      break;
    }
    s = next;
  }
  return Plain(v * (s / target));
}

}  // namespace pgrowth
