#pragma once

#include "pgrowth/core/quadrature.hpp"

#include "pgrowth/tensor/constitutive.hpp"

namespace pgrowth {

/// Base strain A_h, scale lambda_h and limit strain A of a blow-up sequence.
template <int D>
struct BlowupParams {
  SymMatrix<D> base;
  double lambda = 1.0;
  SymMatrix<D> limit;
};

namespace detail {
template <int D>
void check_blowup(const BlowupParams<D>& bp, const GrowthParams& params) {
  if (!(params.mu > 0.0)) throw DomainError("blow-up functionals require mu > 0");
  if (!(bp.lambda > 0.0)) throw DomainError("blow-up scale must be > 0");
}
}  // namespace detail

/// F_h(xi) = lambda^{-2} (f(A_h + lambda xi) - f(A_h) - lambda <grad f(A_h), xi>).
///
/// Evaluated through the Taylor remainder int_0^1 <D^2 f(A_h + t lambda xi) xi, xi> (1-t) dt,
/// which stays accurate as lambda -> 0 where the defining difference cancels.
template <int D>
double blowup_integrand(const SymMatrix<D>& xi, const BlowupParams<D>& bp, const GrowthParams& params,
                        const ElasticTensor<D>& c) {
  detail::check_blowup(bp, params);
  if (xi.squared_norm() == 0.0) return 0.0;
  auto integrand = [&](double t) {
    const SymMatrix<D> at = bp.base + (t * bp.lambda) * xi;
    return tangent(at, params, c).contract(xi, xi) * (1.0 - t);
  };
  return adaptive_integrate(integrand, 0.0, 1.0, 1e-12).value;
}

/// F_inf(xi) = <D^2 f(A) xi, xi> / 2.
template <int D>
double blowup_limit(const SymMatrix<D>& xi, const BlowupParams<D>& bp, const GrowthParams& params,
                    const ElasticTensor<D>& c) {
  detail::check_blowup(bp, params);
  return 0.5 * tangent(bp.limit, params, c).contract(xi, xi);
}

}  // namespace pgrowth
