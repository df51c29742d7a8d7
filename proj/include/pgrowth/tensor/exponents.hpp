#pragma once

#include <cmath>
#include <string>

#include "pgrowth/tensor/types.hpp"

namespace pgrowth {

/// Sobolev exponent s* = n s / (n - s) for s < n. For s >= n any exponent above n is
/// admissible; this library fixes s* = 2 max(n, s).
inline double sobolev_exponent(double s, int n) {
  if (s < n) return n * s / (n - s);
  return 2.0 * std::max<double>(n, s);
}

/// p~(lambda) = lambda p (p-2) / (lambda (p-1) - 1) on (1/(p-1), 1].
/// At p = 2 only lambda = 1 is admissible and p~ is the Sobolev exponent p*.
inline double ptilde(double lambda, const GrowthParams& params) {
  const double p = params.p;
  if (p < 2.0) throw DomainError("ptilde requires p >= 2");
  if (p == 2.0) {
    if (lambda != 1.0) throw DomainError("ptilde at p = 2 is defined only for lambda = 1");
    return sobolev_exponent(p, params.dim);
  }
  const double lower = 1.0 / (p - 1.0);
  if (!(lambda > lower && lambda <= 1.0))
    throw DomainError("lambda = " + std::to_string(lambda) + " outside (1/(p-1), 1]");
  return lambda * p * (p - 2.0) / (lambda * (p - 1.0) - 1.0);
}

/// Solves p~(lambda) = target for lambda; requires target >= p (p~ decreases from +inf to p).
inline double ptilde_inverse(double target, const GrowthParams& params) {
  const double p = params.p;
  if (!(p > 2.0)) throw DomainError("ptilde_inverse requires p > 2");
  if (!(target >= p)) throw DomainError("ptilde takes values in [p, inf)");
  return target / (target * (p - 1.0) - p * (p - 2.0));
}

/// lambda_0 with p~(lambda_0) = p* when p < n, and 1/(p-1) otherwise; 1 at p = 2.
inline double lambda0(const GrowthParams& params) {
  const double p = params.p;
  if (p < 2.0) throw DomainError("lambda0 requires p >= 2");
  if (p == 2.0) return 1.0;
  if (p < params.dim) return ptilde_inverse(sobolev_exponent(p, params.dim), params);
  return 1.0 / (p - 1.0);
}

}  // namespace pgrowth
