#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <utility>

#include "pgrowth/tensor/constitutive.hpp"

namespace pgrowth {

/// The shifted N-function phi_a(t) = int_0^t (mu + (a+s)^2)^{p/2-1} s ds and its polar.
///
/// No closed form exists for general p, so the value is a graded composite Gauss-Legendre
/// integral (error well below 1e-10 (1 + phi_a(t))). The derivatives are exact.
/// The polar phi_a^*(s) = sup_t (s t - phi_a(t)) is evaluated at the unique maximizer
/// t* solving phi_a'(t*) = s, found by a bracketed Newton iteration.
class ShiftedNFunction {
 public:
  ShiftedNFunction(double a, const GrowthParams& params) : a_(a), p_(params.p), mu_(params.mu) {
    if (!(a >= 0.0)) throw DomainError("shift a must be >= 0");
  }

  [[nodiscard]] double shift() const { return a_; }

  [[nodiscard]] double value(double t) const {
    if (!(t >= 0.0)) throw DomainError("phi_a argument must be >= 0");
    if (t == 0.0) return 0.0;
    if (p_ == 2.0) return 0.5 * t * t;
    if (mu_ == 0.0 && a_ == 0.0) return shifted_power(t, p_) / p_;
    const double expo = 0.5 * p_ - 1.0;
    auto integrand = [&](double s) {
      const double w = a_ + s;
      return shifted_power(mu_ + w * w, expo) * s;
    };
    // The integrand is analytic except at s = -a +- i sqrt(mu). Panels are at most twice as long as
    // the distance from their left end to that point, so a 20-point Gauss rule is accurate to ~1e-20.
    double total = 0.0;
    double left = 0.0;
    while (left < t) {
      const double w = a_ + left;
      const double len = 2.0 * std::sqrt(mu_ + w * w);
      const double right = left + len >= t ? t : left + len;
      total += boost::math::quadrature::gauss<double, 20>::integrate(integrand, left, right);
      left = right;
    }
    return total;
  }

  [[nodiscard]] double derivative(double t) const {
    const double w = a_ + t;
    if (t == 0.0) return 0.0;
    return shifted_power(mu_ + w * w, 0.5 * p_ - 1.0) * t;
  }

  [[nodiscard]] double second_derivative(double t) const {
    const double w = a_ + t;
    const double base = mu_ + w * w;
    return shifted_power(base, 0.5 * p_ - 2.0) * (base + (p_ - 2.0) * w * t);
  }

  /// Solves phi_a'(t) = s for t >= 0.
  [[nodiscard]] double derivative_inverse(double s) const {
    if (!(s >= 0.0)) throw DomainError("phi_a^* argument must be >= 0");
    if (s == 0.0) return 0.0;
    if (p_ == 2.0) return s;
    double lo = 0.5;
    double hi = 1.0;
    while (derivative(hi) < s) {
      lo = hi;
      hi *= 2.0;
    }
    while (derivative(lo) > s && lo > 1e-300) {
      hi = lo;
      lo *= 0.5;
    }
    auto residual = [&](double t) {
      const double d2 = t > 0.0 ? second_derivative(t) : 0.0;
      return std::make_pair(derivative(t) - s, d2);
    };
    std::uintmax_t iterations = 200;
    return boost::math::tools::newton_raphson_iterate(residual, 0.5 * (lo + hi), lo, hi, 50, iterations);
  }

  [[nodiscard]] double conjugate(double s) const {
    if (s == 0.0) return 0.0;
    if (p_ == 2.0) return 0.5 * s * s;
    const double t = derivative_inverse(s);
    return s * t - value(t);
  }

 private:
  double a_;
  double p_;
  double mu_;
};

inline double shifted_n_function(double a, double t, const GrowthParams& params) {
  return ShiftedNFunction(a, params).value(t);
}

inline double shifted_conjugate(double a, double s, const GrowthParams& params) {
  return ShiftedNFunction(a, params).conjugate(s);
}

}  // namespace pgrowth
