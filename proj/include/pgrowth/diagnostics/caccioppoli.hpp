#pragma once

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "pgrowth/diagnostics/excess.hpp"
#include "pgrowth/fem/problem.hpp"
#include "pgrowth/tensor/exponents.hpp"

namespace pgrowth {

struct CaccioppoliTerm {
  std::string name;
  double value = 0.0;
};

/// Both sides of the Caccioppoli inequality on B_r / B_2r, every right-hand term with unit constant.
struct CaccioppoliReport {
  std::string regime;  // "superquadratic" (p >= 2) or "subquadratic" (p < 2)
  double radius = 0.0;
  double lambda = 0.0;
  double lhs = 0.0;
  std::vector<CaccioppoliTerm> rhs_terms;
  double empirical_c = 0.0;

  [[nodiscard]] double rhs_total() const {
    double s = 0.0;
    for (const auto& t : rhs_terms) s += t.value;
    return s;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j{{"regime", regime}, {"radius", radius}, {"lambda", lambda}, {"lhs", lhs}, {"empirical_c", empirical_c}};
    j["rhs_terms"] = nlohmann::json::object();
    for (const auto& t : rhs_terms) j["rhs_terms"][t.name] = t.value;
    return j;
  }
};

template <int D>
CaccioppoliReport caccioppoli_report(const DiscreteField<D>& u, const ProblemSpec<D>& spec, const Vec<D>& center, double r,
                                     double lambda) {
  const GrowthParams& params = spec.params;
  const double p = params.p;
  const double kappa = params.kappa;
  CaccioppoliReport rep;
  rep.radius = r;
  rep.lambda = lambda;
  rep.regime = p >= 2.0 ? "superquadratic" : "subquadratic";
  double fidelity_exponent = p;
  if (p >= 2.0) {
    fidelity_exponent = ptilde(lambda, params);  // throws DomainError outside (1/(p-1), 1]
    if (lambda < lambda0(params)) throw DomainError("lambda below lambda0 = " + std::to_string(lambda0(params)));
  } else if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("lambda must be >= 0 for p < 2");
  }
  u.check_same(spec.g);
  const BallRegion<D> inner(u.mesh_ptr(), Ball<D>{center, r});
  const BallRegion<D> outer(u.mesh_ptr(), Ball<D>{center, 2.0 * r});

  const auto v = element_v(u, params);
  const auto grad_v2 = element_gradient_sq(u.mesh(), v);
  rep.lhs = inner.element_integral([&](int e) { return grad_v2[e]; });

  const SymMatrix<D> v_mean = outer.element_mean([&](int e) { return v[e]; });
  const double oscillation = outer.element_integral([&](int e) { return SymMatrix<D>(v[e] - v_mean).squared_norm(); });
  rep.rhs_terms.push_back({"oscillation", (1.0 + kappa) / (r * r) * oscillation});

  const DiscreteField<D> diff = u - spec.g;
  const auto& quad = u.mesh().quadrature(outer.order());
  auto diff_power = [&](double s) {
    return outer.integral([&](int g) {
      const int e = quad.element_of(g);
      return shifted_power(diff.evaluate(e, quad.bary(g)).squaredNorm(), 0.5 * s);
    });
  };
  if (p >= 2.0) {
    const double weight = kappa * std::pow(r, 2.0 / (p - 1.0));
    rep.rhs_terms.push_back({"fidelity", weight * diff_power(fidelity_exponent)});
    rep.rhs_terms.push_back({"fidelity_gradient", weight * outer.element_integral([&](int e) {
                                                     return shifted_power(diff.gradient(e).squaredNorm(), 0.5 * lambda * p);
                                                   })});
  } else {
    rep.rhs_terms.push_back({"fidelity", kappa * std::pow(r, lambda * p / (p - 1.0)) * diff_power(p)});
    const double weight = kappa / std::pow(r, 2.0 * lambda * p / (2.0 - p));
    rep.rhs_terms.push_back({"v_mass", weight * outer.element_integral([&](int e) { return v[e].squared_norm(); })});
    rep.rhs_terms.push_back({"shift", weight * std::pow(params.mu, 0.5 * p) * std::pow(r, D)});
  }
  const double total = rep.rhs_total();
  rep.empirical_c = rep.lhs == 0.0 ? 0.0 : rep.lhs / total;
  return rep;
}

}  // namespace pgrowth
