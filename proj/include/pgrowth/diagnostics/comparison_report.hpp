#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pgrowth/diagnostics/excess.hpp"
#include "pgrowth/solver/comparison.hpp"

namespace pgrowth {

template <int D>
struct ReferenceComparison {
  SymMatrix<D> xi;
  double lhs1 = 0.0;  // int_B |V(e w) - V(xi)|^2
  double rhs1 = 0.0;  // int_B |V(e u) - V(xi)|^2
  double ratio = 0.0;
};

/// Energy comparison between a solution u and the autonomous comparison map w on one ball.
template <int D>
struct ComparisonReport {
  Ball<D> ball;
  std::vector<ReferenceComparison<D>> references;
  double lhs2 = 0.0;  // int_B |V(e u) - V(e w)|^2
  double gap2 = 0.0;  // F0(u, B) - F0(w, B)
  double lhs2_over_gap2 = 0.0;
  double excess_u = 0.0;
  double excess_w = 0.0;
  double excess_ratio = 0.0;  // Exc_w / Exc_u, the empirical c0
  double mean_strain_drift = 0.0;  // |(e w)_B - (e u)_B| / |(e u)_B|, absolute if the mean vanishes
  double mean_strain_norm = 0.0;   // |(e u)_B|, the M of the c0 bound
  // element-wise range of [f(e w) - f(e u) - <grad f(e u), e w - e u>] / |V(e w) - V(e u)|^2
  double bridge_min = 0.0;
  double bridge_max = 0.0;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j{{"ball", {{"center", vec_to_json(ball.center)}, {"radius", ball.radius}}},
                     {"lhs2", lhs2},
                     {"gap2", gap2},
                     {"lhs2_over_gap2", lhs2_over_gap2},
                     {"excess_u", excess_u},
                     {"excess_w", excess_w},
                     {"excess_ratio", excess_ratio},
                     {"mean_strain_drift", mean_strain_drift},
                     {"mean_strain_norm", mean_strain_norm},
                     {"bridge_min", bridge_min},
                     {"bridge_max", bridge_max}};
    j["references"] = nlohmann::json::array();
    for (const auto& r : references)
      j["references"].push_back({{"xi", sym_to_json(r.xi)}, {"lhs1", r.lhs1}, {"rhs1", r.rhs1}, {"ratio", r.ratio}});
    return j;
  }
};

namespace comparison_detail {
// 0/0 counts as ratio 0: both sides vanish when w = u
inline double safe_ratio(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}
}  // namespace comparison_detail

template <int D>
ComparisonReport<D> comparison_report(const Solution<D>& u, const ProblemSpec<D>& spec, const Ball<D>& ball,
                                      const std::vector<SymMatrix<D>>& xi_list, const SolverOptions& opts = {}) {
  using comparison_detail::safe_ratio;
  const DiscreteField<D> w = solve_autonomous_comparison(u, ball, spec, opts);
  const GrowthParams& params = spec.params;
  const BallRegion<D> region(spec.mesh, ball);
  const auto strain_u = element_strain(u.field);
  const auto strain_w = element_strain(w);
  const auto v_u = element_v(u.field, params);
  const auto v_w = element_v(w, params);

  ComparisonReport<D> rep;
  rep.ball = ball;
  // elements outside the movable stars keep the strain of u, so their contributions cancel exactly
  rep.gap2 = region.element_integral([&](int e) {
    return energy_density(strain_u[e], params, spec.elastic) - energy_density(strain_w[e], params, spec.elastic);
  });
  if (rep.gap2 < -1e-10)
    throw MinimalityViolated("comparison map has higher energy than u on the ball (gap " + sci(rep.gap2) + ")");
  rep.lhs2 = region.element_integral([&](int e) { return SymMatrix<D>(v_u[e] - v_w[e]).squared_norm(); });
  rep.lhs2_over_gap2 = safe_ratio(rep.lhs2, std::max(rep.gap2, 0.0));

  for (const auto& xi : xi_list) {
    ReferenceComparison<D> rc;
    rc.xi = xi;
    const SymMatrix<D> v_xi = v_transform(xi, params);
    rc.lhs1 = region.element_integral([&](int e) { return SymMatrix<D>(v_w[e] - v_xi).squared_norm(); });
    rc.rhs1 = region.element_integral([&](int e) { return SymMatrix<D>(v_u[e] - v_xi).squared_norm(); });
    rc.ratio = safe_ratio(rc.lhs1, rc.rhs1);
    rep.references.push_back(rc);
  }

  const auto exc_u = excess_on(region, strain_u, params);
  const auto exc_w = excess_on(region, strain_w, params);
  rep.excess_u = exc_u.excess;
  rep.excess_w = exc_w.excess;
  rep.excess_ratio = safe_ratio(rep.excess_w, rep.excess_u);
  rep.mean_strain_norm = exc_u.mean_strain.norm();
  const double drift = SymMatrix<D>(exc_w.mean_strain - exc_u.mean_strain).norm();
  rep.mean_strain_drift = rep.mean_strain_norm > 0.0 ? drift / rep.mean_strain_norm : drift;

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& [e, weight] : region.element_weights()) {
    const double dv = SymMatrix<D>(v_w[e] - v_u[e]).squared_norm();
    if (!(dv > 1e-14 * (1.0 + v_u[e].squared_norm()))) continue;
    const SymMatrix<D> step(strain_w[e] - strain_u[e]);
    const double bregman = energy_density(strain_w[e], params, spec.elastic) - energy_density(strain_u[e], params, spec.elastic) -
                           stress(strain_u[e], params, spec.elastic).dot(step);
    lo = std::min(lo, bregman / dv);
    hi = std::max(hi, bregman / dv);
  }
  rep.bridge_min = std::isfinite(lo) ? lo : 0.0;
  rep.bridge_max = hi;
  return rep;
}

}  // namespace pgrowth
