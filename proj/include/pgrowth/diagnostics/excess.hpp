#pragma once

#include <json.hpp>

#include <cmath>
#include <vector>

#include "pgrowth/diagnostics/vfield.hpp"
#include "pgrowth/fem/ball.hpp"

namespace pgrowth {

template <int D>
nlohmann::json sym_to_json(const SymMatrix<D>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < D; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < D; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

template <int D>
nlohmann::json vec_to_json(const Vec<D>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < D; ++i) out.push_back(v(i));
  return out;
}

/// Exc(x, r) = mean over B_r(x) of |V_mu(e(u) - (e(u))_B)|^2, together with the mean strain.
template <int D>
struct ExcessValue {
  double excess = 0.0;
  SymMatrix<D> mean_strain;
};

template <int D>
ExcessValue<D> excess_on(const BallRegion<D>& region, const std::vector<SymMatrix<D>>& strain, const GrowthParams& params) {
  ExcessValue<D> out;
  out.mean_strain = region.element_mean([&](int e) { return strain[e]; });
  out.excess = region.element_mean([&](int e) { return v_transform(SymMatrix<D>(strain[e] - out.mean_strain), params).squared_norm(); });
  return out;
}

template <int D>
double excess(const DiscreteField<D>& u, const GrowthParams& params, const Ball<D>& ball) {
  const BallRegion<D> region(u.mesh_ptr(), ball);
  return excess_on(region, element_strain(u), params).excess;
}

template <int D>
struct ExcessTable {
  Vec<D> center;
  double tau = 0.5;
  double ratio_bound = 0.0;  // C tau^2 used for flags
  std::vector<double> radii;
  std::vector<double> excess;
  std::vector<SymMatrix<D>> mean_strain;
  std::vector<double> ratio;  // excess[k+1] / excess[k]; NaN when excess[k] = 0
  std::vector<bool> flagged;  // ratio above ratio_bound

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["center"] = vec_to_json(center);
    j["tau"] = tau;
    j["ratio_bound"] = ratio_bound;
    j["levels"] = nlohmann::json::array();
    for (std::size_t k = 0; k < radii.size(); ++k) {
      nlohmann::json row{{"level", k}, {"radius", radii[k]}, {"excess", excess[k]}, {"mean_strain", sym_to_json(mean_strain[k])}};
      if (k + 1 < radii.size()) {
        row["ratio_to_next"] = std::isfinite(ratio[k]) ? nlohmann::json(ratio[k]) : nlohmann::json(nullptr);
        row["flagged"] = static_cast<bool>(flagged[k]);
      }
      j["levels"].push_back(row);
    }
    return j;
  }
};

/// Exc(x, tau^k r0) for k < levels, with the per-level ratios flagged against C tau^2.
template <int D>
ExcessTable<D> excess_decay_table(const DiscreteField<D>& u, const GrowthParams& params, const Vec<D>& center, double r0,
                                  double tau, int levels, double c_bound = 1.5) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0,1)");
  if (levels < 1) throw DomainError("levels must be >= 1");
  ExcessTable<D> t;
  t.center = center;
  t.tau = tau;
  t.ratio_bound = c_bound * tau * tau;
  // check the smallest ball first so nothing is computed for an unresolvable table
  check_ball(u.mesh(), Ball<D>{center, r0 * std::pow(tau, levels - 1)});
  const auto strain = element_strain(u);
  for (int k = 0; k < levels; ++k) {
    const double r = r0 * std::pow(tau, k);
    const BallRegion<D> region(u.mesh_ptr(), Ball<D>{center, r});
    const auto ev = excess_on(region, strain, params);
    t.radii.push_back(r);
    t.excess.push_back(ev.excess);
    t.mean_strain.push_back(ev.mean_strain);
  }
  for (int k = 0; k + 1 < levels; ++k) {
    const double r = t.excess[k] > 0.0 ? t.excess[k + 1] / t.excess[k] : std::nan("");
    t.ratio.push_back(r);
    t.flagged.push_back(std::isfinite(r) && r > t.ratio_bound);
  }
  return t;
}

template <int D>
struct DecayFit {
  Vec<D> center;
  std::vector<double> radii;
  std::vector<double> mass;  // int over B_rho of |V_mu(e(u))|^2
  double fitted_gamma = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the log-log fit residuals

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["center"] = vec_to_json(center);
    j["fitted_gamma"] = fitted_gamma;
    j["intercept"] = intercept;
    j["residual"] = residual;
    j["points"] = nlohmann::json::array();
    for (std::size_t k = 0; k < radii.size(); ++k) j["points"].push_back({{"radius", radii[k]}, {"mass", mass[k]}});
    return j;
  }
};

/// Slope of log int_{B_rho} |V_mu(e(u))|^2 against log rho (unweighted least squares).
template <int D>
DecayFit<D> decay_exponent(const DiscreteField<D>& u, const GrowthParams& params, const Vec<D>& center,
                           const std::vector<double>& radii) {
  if (radii.size() < 3) throw DomainError("decay fits need at least 3 radii");
  DecayFit<D> fit;
  fit.center = center;
  fit.radii = radii;
  for (double r : radii) check_ball(u.mesh(), Ball<D>{center, r});
  const auto v = element_v(u, params);
  for (double r : radii) {
    const BallRegion<D> region(u.mesh_ptr(), Ball<D>{center, r});
    fit.mass.push_back(region.element_integral([&](int e) { return v[e].squared_norm(); }));
  }
  const int n = static_cast<int>(radii.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (int k = 0; k < n; ++k) {
    if (!(fit.mass[k] > 0.0)) throw DomainError("decay fit needs positive masses; |V| vanishes on a ball");
    a(k, 0) = std::log(radii[k]);
    a(k, 1) = 1.0;
    b(k) = std::log(fit.mass[k]);
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  fit.fitted_gamma = coef(0);
  fit.intercept = coef(1);
  fit.residual = std::sqrt((a * coef - b).squaredNorm() / n);
  return fit;
}

}  // namespace pgrowth
