#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgrowth/core/parallel.hpp"
#include "pgrowth/core/quadrature.hpp"
#include "pgrowth/core/random.hpp"
#include "pgrowth/tensor/blowup.hpp"
#include "pgrowth/tensor/constitutive.hpp"
#include "pgrowth/tensor/n_function.hpp"

namespace pgrowth {

/// Quantitative statements that can be falsified by sampling.
enum class Lemma {
  tecnico,                // two-sided bound on int_0^1 (mu+|eta+t(xi-eta)|^2)^gamma (1-t)^r dt
  tecnico2,               // |h'(xi)-h'(eta)| ~ (mu+|xi|^2+|eta|^2)^gamma |xi-eta|
  vmu_comparison,         // |V(xi)-V(eta)| vs |V(xi-eta)| for |eta| <= L
  vmu_triangle,           // |V(xi+eta)| <= c (|V(xi)|+|V(eta)|)
  vmu_bounds,             // explicit two-sided bounds on |V(xi)|^2
  vmu_convexity,          // convexity of |V|^2 (p >= 2) or of its sub-quadratic comparison function
  stima_banana,           // |V|^2 <= (mu+|xi|^2)^{p/2} = |V|^2 + mu (mu+|xi|^2)^{p/2-1}
  diening_kaplicky,       // mean minimality of V-oscillation, discrete weighted form
  delta2,                 // lambda^{p^2} phi(t) <= phi(lambda t) <= lambda^{p v 2} phi(t)
  nabla2,                 // same for the polar with exponent p/(p-1)
  n_function_bounds,      // pointwise bounds on phi_a and the convexity sandwich
  polar_identity,         // phi*(phi'(t)) = phi'(t) t - phi(t)
  young,                  // s t <= delta phi*(s) + C phi(t)
  conjugate_equivalence,  // phi*(phi'(t)) ~ phi(t)
  phi_xi_vmu,             // phi_{|xi|}(|xi-eta|) <= c |V(xi)-V(eta)|^2
  bregman_linear,         // f(eta)-f(xi)-<grad f(xi), eta-xi> ~ |V(eta)-V(xi)|^2
  hessian_bounds,         // <D^2 f(xi) eta, eta> ~ (mu+|xi|^2)^{p/2-1} |eta|^2
  growth,                 // f(xi) ~ (mu+|xi|^2)^{p/2-1} |xi|^2
  growth_gradient,        // |grad f(xi)| <= c (mu+|xi|^2)^{p/2-1} |xi|
  blowup_sandwich,        // lambda^2 F_h(xi) ~ |V(lambda xi)|^2
  blowup_monotone,        // F_h(xi)-F_h(eta)-lambda^{-1}<...> >= c lambda^{-2}|V(A+lambda xi)-V(A+lambda eta)|^2
};

inline constexpr std::array<Lemma, 21> all_lemmas = {
    Lemma::tecnico,          Lemma::tecnico2,         Lemma::vmu_comparison, Lemma::vmu_triangle,
    Lemma::vmu_bounds,       Lemma::vmu_convexity,    Lemma::stima_banana,   Lemma::diening_kaplicky,
    Lemma::delta2,           Lemma::nabla2,           Lemma::n_function_bounds, Lemma::polar_identity,
    Lemma::young,            Lemma::conjugate_equivalence, Lemma::phi_xi_vmu, Lemma::bregman_linear,
    Lemma::hessian_bounds,   Lemma::growth,           Lemma::growth_gradient, Lemma::blowup_sandwich,
    Lemma::blowup_monotone,
};

inline std::string_view lemma_name(Lemma lemma) {
  switch (lemma) {
    case Lemma::tecnico: return "tecnico";
    case Lemma::tecnico2: return "tecnico2";
    case Lemma::vmu_comparison: return "vmu_comparison";
    case Lemma::vmu_triangle: return "vmu_triangle";
    case Lemma::vmu_bounds: return "vmu_bounds";
    case Lemma::vmu_convexity: return "vmu_convexity";
    case Lemma::stima_banana: return "stima_banana";
    case Lemma::diening_kaplicky: return "diening_kaplicky";
    case Lemma::delta2: return "delta2";
    case Lemma::nabla2: return "nabla2";
    case Lemma::n_function_bounds: return "n_function_bounds";
    case Lemma::polar_identity: return "polar_identity";
    case Lemma::young: return "young";
    case Lemma::conjugate_equivalence: return "conjugate_equivalence";
    case Lemma::phi_xi_vmu: return "phi_xi_vmu";
    case Lemma::bregman_linear: return "bregman_linear";
    case Lemma::hessian_bounds: return "hessian_bounds";
    case Lemma::growth: return "growth";
    case Lemma::growth_gradient: return "growth_gradient";
    case Lemma::blowup_sandwich: return "blowup_sandwich";
    case Lemma::blowup_monotone: return "blowup_monotone";
  }
  return "unknown";
}

inline Lemma parse_lemma(std::string_view name) {
  for (Lemma l : all_lemmas)
    if (lemma_name(l) == name) return l;
  throw UnsupportedLemma("no audit named '" + std::string(name) + "'");
}

/// Sampling configuration of one audit run.
struct SampleSpec {
  std::size_t count = 10000;
  GrowthParams params;
  std::uint64_t seed = 0;
  double gamma = 0.0;             // tecnico, tecnico2
  double r = 0.0;                 // tecnico
  double eta_bound = 10.0;        // vmu_comparison: samples conditioned on |eta| <= L
  double delta = 0.5;             // young
  double magnitude_cap = 1e3;     // bregman_linear: |xi|, |eta| <= cap
  double blowup_bound = 2.0;      // blow-up lemmas: |A_h| <= M
  int ball_points = 16;           // diening_kaplicky: points per discrete ball
  std::vector<double> scales = {1e-3, 1.0, 1e3};
};

struct InequalityAudit {
  std::string lemma_id;
  std::size_t samples = 0;
  std::size_t skipped = 0;     // degenerate samples (vanishing denominators)
  std::size_t violations = 0;  // samples breaking an explicit bound or identity
  double empirical_lo = std::numeric_limits<double>::infinity();
  double empirical_hi = -std::numeric_limits<double>::infinity();
  bool violated = false;
  nlohmann::json witness;

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"lemma_id", lemma_id},         {"samples", samples},       {"empirical_lo", empirical_lo},
            {"empirical_hi", empirical_hi}, {"violated", violated},     {"witness", witness},
            {"violations", violations},     {"skipped", skipped}};
  }
};

namespace audit_detail {

/// Per-sample result: the audited ratio plus the relative amount by which a hard bound failed.
struct Outcome {
  double ratio = 0.0;
  bool valid = true;
  double violation = 0.0;
};

inline Outcome skip() { return {0.0, false, 0.0}; }

/// Relative excess of `value` over `bound` (0 when within tolerance).
inline double excess_over(double value, double bound, double tol) {
  const double slack = tol * std::max(std::abs(bound), std::abs(value)) + 1e-300;
  return value > bound + slack ? (value - bound) / (std::abs(bound) + 1e-300) : 0.0;
}

class Sampler {
 public:
  Sampler(std::uint64_t seed, const std::vector<double>& scales) : rng_(seed), scales_(scales) {}

  double uniform() { return rng_.uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  double normal() { return rng_.normal(); }

  double scale() {
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(scales_.size()));
    return scales_[std::min(k, scales_.size() - 1)];
  }

  /// Positive scalar at a random scale.
  double magnitude() { return scale() * (std::abs(normal()) + 1e-3); }

  /// Shift a >= 0, zero with probability 1/8.
  double shift() { return uniform() < 0.125 ? 0.0 : magnitude(); }

  /// Growth factor lambda in [1.01, 100].
  double dilation() { return std::exp(uniform(std::log(1.01), std::log(100.0))); }

  /// Componentwise Gaussian symmetric matrices at mixed scales plus axis-aligned and rank-one specials.
  template <int D>
  SymMatrix<D> sym() {
    const double u = uniform();
    const double s = scale();
    Mat<D> m = Mat<D>::Zero();
    if (u < 0.7) {
      for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) m(i, j) = s * normal();
    } else if (u < 0.85) {
      const int i = static_cast<int>(uniform() * D) % D;
      const int j = uniform() < 0.5 ? i : static_cast<int>(uniform() * D) % D;
      m(i, j) = s * normal();
    } else {
      Vec<D> v;
      for (int i = 0; i < D; ++i) v(i) = normal();
      m = s * normal() * (v * v.transpose());
    }
    return SymMatrix<D>::from(m);
  }

 private:
  SplitMix64 rng_;
  const std::vector<double>& scales_;
};

template <int D>
nlohmann::json to_json(const SymMatrix<D>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < D; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < D; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

/// int_0^1 (floor + slope (t - t_min)^2)^gamma (1-t)^r dt, i.e. the integral of
/// (mu + |eta + t (xi-eta)|^2)^gamma (1-t)^r written around the point t_min of the line closest to
/// the origin, with floor = mu + |eta + t_min (xi-eta)|^2 and slope = |xi-eta|^2.
///
/// Singular and near-singular points are removed by substitution before Gauss-Kronrod: with a
/// positive floor t - t_min = c sinh(w), with a zero floor (gamma < 0) |t - t_min| = len v^{1/(2 gamma + 1)},
/// and near t = 1 (non-integer r) 1 - t = len y^3.
inline double tecnico_integral(double floor, double slope, double t_min, double gamma, double r) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  const double t0 = std::clamp(t_min, 0.0, 1.0);
  const double log_floor = floor > 0.0 ? 0.5 * std::log(floor) : neg_inf;
  const double log_slope = slope > 0.0 ? 0.5 * std::log(slope) : neg_inf;
  const bool gamma_singular = gamma < 0.0 && t0 == t_min && slope > 0.0;
  const bool tail_singular = r != std::floor(r);

  // log of the integrand at t, given log |t - t_min|, plus an additive log weight
  auto log_kernel = [&](double log_dist) {
    if (gamma == 0.0) return 0.0;
    const double x = log_floor;
    const double y = log_slope + log_dist;
    const double hi = std::max(x, y);
    if (hi == neg_inf) return gamma > 0.0 ? neg_inf : -neg_inf;
    return 2.0 * gamma * (hi + 0.5 * std::log1p(std::exp(2.0 * (std::min(x, y) - hi))));
  };
  auto tail = [r](double t) { return r == 0.0 ? 1.0 : shifted_power(std::max(0.0, 1.0 - t), r); };
  auto plain = [&](double t) {
    if (floor > 0.0) {
      const double d = t - t_min;
      return std::pow(floor + slope * d * d, gamma) * tail(t);
    }
    return std::exp(log_kernel(std::log(std::abs(t - t_min)))) * tail(t);
  };

  auto gk = [](auto&& f, double a, double b) { return adaptive_integrate(f, a, b, 1e-10).value; };
  // from the singular point t0 towards `to`
  auto from_singular = [&](double to) {
    const double len = std::abs(to - t0);
    const double dir = to > t0 ? 1.0 : -1.0;
    const double alpha = 2.0 * gamma + 1.0;
    auto f = [&](double v) {
      if (v <= 0.0) return 0.0;
      const double log_u = std::log(len) + std::log(v) / alpha;
      const double log_jac = (1.0 / alpha - 1.0) * std::log(v);
      return std::exp(log_kernel(log_u) + log_jac) * tail(t0 + dir * std::exp(log_u));
    };
    return len / alpha * gk(f, 0.0, 1.0);
  };
  // from `from` up to the singular endpoint t = 1 of the weight
  auto to_tail = [&](double from) {
    const double len = 1.0 - from;
    auto f = [&](double y) { return plain(1.0 - len * y * y * y) * 3.0 * len * y * y; };
    return gk(f, 0.0, 1.0);
  };

  if (floor > 0.0 && slope > 0.0 && gamma != 0.0) {
    // t - t_min = c sinh(w) with c the width of the kernel's core: the integrand is analytic in w,
    // however small the floor is
    const double c = std::sqrt(floor / slope);
    const double log_scale = gamma * std::log(floor) + std::log(c);
    const double expo = 2.0 * gamma + 1.0;
    auto f = [&](double w) {
      const double aw = std::abs(w);
      const double log_cosh = aw + std::log1p(std::exp(-2.0 * aw)) - M_LN2;
      return std::exp(log_scale + expo * log_cosh) * tail(t_min + c * std::sinh(w));
    };
    auto part = [&](double a, double b) { return gk(f, std::asinh((a - t_min) / c), std::asinh((b - t_min) / c)); };
    if (!tail_singular) return part(0.0, 1.0);
    if (t0 >= 1.0) return to_tail(0.0);
    const double mid = 0.5 * (t0 + 1.0);
    return part(0.0, mid) + to_tail(mid);
  }

  double total = 0.0;
  if (t0 > 0.0) {
    // [0, t0]: t = 1 can only be its right end
    if (gamma_singular) {
      total += from_singular(0.0);
    } else if (tail_singular && t0 == 1.0) {
      total += to_tail(0.0);
    } else {
      total += gk(plain, 0.0, t0);
    }
  }
  if (t0 < 1.0) {
    if (gamma_singular && tail_singular) {
      const double mid = 0.5 * (t0 + 1.0);
      total += from_singular(mid) + to_tail(mid);
    } else if (gamma_singular) {
      total += from_singular(1.0);
    } else if (tail_singular) {
      total += to_tail(t0);
    } else {
      total += gk(plain, t0, 1.0);
    }
  }
  return total;
}

/// Bregman distance f(b) - f(a) - <grad f(a), b - a>, via the Taylor remainder when b is close to a.
template <int D>
double bregman(const SymMatrix<D>& a, const SymMatrix<D>& b, const GrowthParams& params, const ElasticTensor<D>& c) {
  const SymMatrix<D> d = b - a;
  if (d.squared_norm() == 0.0) return 0.0;
  if (d.norm() > 1e-3 * (a.norm() + b.norm())) {
    return energy_density(b, params, c) - energy_density(a, params, c) - stress(a, params, c).dot(d);
  }
  auto integrand = [&](double t) { return tangent(a + t * d, params, c).contract(d, d) * (1.0 - t); };
  return adaptive_integrate(integrand, 0.0, 1.0, 1e-11).value;
}

/// Evaluates sample `index` of `lemma`; with `record` set, also fills a description of the inputs.
template <int D>
Outcome evaluate(Lemma lemma, const SampleSpec& spec, const ElasticTensor<D>& c, std::size_t index,
                 nlohmann::json* record) {
  const GrowthParams& prm = spec.params;
  const double p = prm.p;
  const double mu = prm.mu;
  Sampler draw(mix_seed(spec.seed, index), spec.scales);
  constexpr double exact_tol = 1e-12;
  constexpr double quad_tol = 1e-9;

  switch (lemma) {
    case Lemma::tecnico: {
      const auto xi = draw.sym<D>();
      const auto eta = draw.sym<D>();
      const double denom_base = mu + xi.squared_norm() + eta.squared_norm();
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}, {"gamma", spec.gamma}, {"r", spec.r}};
      if (denom_base == 0.0) return skip();
      const SymMatrix<D> diff = xi - eta;
      const double slope = diff.squared_norm();
      const double t_min = slope > 0.0 ? -eta.dot(diff) / slope : 0.0;
      const double floor = mu + (eta + t_min * diff).squared_norm();
      const double integral = tecnico_integral(floor, slope, t_min, spec.gamma, spec.r);
      const double ratio = integral / shifted_power(denom_base, spec.gamma);
      const double upper = spec.gamma < 0.0 ? 8.0 / (2.0 * spec.gamma + 1.0) : 1.0;
      double violation = excess_over(ratio, upper, quad_tol);
      if (!(ratio > 0.0)) violation = std::max(violation, 1.0);
      return {ratio, true, violation};
    }
    case Lemma::tecnico2: {
      const auto xi = draw.sym<D>();
      const auto eta = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}, {"gamma", spec.gamma}};
      const double dist = (xi - eta).norm();
      const double base = mu + xi.squared_norm() + eta.squared_norm();
      if (dist == 0.0 || base == 0.0) return skip();
      const auto hx = shifted_power(mu + xi.squared_norm(), spec.gamma) * xi;
      const auto he = shifted_power(mu + eta.squared_norm(), spec.gamma) * eta;
      return {(hx - he).norm() / (shifted_power(base, spec.gamma) * dist), true, 0.0};
    }
    case Lemma::vmu_comparison: {
      const auto xi = draw.sym<D>();
      auto eta = draw.sym<D>();
      if (eta.norm() > spec.eta_bound) eta = (spec.eta_bound * (0.05 + 0.95 * draw.uniform()) / eta.norm()) * eta;
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}, {"L", spec.eta_bound}};
      const double lhs = (v_transform(xi, prm) - v_transform(eta, prm)).norm();
      const double rhs = v_transform(xi - eta, prm).norm();
      if (rhs == 0.0) return skip();
      return {lhs / rhs, true, 0.0};
    }
    case Lemma::vmu_triangle: {
      const auto xi = draw.sym<D>();
      const auto eta = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}};
      const double denom = v_transform(xi, prm).norm() + v_transform(eta, prm).norm();
      if (denom == 0.0) return skip();
      return {v_transform(xi + eta, prm).norm() / denom, true, 0.0};
    }
    case Lemma::vmu_bounds: {
      const auto xi = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}};
      const double s2 = xi.squared_norm();
      if (s2 == 0.0) return skip();
      const double v2 = v_transform(xi, prm).squared_norm();
      const double sp = shifted_power(s2, 0.5 * p);
      double lo = 0.0;
      double hi = 0.0;
      if (p < 2.0) {
        lo = shifted_power(2.0 * std::max(mu, s2), 0.5 * p - 1.0) * s2;
        hi = sp;
      } else {
        lo = sp;
        hi = shifted_power(2.0, 0.5 * p - 1.0) * (shifted_power(mu, 0.5 * p - 1.0) * s2 + sp);
      }
      const double violation = std::max(excess_over(v2, hi, exact_tol), excess_over(lo, v2, exact_tol));
      return {v2 / sp, true, violation};
    }
    case Lemma::vmu_convexity: {
      const auto xi = draw.sym<D>();
      const auto eta = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}};
      const SymMatrix<D> mid = 0.5 * (xi + eta);
      if (p >= 2.0) {
        auto h = [&](const SymMatrix<D>& m) { return v_transform(m, prm).squared_norm(); };
        const double chord = 0.5 * (h(xi) + h(eta));
        if (chord == 0.0) return skip();
        const double at_mid = h(mid);
        return {at_mid / chord, true, excess_over(at_mid, chord, exact_tol)};
      }
      auto aux = [&](const SymMatrix<D>& m) {
        const double s2 = m.squared_norm();
        if (s2 == 0.0) return 0.0;
        return s2 / (shifted_power(mu, 0.5 * (2.0 - p)) + shifted_power(s2, 0.5 * (2.0 - p)));
      };
      const double chord = 0.5 * (aux(xi) + aux(eta));
      const double a = aux(xi);
      if (a == 0.0) return skip();
      const double v2 = v_transform(xi, prm).squared_norm();
      const double violation = std::max(excess_over(aux(mid), chord, exact_tol), excess_over(a, v2, exact_tol));
      return {v2 / a, true, violation};
    }
    case Lemma::stima_banana: {
      const auto xi = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}};
      const double s2 = xi.squared_norm();
      const double v2 = v_transform(xi, prm).squared_norm();
      const double middle = shifted_power(mu + s2, 0.5 * p);
      const double identity_rhs = v2 + mu * shifted_power(mu + s2, 0.5 * p - 1.0);
      const double denom = v2 + shifted_power(mu, 0.5 * p);
      if (denom == 0.0) return skip();
      const double identity_gap = std::abs(middle - identity_rhs) / std::max(middle, 1e-300);
      const double violation =
          std::max(excess_over(v2, middle, exact_tol), identity_gap > exact_tol ? identity_gap : 0.0);
      return {middle / denom, true, violation};
    }
    case Lemma::diening_kaplicky: {
      const auto base = draw.sym<D>();
      const double spread = draw.scale();
      const int k = std::max(2, spec.ball_points);
      std::vector<SymMatrix<D>> pts(static_cast<std::size_t>(k));
      std::vector<double> w(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        pts[i] = base + (spread * draw.normal()) * draw.sym<D>() * (1.0 / draw.scale());
        w[i] = draw.uniform(0.5, 1.5);
      }
      if (record) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& m : pts) list.push_back(to_json(m));
        *record = {{"points", list}, {"weights", w}};
      }
      double wsum = 0.0;
      SymMatrix<D> mean_e;
      Mat<D> mean_v = Mat<D>::Zero();
      std::vector<SymMatrix<D>> vs;
      vs.reserve(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        wsum += w[i];
        mean_e += w[i] * pts[i];
        vs.push_back(v_transform(pts[i], prm));
        mean_v += w[i] * vs.back().matrix();
      }
      mean_e *= 1.0 / wsum;
      mean_v /= wsum;
      const SymMatrix<D> v_of_mean = v_transform(mean_e, prm);
      double lhs = 0.0;
      double rhs = 0.0;
      double scale = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        lhs += w[i] * (vs[i].matrix() - mean_v).squaredNorm();
        rhs += w[i] * (vs[i] - v_of_mean).squared_norm();
        scale += w[i] * vs[i].squared_norm();
      }
      if (lhs == 0.0) return skip();
      const double violation = lhs > rhs + exact_tol * scale ? (lhs - rhs) / std::max(rhs, 1e-300) : 0.0;
      return {rhs / lhs, true, violation};
    }
    case Lemma::delta2:
    case Lemma::nabla2: {
      const double a = draw.shift();
      const double t = draw.magnitude();
      const double lambda = draw.dilation();
      if (record) *record = {{"a", a}, {"t", t}, {"lambda", lambda}};
      const ShiftedNFunction phi(a, prm);
      const bool conj = lemma == Lemma::nabla2;
      const double expo = conj ? p / (p - 1.0) : p;
      const double f1 = conj ? phi.conjugate(t) : phi.value(t);
      const double f2 = conj ? phi.conjugate(lambda * t) : phi.value(lambda * t);
      if (!(f1 > 0.0)) return skip();
      const double lo = shifted_power(lambda, std::min(expo, 2.0)) * f1;
      const double hi = shifted_power(lambda, std::max(expo, 2.0)) * f1;
      const double violation = std::max(excess_over(f2, hi, quad_tol), excess_over(lo, f2, quad_tol));
      return {std::log(f2 / f1) / std::log(lambda), true, violation};
    }
    case Lemma::n_function_bounds: {
      const double a = draw.shift();
      const double t = draw.magnitude();
      if (record) *record = {{"a", a}, {"t", t}};
      const ShiftedNFunction phi(a, prm);
      const double value = phi.value(t);
      const double quad = shifted_power(mu + (a + t) * (a + t), 0.5 * p - 1.0) * 0.5 * t * t;
      const double power = shifted_power(t, p) / p;
      const double base0 = mu + a * a;
      // ((mu+(a+t)^2)^{p/2} - (mu+a^2)^{p/2}) / p without cancellation
      const double n0 = base0 > 0.0
                            ? shifted_power(base0, 0.5 * p) * std::expm1(0.5 * p * std::log1p(t * (2 * a + t) / base0)) / p
                            : shifted_power(t * t, 0.5 * p) / p;
      double violation = excess_over(value, n0, quad_tol);
      if (p < 2.0) {
        violation = std::max({violation, excess_over(quad, value, quad_tol), excess_over(value, power, quad_tol),
                              excess_over(value, shifted_power(base0, 0.5 * p - 1.0) * 0.5 * t * t, quad_tol)});
      } else {
        violation = std::max({violation, excess_over(power, value, quad_tol), excess_over(value, quad, quad_tol)});
      }
      violation = std::max({violation, excess_over(0.5 * t * phi.derivative(0.5 * t), value, quad_tol),
                            excess_over(value, t * phi.derivative(t), quad_tol)});
      return {value / quad, true, violation};
    }
    case Lemma::polar_identity: {
      const double a = draw.shift();
      const double t = draw.magnitude();
      if (record) *record = {{"a", a}, {"t", t}};
      const ShiftedNFunction phi(a, prm);
      const double s = phi.derivative(t);
      const double lhs = phi.conjugate(s);
      const double rhs = s * t - phi.value(t);
      if (!(rhs > 0.0)) return skip();
      const double gap = std::abs(lhs - rhs) / rhs;
      return {lhs / rhs, true, gap > 1e-8 ? gap : 0.0};
    }
    case Lemma::young: {
      const double a = draw.shift();
      const double t = draw.magnitude();
      const double s = ShiftedNFunction(a, prm).derivative(draw.magnitude());
      if (record) *record = {{"a", a}, {"t", t}, {"s", s}, {"delta", spec.delta}};
      const ShiftedNFunction phi(a, prm);
      const double phi_t = phi.value(t);
      if (!(phi_t > 0.0)) return skip();
      return {(s * t - spec.delta * phi.conjugate(s)) / phi_t, true, 0.0};
    }
    case Lemma::conjugate_equivalence: {
      const double a = draw.shift();
      const double t = draw.magnitude();
      if (record) *record = {{"a", a}, {"t", t}};
      const ShiftedNFunction phi(a, prm);
      const double value = phi.value(t);
      if (!(value > 0.0)) return skip();
      return {phi.conjugate(phi.derivative(t)) / value, true, 0.0};
    }
    case Lemma::phi_xi_vmu: {
      const auto xi = draw.sym<D>();
      const auto eta = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}};
      const double denom = (v_transform(xi, prm) - v_transform(eta, prm)).squared_norm();
      if (denom == 0.0) return skip();
      return {ShiftedNFunction(xi.norm(), prm).value((xi - eta).norm()) / denom, true, 0.0};
    }
    case Lemma::bregman_linear: {
      auto xi = draw.sym<D>();
      auto eta = draw.sym<D>();
      if (xi.norm() > spec.magnitude_cap) xi = (spec.magnitude_cap / xi.norm()) * xi;
      if (eta.norm() > spec.magnitude_cap) eta = (spec.magnitude_cap / eta.norm()) * eta;
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}};
      const double denom = (v_transform(eta, prm) - v_transform(xi, prm)).squared_norm();
      if (denom == 0.0) return skip();
      return {bregman(xi, eta, prm, c) / denom, true, 0.0};
    }
    case Lemma::hessian_bounds: {
      const auto xi = draw.sym<D>();
      const auto eta = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}, {"eta", to_json(eta)}};
      const double weight = shifted_power(mu + xi.squared_norm(), 0.5 * p - 1.0) * eta.squared_norm();
      if (weight == 0.0 || !std::isfinite(weight)) return skip();
      return {tangent(xi, prm, c).contract(eta, eta) / weight, true, 0.0};
    }
    case Lemma::growth:
    case Lemma::growth_gradient: {
      const auto xi = draw.sym<D>();
      if (record) *record = {{"xi", to_json(xi)}};
      const double s2 = xi.squared_norm();
      if (s2 == 0.0) return skip();
      const double w = shifted_power(mu + s2, 0.5 * p - 1.0);
      if (lemma == Lemma::growth) return {energy_density(xi, prm, c) / (w * s2), true, 0.0};
      return {stress(xi, prm, c).norm() / (w * std::sqrt(s2)), true, 0.0};
    }
    case Lemma::blowup_sandwich:
    case Lemma::blowup_monotone: {
      if (!(mu > 0.0)) throw DomainError("blow-up audits require mu > 0");
      auto base = draw.sym<D>();
      if (base.norm() > spec.blowup_bound) base = (spec.blowup_bound * draw.uniform() / base.norm()) * base;
      const double lambda = std::exp(draw.uniform(std::log(1e-4), 0.0));
      const auto xi = draw.sym<D>();
      const auto eta = draw.sym<D>();
      if (record)
        *record = {{"A_h", to_json(base)}, {"lambda_h", lambda}, {"xi", to_json(xi)}, {"eta", to_json(eta)}};
      if (lemma == Lemma::blowup_sandwich) {
        const double denom = v_transform(lambda * xi, prm).squared_norm();
        if (denom == 0.0) return skip();
        const BlowupParams<D> bp{base, lambda, base};
        return {lambda * lambda * blowup_integrand(xi, bp, prm, c) / denom, true, 0.0};
      }
      const SymMatrix<D> at_xi = base + lambda * xi;
      const SymMatrix<D> at_eta = base + lambda * eta;
      const double denom = (v_transform(at_xi, prm) - v_transform(at_eta, prm)).squared_norm();
      if (denom == 0.0) return skip();
      return {bregman(at_eta, at_xi, prm, c) / denom, true, 0.0};
    }
  }
  throw UnsupportedLemma("unhandled lemma");
}

struct ChunkResult {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t hi_index = 0;
  std::size_t skipped = 0;
  std::size_t violations = 0;
  double worst_violation = 0.0;
  std::size_t worst_index = 0;
};

}  // namespace audit_detail

/// Samples `spec.count` inputs and reports the range of the lemma's ratio. Explicit constants and
/// exact identities are asserted (tolerance 1e-12 for closed forms, 1e-9 for quadrature-backed
/// values, 1e-8 for the polar identity); constants the statement only claims to exist are reported,
/// never asserted. Results are independent of the worker count.
template <int D>
InequalityAudit inequality_audit(Lemma lemma, const SampleSpec& spec,
                                 const ElasticTensor<D>& c = ElasticTensor<D>::identity()) {
  spec.params.validate();
  if (spec.count < 1) throw DomainError("audit needs at least one sample");
  if ((lemma == Lemma::tecnico || lemma == Lemma::tecnico2) && !(spec.gamma > -0.5))
    throw DomainError("gamma must be > -1/2");
  if (lemma == Lemma::tecnico && !(spec.r >= 0.0)) throw DomainError("r must be >= 0");
  if (lemma == Lemma::young && !(spec.delta > 0.0 && spec.delta <= 1.0)) throw DomainError("delta must lie in (0,1]");
  if ((lemma == Lemma::blowup_sandwich || lemma == Lemma::blowup_monotone) && !(spec.params.mu > 0.0))
    throw DomainError("blow-up audits require mu > 0");

  constexpr std::size_t chunk = 1024;
  const std::size_t chunks = (spec.count + chunk - 1) / chunk;
  std::vector<audit_detail::ChunkResult> partial(chunks);
  parallel_for(chunks, [&](std::size_t ci) {
    auto& res = partial[ci];
    const std::size_t end = std::min(spec.count, (ci + 1) * chunk);
    for (std::size_t i = ci * chunk; i < end; ++i) {
      const auto out = audit_detail::evaluate<D>(lemma, spec, c, i, nullptr);
      if (!out.valid || !std::isfinite(out.ratio)) {
        ++res.skipped;
        continue;
      }
      res.lo = std::min(res.lo, out.ratio);
      if (out.ratio > res.hi) {
        res.hi = out.ratio;
        res.hi_index = i;
      }
      if (out.violation > 0.0) {
        ++res.violations;
        if (out.violation > res.worst_violation) {
          res.worst_violation = out.violation;
          res.worst_index = i;
        }
      }
    }
  });

  InequalityAudit audit;
  audit.lemma_id = std::string(lemma_name(lemma));
  audit.samples = spec.count;
  std::size_t witness_index = 0;
  double worst = 0.0;
  bool have_hi = false;
  for (const auto& r : partial) {
    audit.skipped += r.skipped;
    audit.violations += r.violations;
    audit.empirical_lo = std::min(audit.empirical_lo, r.lo);
    if (r.hi > audit.empirical_hi) {
      audit.empirical_hi = r.hi;
      if (audit.violations == r.violations) witness_index = r.hi_index;
      have_hi = true;
    }
    if (r.worst_violation > worst) {
      worst = r.worst_violation;
      witness_index = r.worst_index;
    }
  }
  audit.violated = audit.violations > 0;
  if (!audit.violated && have_hi) {
    for (const auto& r : partial)
      if (r.hi == audit.empirical_hi) {
        witness_index = r.hi_index;
        break;
      }
  }
  nlohmann::json inputs;
  const auto out = audit_detail::evaluate<D>(lemma, spec, c, witness_index, &inputs);
  audit.witness = {{"index", witness_index}, {"ratio", out.ratio}, {"violation", out.violation}, {"inputs", inputs}};
  return audit;
}

/// Dispatches on spec.params.dim with the identity elastic tensor.
inline InequalityAudit inequality_audit(Lemma lemma, const SampleSpec& spec) {
  if (spec.params.dim == 2) return inequality_audit<2>(lemma, spec);
  if (spec.params.dim == 3) return inequality_audit<3>(lemma, spec);
  throw DomainError("dim must be 2 or 3");
}

}  // namespace pgrowth
