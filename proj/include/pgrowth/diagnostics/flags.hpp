#pragma once

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "pgrowth/diagnostics/excess.hpp"

namespace pgrowth {

/// Unset entries fall back to scale-free defaults computed from the field itself.
struct FlagThresholds {
  std::optional<double> v_oscillation;      // mean |V - (V)_B|^2; default 1e-2 * domain mean |V|^2
  std::optional<double> v_divergence;       // |(V)_B|; default 1e2 * domain mean |V|
  std::optional<double> u_oscillation;      // mean |u - (u)_B|^p; default 1e-2 * domain mean |u - (u)|^p
  std::optional<double> u_divergence;       // |(u)_B|; default 1e2 * domain mean |u|
  std::optional<double> grad_divergence;    // |(grad u)_B|; default 1e2 * domain mean |grad u|
  double oscillation_factor = 1e-2;
  double divergence_factor = 1e2;
};

struct ResolvedThresholds {
  double v_oscillation = 0.0;
  double v_divergence = 0.0;
  double u_oscillation = 0.0;
  double u_divergence = 0.0;
  double grad_divergence = 0.0;
};

/// Per-node surrogates of the four singular sets over a radius sweep.
/// sigma1: V-oscillation above threshold at the smallest radius and, over a sweep of several radii,
/// shrinking more slowly than r itself (the oscillation of a C^1 field shrinks like r^2, a jump keeps it flat).
/// sigma2 / sigma4: |(V)_B| / |(grad u)_B| above threshold at the smallest radius and non-decreasing as r shrinks.
/// sigma3: the same rule applied to the u-oscillation or to |(u)_B|.
/// Nodes whose largest ball leaves the domain are not evaluated and never flagged.
struct SingularFlags {
  std::vector<double> radii;  // decreasing
  ResolvedThresholds thresholds;
  std::vector<bool> evaluated;
  std::vector<bool> sigma1, sigma2, sigma3, sigma4;
  std::vector<bool> v_oscillation_shrinking;  // annotation: oscillation decreases along the sweep

  [[nodiscard]] static int count(const std::vector<bool>& f) { return static_cast<int>(std::count(f.begin(), f.end(), true)); }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["radii"] = radii;
    j["thresholds"] = {{"v_oscillation", thresholds.v_oscillation},
                       {"v_divergence", thresholds.v_divergence},
                       {"u_oscillation", thresholds.u_oscillation},
                       {"u_divergence", thresholds.u_divergence},
                       {"grad_divergence", thresholds.grad_divergence}};
    j["counts"] = {{"evaluated", count(evaluated)},
                   {"sigma1", count(sigma1)},
                   {"sigma2", count(sigma2)},
                   {"sigma3", count(sigma3)},
                   {"sigma4", count(sigma4)}};
    auto indices = [](const std::vector<bool>& f) {
      std::vector<int> out;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i]) out.push_back(static_cast<int>(i));
      return out;
    };
    j["nodes"] = {{"sigma1", indices(sigma1)}, {"sigma2", indices(sigma2)}, {"sigma3", indices(sigma3)}, {"sigma4", indices(sigma4)}};
    return j;
  }
};

namespace flags_detail {
// sweep values ordered from largest to smallest radius
inline bool rising_above(const std::vector<double>& values, double threshold) {
  if (!(values.back() > threshold)) return false;
  for (std::size_t k = 0; k + 1 < values.size(); ++k)
    if (values[k + 1] < values[k]) return false;
  return true;
}
}  // namespace flags_detail

template <int D>
ResolvedThresholds resolve_thresholds(const DiscreteField<D>& u, const GrowthParams& params, const FlagThresholds& t) {
  const Mesh<D>& mesh = u.mesh();
  const auto v = element_v(u, params);
  const double total = mesh.box_volume();
  double v2 = 0.0, vabs = 0.0, uabs = 0.0, gabs = 0.0;
  Vec<D> umean = Vec<D>::Zero();
  std::vector<Vec<D>> centroid_values(mesh.element_count());
  std::array<double, D + 1> mid{};
  mid.fill(1.0 / (D + 1));
  for (int e = 0; e < mesh.element_count(); ++e) {
    const double vol = mesh.element(e).volume;
    centroid_values[e] = u.evaluate(e, mid);
    v2 += vol * v[e].squared_norm();
    vabs += vol * v[e].norm();
    uabs += vol * centroid_values[e].norm();
    gabs += vol * u.gradient(e).norm();
    umean += vol * centroid_values[e];
  }
  umean /= total;
  double uosc = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e)
    uosc += mesh.element(e).volume * std::pow((centroid_values[e] - umean).norm(), params.p);
  ResolvedThresholds r;
  r.v_oscillation = t.v_oscillation.value_or(t.oscillation_factor * v2 / total);
  r.v_divergence = t.v_divergence.value_or(t.divergence_factor * vabs / total);
  r.u_oscillation = t.u_oscillation.value_or(t.oscillation_factor * uosc / total);
  r.u_divergence = t.u_divergence.value_or(t.divergence_factor * uabs / total);
  r.grad_divergence = t.grad_divergence.value_or(t.divergence_factor * gabs / total);
  return r;
}

template <int D>
SingularFlags singular_flags(const DiscreteField<D>& u, const GrowthParams& params, std::vector<double> radii,
                             const FlagThresholds& thresholds = {}) {
  if (radii.empty()) throw DomainError("singular flags need at least one radius");
  std::sort(radii.begin(), radii.end(), std::greater<>());
  if (std::adjacent_find(radii.begin(), radii.end()) != radii.end()) throw DomainError("sweep radii must be distinct");
  const Mesh<D>& mesh = u.mesh();
  SingularFlags out;
  out.radii = radii;
  out.thresholds = resolve_thresholds(u, params, thresholds);
  const int nodes = mesh.node_count();
  // byte flags while workers write concurrently; vector<bool> packs bits
  enum Slot { evaluated, s1, s2, s3, s4, shrinking, slot_count };
  std::vector<std::array<unsigned char, slot_count>> bits(nodes, std::array<unsigned char, slot_count>{});

  const auto v = element_v(u, params);
  std::vector<Mat<D>> grad(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) grad[e] = u.gradient(e);
  const ResolvedThresholds& th = out.thresholds;
  const double p = params.p;

  // resolution is a property of the sweep, not of the node
  if (radii.back() < ball_resolution_factor * mesh.max_spacing() * (1.0 - 1e-12))
    throw BallTooSmall("smallest sweep radius " + std::to_string(radii.back()) + " is below 4 mesh spacings");

  parallel_for(static_cast<std::size_t>(nodes), [&](std::size_t idx) {
    const int n = static_cast<int>(idx);
    const Vec<D>& x = mesh.node(n);
    try {
      check_ball(mesh, Ball<D>{x, radii.front()});
    } catch (const BallOutsideDomain&) {
      return;
    }
    bits[n][evaluated] = 1;
    const std::size_t k_count = radii.size();
    std::vector<double> v_osc(k_count), v_mean(k_count), u_osc(k_count), u_mean(k_count), g_mean(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const BallRegion<D> region(u.mesh_ptr(), Ball<D>{x, radii[k]});
      const auto& quad = mesh.quadrature(region.order());
      const SymMatrix<D> vm = region.element_mean([&](int e) { return v[e]; });
      v_osc[k] = region.element_mean([&](int e) { return SymMatrix<D>(v[e] - vm).squared_norm(); });
      v_mean[k] = vm.norm();
      auto value_at = [&](int g) { return u.evaluate(quad.element_of(g), quad.bary(g)); };
      const Vec<D> um = region.mean(value_at);
      u_mean[k] = um.norm();
      u_osc[k] = region.mean([&](int g) { return std::pow((value_at(g) - um).norm(), p); });
      g_mean[k] = Mat<D>(region.element_mean([&](int e) { return grad[e]; })).norm();
    }
    const bool flat = k_count == 1 || v_osc.back() > v_osc.front() * (radii.back() / radii.front());
    bits[n][s1] = v_osc.back() > th.v_oscillation && flat;
    bits[n][shrinking] = k_count > 1 && v_osc.back() < v_osc.front();
    bits[n][s2] = flags_detail::rising_above(v_mean, th.v_divergence);
    bits[n][s3] = flags_detail::rising_above(u_osc, th.u_oscillation) || flags_detail::rising_above(u_mean, th.u_divergence);
    bits[n][s4] = flags_detail::rising_above(g_mean, th.grad_divergence);
  });
  auto unpack = [&](Slot s) {
    std::vector<bool> f(nodes);
    for (int n = 0; n < nodes; ++n) f[n] = bits[n][s] != 0;
    return f;
  };
  out.evaluated = unpack(evaluated);
  out.sigma1 = unpack(s1);
  out.sigma2 = unpack(s2);
  out.sigma3 = unpack(s3);
  out.sigma4 = unpack(s4);
  out.v_oscillation_shrinking = unpack(shrinking);
  return out;
}

}  // namespace pgrowth
