#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <utility>
#include <vector>

#include "pgrowth/core/error.hpp"
#include "pgrowth/fem/mesh.hpp"

namespace pgrowth {

template <int D>
struct Ball {
  Vec<D> center = Vec<D>::Zero();
  double radius = 0.0;
};

/// Radius must cover at least this many mesh spacings.
inline constexpr double ball_resolution_factor = 4.0;

template <int D>
void check_ball(const Mesh<D>& mesh, const Ball<D>& ball) {
  if (!(ball.radius > 0.0) || !ball.center.allFinite()) throw BallTooSmall("ball radius must be positive");
  if (ball.radius < ball_resolution_factor * mesh.max_spacing() * (1.0 - 1e-12))
    throw BallTooSmall("ball radius " + std::to_string(ball.radius) + " is below 4 mesh spacings (" +
                       std::to_string(mesh.max_spacing()) + ")");
  for (int d = 0; d < D; ++d)
    if (!(ball.center(d) - ball.radius > mesh.lower()(d)) || !(ball.center(d) + ball.radius < mesh.upper()(d)))
      throw BallOutsideDomain("ball closure leaves the box along axis " + std::to_string(d));
}

/// Quadrature points of a mesh lying in a closed ball. Sums run in lattice order of the cells,
/// so results are reproducible bit for bit.
template <int D>
class BallRegion {
 public:
  static constexpr int default_order = 2;

  BallRegion(MeshPtr<D> mesh, const Ball<D>& ball, int order = default_order)
      : mesh_(std::move(mesh)), ball_(ball), order_(order) {
    check_ball(*mesh_, ball_);
    const auto& quad = mesh_->quadrature(order_);
    const int nq = quad.per_element();
    std::array<int, D> lo{};
    std::array<int, D> hi{};
    for (int d = 0; d < D; ++d) {
      const double h = mesh_->spacing()(d);
      lo[d] = std::max(0, static_cast<int>(std::floor((ball_.center(d) - ball_.radius - mesh_->lower()(d)) / h)) - 1);
      hi[d] = std::min(mesh_->cells_per_axis() - 1,
                       static_cast<int>(std::floor((ball_.center(d) + ball_.radius - mesh_->lower()(d)) / h)) + 1);
    }
    const double r2 = ball_.radius * ball_.radius;
    std::array<int, D> c = lo;
    while (true) {
      const int first = mesh_->cell_index(c) * Mesh<D>::simplices_per_cell;
      for (int e = first; e < first + Mesh<D>::simplices_per_cell; ++e) {
        double ew = 0.0;
        for (int q = 0; q < nq; ++q) {
          const int g = e * nq + q;
          if ((quad.point(g) - ball_.center).squaredNorm() <= r2) {
            points_.push_back(g);
            weights_.push_back(quad.weight(g));
            ew += quad.weight(g);
          }
        }
        if (ew > 0.0) element_weights_.emplace_back(e, ew);
      }
      int d = 0;
      while (d < D && ++c[d] > hi[d]) {
        c[d] = lo[d];
        ++d;
      }
      if (d == D) break;
    }
    for (double w : weights_) volume_ += w;
    for (const auto& ew : element_weights_) element_volume_ += ew.second;
  }

  [[nodiscard]] const Mesh<D>& mesh() const { return *mesh_; }
  [[nodiscard]] const Ball<D>& ball() const { return ball_; }
  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] const std::vector<int>& points() const { return points_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  /// (element, total weight of its included points)
  [[nodiscard]] const std::vector<std::pair<int, double>>& element_weights() const { return element_weights_; }
  /// Measured ball volume (sum of included weights).
  [[nodiscard]] double volume() const { return volume_; }

  /// Integral of f(global quadrature index) over the included points.
  template <class F>
  [[nodiscard]] auto integral(F&& f) const {
    using T = std::decay_t<decltype(f(0))>;
    T acc = weights_[0] * f(points_[0]);
    for (std::size_t k = 1; k < points_.size(); ++k) acc += weights_[k] * f(points_[k]);
    return acc;
  }

  /// Mean as f0 + average of (f - f0) with f0 the first sample, so constants come out exactly.
  template <class F>
  [[nodiscard]] auto mean(F&& f) const {
    using T = std::decay_t<decltype(f(0))>;
    const T f0 = f(points_[0]);
    T acc = T(f0 - f0);
    for (std::size_t k = 0; k < points_.size(); ++k) acc += weights_[k] * T(f(points_[k]) - f0);
    return T(f0 + (1.0 / volume_) * acc);
  }

  /// Integral of a per-element constant g(element).
  template <class F>
  [[nodiscard]] auto element_integral(F&& g) const {
    using T = std::decay_t<decltype(g(0))>;
    T acc = element_weights_[0].second * g(element_weights_[0].first);
    for (std::size_t k = 1; k < element_weights_.size(); ++k) acc += element_weights_[k].second * g(element_weights_[k].first);
    return acc;
  }

  template <class F>
  [[nodiscard]] auto element_mean(F&& g) const {
    using T = std::decay_t<decltype(g(0))>;
    const T g0 = g(element_weights_[0].first);
    T acc = T(g0 - g0);
    for (const auto& [e, w] : element_weights_) acc += w * T(g(e) - g0);
    return T(g0 + (1.0 / element_volume_) * acc);
  }

 private:
  MeshPtr<D> mesh_;
  Ball<D> ball_;
  int order_;
  std::vector<int> points_;
  std::vector<double> weights_;
  std::vector<std::pair<int, double>> element_weights_;
  double volume_ = 0.0;
  double element_volume_ = 0.0;  // same measure, summed per element
};

/// Integral over the ball of per-quadrature-point values (indexed like mesh.quadrature(region.order())).
template <int D, class T>
T ball_integral(const std::vector<T>& values, const BallRegion<D>& region) {
  return region.integral([&](int g) { return values[g]; });
}

template <int D, class T>
T ball_mean(const std::vector<T>& values, const BallRegion<D>& region) {
  return region.mean([&](int g) { return values[g]; });
}

}  // namespace pgrowth
