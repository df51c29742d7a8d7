#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "pgrowth/core/error.hpp"
#include "pgrowth/tensor/types.hpp"

namespace pgrowth {

/// Gauss-Legendre nodes and weights on [0, 1] by the Golub-Welsch eigenvalue method.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  std::vector<double> x(n);
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) {
    x[k] = 0.5 * (eig.eigenvalues()(k) + 1.0);
    const double v = eig.eigenvectors()(0, k);
    w[k] = v * v;  // weights on [-1,1] are 2 v^2; halved for [0,1]
  }
  return {x, w};
}

/// Quadrature rule on the reference simplex in barycentric coordinates; weights sum to 1.
template <int D>
struct SimplexRule {
  int order = 1;
  std::vector<std::array<double, D + 1>> bary;
  std::vector<double> weights;

  [[nodiscard]] int size() const { return static_cast<int>(weights.size()); }

  static SimplexRule of_order(int order) {
    if (order < 1) throw DomainError("quadrature order must be >= 1");
    SimplexRule r;
    r.order = order;
    if (order == 1) {
      std::array<double, D + 1> c{};
      c.fill(1.0 / (D + 1));
      r.bary.push_back(c);
      r.weights.push_back(1.0);
      return r;
    }
    if (order == 2) {
      const double a = D == 2 ? 2.0 / 3.0 : 0.5854101966249685;
      const double b = D == 2 ? 1.0 / 6.0 : 0.1381966011250105;
      for (int k = 0; k <= D; ++k) {
        std::array<double, D + 1> c{};
        c.fill(b);
        c[k] = a;
        r.bary.push_back(c);
        r.weights.push_back(1.0 / (D + 1));
      }
      return r;
    }
    // collapsed tensor-product Gauss rule; the Duffy Jacobian adds D-1 to the polynomial degree
    const int n = (order + D + 1) / 2;
    const auto [x, w] = gauss_legendre_unit(n);
    if constexpr (D == 2) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double xi = x[i];
          const double eta = (1.0 - x[i]) * x[j];
          r.bary.push_back({1.0 - xi - eta, xi, eta});
          r.weights.push_back(2.0 * w[i] * w[j] * (1.0 - x[i]));
        }
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            const double xi = x[i];
            const double eta = (1.0 - x[i]) * x[j];
            const double zeta = (1.0 - x[i]) * (1.0 - x[j]) * x[k];
            r.bary.push_back({1.0 - xi - eta - zeta, xi, eta, zeta});
            r.weights.push_back(6.0 * w[i] * w[j] * w[k] * (1.0 - x[i]) * (1.0 - x[i]) * (1.0 - x[j]));
          }
    }
    return r;
  }
};

template <int D>
class Mesh;

/// Physical quadrature points of every element, element-major: the points of element e are
/// [e * per_element, (e + 1) * per_element).
template <int D>
class QuadratureSet {
 public:
  QuadratureSet(const Mesh<D>& mesh, SimplexRule<D> rule) : rule_(std::move(rule)) {
    const int n = rule_.size();
    points_.resize(static_cast<std::size_t>(mesh.element_count()) * n);
    weights_.resize(points_.size());
    for (int e = 0; e < mesh.element_count(); ++e) {
      const auto& el = mesh.element(e);
      for (int q = 0; q < n; ++q) {
        Vec<D> x = Vec<D>::Zero();
        for (int a = 0; a <= D; ++a) x += rule_.bary[q][a] * mesh.node(el.nodes[a]);
        points_[e * n + q] = x;
        weights_[e * n + q] = rule_.weights[q] * el.volume;
      }
    }
  }

  [[nodiscard]] const SimplexRule<D>& rule() const { return rule_; }
  [[nodiscard]] int per_element() const { return rule_.size(); }
  [[nodiscard]] int size() const { return static_cast<int>(points_.size()); }
  [[nodiscard]] const Vec<D>& point(int g) const { return points_[g]; }
  [[nodiscard]] double weight(int g) const { return weights_[g]; }
  [[nodiscard]] int element_of(int g) const { return g / rule_.size(); }
  [[nodiscard]] const std::array<double, D + 1>& bary(int g) const { return rule_.bary[g % rule_.size()]; }

 private:
  SimplexRule<D> rule_;
  std::vector<Vec<D>> points_;
  std::vector<double> weights_;
};

}  // namespace pgrowth
