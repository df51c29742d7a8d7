#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <tuple>
#include <vector>

#include "pgrowth/core/error.hpp"
#include "pgrowth/tensor/types.hpp"

namespace pgrowth {

template <int D>
struct Element {
  std::array<int, D + 1> nodes{};
  std::array<Vec<D>, D + 1> grads{};  // gradients of the barycentric shape functions
  double volume = 0.0;
  Vec<D> centroid = Vec<D>::Zero();
};

/// Facet shared by two elements.
struct Facet {
  int left = -1;
  int right = -1;
  double measure = 0.0;
  double centroid_distance = 0.0;
};

template <int D>
class QuadratureSet;

/// Structured simplicial mesh of an axis-aligned box. Every cell is split into D! Kuhn simplices
/// (2 triangles / 6 tetrahedra), stored consecutively so that element / D! is the cell index.
/// Nodes are numbered lexicographically with axis 0 fastest.
template <int D>
class Mesh {
 public:
  static constexpr int simplices_per_cell = D == 2 ? 2 : 6;

  static std::shared_ptr<const Mesh> build(const Vec<D>& lower, const Vec<D>& upper, int cells_per_axis) {
    return std::shared_ptr<const Mesh>(new Mesh(lower, upper, cells_per_axis));
  }

  static std::shared_ptr<const Mesh> unit(int cells_per_axis) {
    return build(Vec<D>::Zero(), Vec<D>::Ones(), cells_per_axis);
  }

  static std::shared_ptr<const Mesh> from_descriptor(const nlohmann::json& j) {
    if (j.at("dim").get<int>() != D) throw MeshMismatch("descriptor dimension mismatch");
    Vec<D> lo;
    Vec<D> hi;
    for (int d = 0; d < D; ++d) {
      lo(d) = j.at("lower").at(d).get<double>();
      hi(d) = j.at("upper").at(d).get<double>();
    }
    return build(lo, hi, j.at("cells_per_axis").get<int>());
  }

  [[nodiscard]] nlohmann::json descriptor() const {
    nlohmann::json lo = nlohmann::json::array();
    nlohmann::json hi = nlohmann::json::array();
    for (int d = 0; d < D; ++d) {
      lo.push_back(lower_(d));
      hi.push_back(upper_(d));
    }
    return {{"dim", D}, {"lower", lo}, {"upper", hi}, {"cells_per_axis", cells_}};
  }

  [[nodiscard]] bool same_as(const Mesh& o) const {
    return cells_ == o.cells_ && lower_ == o.lower_ && upper_ == o.upper_;
  }

  [[nodiscard]] int cells_per_axis() const { return cells_; }
  [[nodiscard]] const Vec<D>& lower() const { return lower_; }
  [[nodiscard]] const Vec<D>& upper() const { return upper_; }
  [[nodiscard]] const Vec<D>& spacing() const { return spacing_; }
  [[nodiscard]] double max_spacing() const { return spacing_.maxCoeff(); }
  [[nodiscard]] double box_volume() const { return (upper_ - lower_).prod(); }

  [[nodiscard]] int node_count() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] int element_count() const { return static_cast<int>(elements_.size()); }
  [[nodiscard]] int dof_count() const { return D * node_count(); }

  [[nodiscard]] const Vec<D>& node(int i) const { return nodes_[i]; }
  [[nodiscard]] const std::vector<Vec<D>>& nodes() const { return nodes_; }
  [[nodiscard]] const Element<D>& element(int e) const { return elements_[e]; }
  [[nodiscard]] const std::vector<Element<D>>& elements() const { return elements_; }
  [[nodiscard]] const std::vector<int>& boundary_nodes() const { return boundary_; }
  [[nodiscard]] bool on_boundary(int node) const { return is_boundary_[node]; }
  [[nodiscard]] const std::vector<Facet>& interior_facets() const { return facets_; }
  [[nodiscard]] const std::vector<int>& node_star(int node) const { return stars_[node]; }

  /// Lattice coordinates of a node.
  [[nodiscard]] std::array<int, D> lattice(int node) const {
    std::array<int, D> c{};
    for (int d = 0; d < D; ++d) {
      c[d] = node % (cells_ + 1);
      node /= cells_ + 1;
    }
    return c;
  }

  [[nodiscard]] int node_index(const std::array<int, D>& c) const {
    int idx = 0;
    for (int d = D - 1; d >= 0; --d) idx = idx * (cells_ + 1) + c[d];
    return idx;
  }

  [[nodiscard]] int cell_index(const std::array<int, D>& c) const {
    int idx = 0;
    for (int d = D - 1; d >= 0; --d) idx = idx * cells_ + c[d];
    return idx;
  }

  /// Quadrature points of the given order on every element (cached).
  [[nodiscard]] const QuadratureSet<D>& quadrature(int order) const;

  /// Sparse P with u^T P u = sum over interior facets of |F| / h |[grad u]_F|^2 (cached).
  [[nodiscard]] const Eigen::SparseMatrix<double>& jump_operator() const;

 private:
  Mesh(const Vec<D>& lower, const Vec<D>& upper, int cells) : lower_(lower), upper_(upper), cells_(cells) {
    if (cells < 2) throw BadDomain("cells_per_axis must be >= 2");
    for (int d = 0; d < D; ++d)
      if (!(upper(d) > lower(d)) || !std::isfinite(lower(d)) || !std::isfinite(upper(d)))
        throw BadDomain("degenerate box along axis " + std::to_string(d));
    spacing_ = (upper - lower) / cells;
    build_nodes();
    build_elements();
    build_facets();
  }

  void build_nodes() {
    int count = 1;
    for (int d = 0; d < D; ++d) count *= cells_ + 1;
    nodes_.resize(count);
    is_boundary_.assign(count, false);
    for (int i = 0; i < count; ++i) {
      const auto c = lattice(i);
      bool boundary = false;
      for (int d = 0; d < D; ++d) {
        // end nodes exactly at the box corners
        nodes_[i](d) = c[d] == cells_ ? upper_(d) : lower_(d) + c[d] * spacing_(d);
        boundary = boundary || c[d] == 0 || c[d] == cells_;
      }
      is_boundary_[i] = boundary;
      if (boundary) boundary_.push_back(i);
    }
  }

  void build_elements() {
    std::array<int, D> perm{};
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::array<int, D>> perms;
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));

    int cell_count = 1;
    for (int d = 0; d < D; ++d) cell_count *= cells_;
    elements_.reserve(static_cast<std::size_t>(cell_count) * perms.size());
    stars_.assign(nodes_.size(), {});
    for (int cell = 0; cell < cell_count; ++cell) {
      std::array<int, D> corner{};
      int rest = cell;
      for (int d = 0; d < D; ++d) {
        corner[d] = rest % cells_;
        rest /= cells_;
      }
      for (const auto& pm : perms) {
        Element<D> el;
        auto c = corner;
        el.nodes[0] = node_index(c);
        for (int k = 0; k < D; ++k) {
          ++c[pm[k]];
          el.nodes[k + 1] = node_index(c);
        }
        finish_element(el);
        for (int a = 0; a <= D; ++a) stars_[el.nodes[a]].push_back(static_cast<int>(elements_.size()));
        elements_.push_back(el);
      }
    }
  }

  void finish_element(Element<D>& el) const {
    Mat<D> jac;
    for (int k = 0; k < D; ++k) jac.col(k) = nodes_[el.nodes[k + 1]] - nodes_[el.nodes[0]];
    double det = jac.determinant();
    if (det < 0.0) {
      std::swap(el.nodes[D - 1], el.nodes[D]);
      jac.col(D - 2).swap(jac.col(D - 1));
      det = -det;
    }
    double fact = 1.0;
    for (int k = 2; k <= D; ++k) fact *= k;
    el.volume = det / fact;
    const Mat<D> inv = jac.inverse();
    Vec<D> sum = Vec<D>::Zero();
    for (int k = 0; k < D; ++k) {
      el.grads[k + 1] = inv.row(k).transpose();
      sum += el.grads[k + 1];
    }
    el.grads[0] = -sum;
    el.centroid.setZero();
    for (int a = 0; a <= D; ++a) el.centroid += nodes_[el.nodes[a]];
    el.centroid /= D + 1;
  }

  void build_facets() {
    std::map<std::array<int, D>, std::pair<int, int>> owner;
    for (int e = 0; e < element_count(); ++e) {
      for (int skip = 0; skip <= D; ++skip) {
        std::array<int, D> key{};
        int k = 0;
        for (int a = 0; a <= D; ++a)
          if (a != skip) key[k++] = elements_[e].nodes[a];
        std::sort(key.begin(), key.end());
        auto [it, inserted] = owner.try_emplace(key, e, -1);
        if (!inserted) it->second.second = e;
      }
    }
    for (const auto& [key, pair] : owner) {
      if (pair.second < 0) continue;
      Facet f;
      f.left = std::min(pair.first, pair.second);
      f.right = std::max(pair.first, pair.second);
      if constexpr (D == 2) {
        f.measure = (nodes_[key[1]] - nodes_[key[0]]).norm();
      } else {
        const Eigen::Vector3d a = nodes_[key[1]] - nodes_[key[0]];
        const Eigen::Vector3d b = nodes_[key[2]] - nodes_[key[0]];
        f.measure = 0.5 * a.cross(b).norm();
      }
      f.centroid_distance = (elements_[f.left].centroid - elements_[f.right].centroid).norm();
      facets_.push_back(f);
    }
    std::sort(facets_.begin(), facets_.end(),
              [](const Facet& a, const Facet& b) { return std::tie(a.left, a.right) < std::tie(b.left, b.right); });
  }

  Vec<D> lower_;
  Vec<D> upper_;
  int cells_;
  Vec<D> spacing_;
  std::vector<Vec<D>> nodes_;
  std::vector<bool> is_boundary_;
  std::vector<int> boundary_;
  std::vector<Element<D>> elements_;
  std::vector<std::vector<int>> stars_;
  std::vector<Facet> facets_;

  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::unique_ptr<QuadratureSet<D>>> quadrature_cache_;
  mutable std::unique_ptr<Eigen::SparseMatrix<double>> jump_cache_;
};

template <int D>
using MeshPtr = std::shared_ptr<const Mesh<D>>;

}  // namespace pgrowth

#include "pgrowth/fem/quadrature.hpp"

namespace pgrowth {

template <int D>
const QuadratureSet<D>& Mesh<D>::quadrature(int order) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto& slot = quadrature_cache_[order];
  if (!slot) slot = std::make_unique<QuadratureSet<D>>(*this, SimplexRule<D>::of_order(order));
  return *slot;
}

template <int D>
const Eigen::SparseMatrix<double>& Mesh<D>::jump_operator() const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  if (jump_cache_) return *jump_cache_;
  const double h = max_spacing();
  std::vector<Eigen::Triplet<double>> trips;
  for (const Facet& f : facets_) {
    const auto& l = elements_[f.left];
    const auto& r = elements_[f.right];
    // [grad u]_{ij} = sum_a u_{a,i} (dl_a - dr_a)_j over the union of both node sets
    std::vector<std::pair<int, Vec<D>>> coeff;
    auto add = [&](int node, const Vec<D>& g) {
      for (auto& c : coeff)
        if (c.first == node) {
          c.second += g;
          return;
        }
      coeff.emplace_back(node, g);
    };
    for (int a = 0; a <= D; ++a) add(l.nodes[a], l.grads[a]);
    for (int a = 0; a <= D; ++a) add(r.nodes[a], -r.grads[a]);
    const double w = f.measure / h;
    for (const auto& [na, ga] : coeff)
      for (const auto& [nb, gb] : coeff) {
        const double v = w * ga.dot(gb);
        if (v == 0.0) continue;
        for (int i = 0; i < D; ++i) trips.emplace_back(na * D + i, nb * D + i, v);
      }
  }
  auto p = std::make_unique<Eigen::SparseMatrix<double>>(dof_count(), dof_count());
  p->setFromTriplets(trips.begin(), trips.end());
  jump_cache_ = std::move(p);
  return *jump_cache_;
}

}  // namespace pgrowth
