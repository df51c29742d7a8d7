#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>

#include "pgrowth/fem/mesh.hpp"
#include "pgrowth/tensor/types.hpp"

namespace pgrowth {

/// Continuous piecewise-affine vector field; values are node-major (node * D + component).
template <int D>
class DiscreteField {
 public:
  DiscreteField() = default;
  explicit DiscreteField(MeshPtr<D> mesh) : mesh_(std::move(mesh)), values_(Eigen::VectorXd::Zero(mesh_->dof_count())) {}
  DiscreteField(MeshPtr<D> mesh, Eigen::VectorXd values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (values_.size() != mesh_->dof_count()) throw MeshMismatch("field length does not match node count x dim");
  }

  /// Nodal interpolant of a closed-form field.
  static DiscreteField interpolate(MeshPtr<D> mesh, const std::function<Vec<D>(const Vec<D>&)>& f) {
    DiscreteField out(mesh);
    for (int i = 0; i < mesh->node_count(); ++i) out.set_node(i, f(mesh->node(i)));
    return out;
  }

  [[nodiscard]] const Mesh<D>& mesh() const { return *mesh_; }
  [[nodiscard]] const MeshPtr<D>& mesh_ptr() const { return mesh_; }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  [[nodiscard]] Vec<D> at_node(int i) const { return values_.template segment<D>(i * D); }
  void set_node(int i, const Vec<D>& v) { values_.template segment<D>(i * D) = v; }

  [[nodiscard]] bool finite() const { return values_.allFinite(); }

  /// Full gradient on an element.
  [[nodiscard]] Mat<D> gradient(int e) const {
    const auto& el = mesh_->element(e);
    Mat<D> g = Mat<D>::Zero();
    for (int a = 0; a <= D; ++a) g += at_node(el.nodes[a]) * el.grads[a].transpose();
    return g;
  }

  /// e(u) = (grad u + grad u^T)/2 on an element.
  [[nodiscard]] SymMatrix<D> sym_gradient(int e) const { return SymMatrix<D>::from(gradient(e)); }

  /// Value at barycentric coordinates of an element.
  [[nodiscard]] Vec<D> evaluate(int e, const std::array<double, D + 1>& bary) const {
    const auto& el = mesh_->element(e);
    Vec<D> v = Vec<D>::Zero();
    for (int a = 0; a <= D; ++a) v += bary[a] * at_node(el.nodes[a]);
    return v;
  }

  DiscreteField& operator+=(const DiscreteField& o) {
    check_same(o);
    values_ += o.values_;
    return *this;
  }
  DiscreteField& operator-=(const DiscreteField& o) {
    check_same(o);
    values_ -= o.values_;
    return *this;
  }
  DiscreteField& operator*=(double s) {
    values_ *= s;
    return *this;
  }
  friend DiscreteField operator+(DiscreteField a, const DiscreteField& b) { return a += b; }
  friend DiscreteField operator-(DiscreteField a, const DiscreteField& b) { return a -= b; }
  friend DiscreteField operator*(double s, DiscreteField a) { return a *= s; }

  void check_same(const DiscreteField& o) const {
    if (mesh_ != o.mesh_ && !mesh_->same_as(*o.mesh_)) throw MeshMismatch("fields live on different meshes");
  }

 private:
  MeshPtr<D> mesh_;
  Eigen::VectorXd values_;
};

}  // namespace pgrowth
