#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

#include "pgrowth/core/error.hpp"

namespace pgrowth {

/// Exponent p, shift mu and fidelity weight kappa of the p-growth energy.
struct GrowthParams {
  double p = 2.0;
  double mu = 0.0;
  double kappa = 0.0;
  int dim = 2;

  void validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("p must be > 1, got " + std::to_string(p));
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("mu must be >= 0");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be >= 0");
    if (dim != 2 && dim != 3) throw DomainError("dim must be 2 or 3");
  }
};

template <int D>
using Mat = Eigen::Matrix<double, D, D>;

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

/// Column-major flattening index of entry (i, j).
template <int D>
constexpr int vec_index(int i, int j) {
  return i + D * j;
}

/// Symmetric n x n matrix. Entries (i,j) and (j,i) are bitwise equal.
template <int D>
class SymMatrix {
 public:
  using Matrix = Mat<D>;

  SymMatrix() : m_(Matrix::Zero()) {}

  /// Symmetric part (A + A^T)/2.
  static SymMatrix from(const Matrix& a) {
    SymMatrix s;
    for (int j = 0; j < D; ++j)
      for (int i = 0; i < D; ++i) s.m_(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
  }

  static SymMatrix zero() { return SymMatrix(); }
  static SymMatrix identity() { return from(Matrix::Identity()); }
  static SymMatrix diagonal(const std::array<double, D>& d) {
    SymMatrix s;
    for (int i = 0; i < D; ++i) s.m_(i, i) = d[i];
    return s;
  }

  [[nodiscard]] const Matrix& matrix() const { return m_; }
  [[nodiscard]] double operator()(int i, int j) const { return m_(i, j); }

  [[nodiscard]] double dot(const SymMatrix& o) const { return (m_.array() * o.m_.array()).sum(); }
  [[nodiscard]] double squared_norm() const { return m_.squaredNorm(); }
  [[nodiscard]] double norm() const { return m_.norm(); }
  [[nodiscard]] double trace() const { return m_.trace(); }

  SymMatrix& operator+=(const SymMatrix& o) {
    m_ += o.m_;
    return *this;
  }
  SymMatrix& operator-=(const SymMatrix& o) {
    m_ -= o.m_;
    return *this;
  }
  SymMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) { return a.m_ == b.m_; }

 private:
  Matrix m_;
};

/// Fourth-order tensor stored as a D^2 x D^2 matrix acting on column-major flattened matrices.
template <int D>
class Tensor4 {
 public:
  static constexpr int N = D * D;
  using Storage = Eigen::Matrix<double, N, N>;

  Tensor4() : t_(Storage::Zero()) {}
  explicit Tensor4(const Storage& t) : t_(t) {}

  /// The identity on symmetric matrices: (delta_ik delta_jl + delta_il delta_jk) / 2.
  static Tensor4 symmetric_identity() {
    Tensor4 c;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k)
          for (int l = 0; l < D; ++l)
            c.t_(vec_index<D>(i, j), vec_index<D>(k, l)) =
                0.5 * ((i == k && j == l ? 1.0 : 0.0) + (i == l && j == k ? 1.0 : 0.0));
    return c;
  }

  /// Isotropic tensor: C xi = 2 shear xi + lambda tr(xi) I.
  static Tensor4 isotropic(double lambda, double shear) {
    Tensor4 c = symmetric_identity();
    c.t_ *= 2.0 * shear;
    for (int i = 0; i < D; ++i)
      for (int k = 0; k < D; ++k) c.t_(vec_index<D>(i, i), vec_index<D>(k, k)) += lambda;
    return c;
  }

  /// a (x) b
  static Tensor4 outer(const SymMatrix<D>& a, const SymMatrix<D>& b) {
    Eigen::Map<const Eigen::Matrix<double, N, 1>> va(a.matrix().data());
    Eigen::Map<const Eigen::Matrix<double, N, 1>> vb(b.matrix().data());
    return Tensor4(va * vb.transpose());
  }

  [[nodiscard]] double operator()(int i, int j, int k, int l) const {
    return t_(vec_index<D>(i, j), vec_index<D>(k, l));
  }
  double& operator()(int i, int j, int k, int l) { return t_(vec_index<D>(i, j), vec_index<D>(k, l)); }

  [[nodiscard]] const Storage& storage() const { return t_; }

  [[nodiscard]] SymMatrix<D> apply(const SymMatrix<D>& xi) const {
    Eigen::Map<const Eigen::Matrix<double, N, 1>> v(xi.matrix().data());
    const Eigen::Matrix<double, N, 1> r = t_ * v;
    return SymMatrix<D>::from(Eigen::Map<const Mat<D>>(r.data()));
  }

  /// <T eta, zeta>
  [[nodiscard]] double contract(const SymMatrix<D>& eta, const SymMatrix<D>& zeta) const {
    Eigen::Map<const Eigen::Matrix<double, N, 1>> ve(eta.matrix().data());
    Eigen::Map<const Eigen::Matrix<double, N, 1>> vz(zeta.matrix().data());
    return vz.dot(t_ * ve);
  }

  /// Largest deviation from major and minor symmetry.
  [[nodiscard]] double symmetry_defect() const {
    double defect = 0.0;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        for (int k = 0; k < D; ++k)
          for (int l = 0; l < D; ++l) {
            const double c = (*this)(i, j, k, l);
            defect = std::max({defect, std::abs(c - (*this)(k, l, i, j)), std::abs(c - (*this)(j, i, k, l)),
                               std::abs(c - (*this)(i, j, l, k))});
          }
    return defect;
  }

  /// Extreme eigenvalues of the quadratic form restricted to symmetric matrices.
  [[nodiscard]] std::pair<double, double> symmetric_eigen_range() const {
    constexpr int M = D * (D + 1) / 2;
    Eigen::Matrix<double, N, M> basis = Eigen::Matrix<double, N, M>::Zero();
    int col = 0;
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j, ++col) {
        if (i == j) {
          basis(vec_index<D>(i, i), col) = 1.0;
        } else {
          basis(vec_index<D>(i, j), col) = std::sqrt(0.5);
          basis(vec_index<D>(j, i), col) = std::sqrt(0.5);
        }
      }
    const Eigen::Matrix<double, M, M> reduced = basis.transpose() * t_ * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, M, M>> eig(0.5 * (reduced + reduced.transpose()));
    return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
  }

  Tensor4& operator+=(const Tensor4& o) {
    t_ += o.t_;
    return *this;
  }
  Tensor4& operator*=(double s) {
    t_ *= s;
    return *this;
  }
  friend Tensor4 operator+(Tensor4 a, const Tensor4& b) { return a += b; }
  friend Tensor4 operator*(double s, Tensor4 a) { return a *= s; }

 private:
  Storage t_;
};

/// Elastic moduli C with its coercivity constant alpha: C xi . xi >= alpha |xi|^2.
template <int D>
class ElasticTensor {
 public:
  ElasticTensor() : ElasticTensor(Tensor4<D>::symmetric_identity()) {}

  explicit ElasticTensor(const Tensor4<D>& c) : c_(c) {
    const double scale = std::max(1.0, c.storage().cwiseAbs().maxCoeff());
    if (c.symmetry_defect() > 1e-12 * scale)
      throw DomainError("elastic tensor lacks major/minor symmetry");
    const auto [lo, hi] = c.symmetric_eigen_range();
    if (!(lo > 1e-14 * std::max(1.0, hi)))
      throw DomainError("elastic tensor is not positive definite on symmetric matrices");
    alpha_ = lo;
  }

  static ElasticTensor identity() { return ElasticTensor(); }
  static ElasticTensor isotropic(double lambda, double shear) {
    return ElasticTensor(Tensor4<D>::isotropic(lambda, shear));
  }

  [[nodiscard]] const Tensor4<D>& tensor() const { return c_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] SymMatrix<D> apply(const SymMatrix<D>& xi) const { return c_.apply(xi); }

 private:
  Tensor4<D> c_;
  double alpha_ = 1.0;
};

}  // namespace pgrowth
