#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <optional>
#include <vector>

#include "pgrowth/core/error.hpp"

namespace pgrowth {

/// Maps full dof vectors to the free (unconstrained) ones and back.
class DofRestriction {
 public:
  DofRestriction() = default;
  explicit DofRestriction(const std::vector<bool>& constrained_dof) : to_free_(constrained_dof.size(), -1) {
    for (std::size_t i = 0; i < constrained_dof.size(); ++i)
      if (!constrained_dof[i]) {
        to_free_[i] = static_cast<int>(to_full_.size());
        to_full_.push_back(static_cast<int>(i));
      }
  }

  [[nodiscard]] int free_count() const { return static_cast<int>(to_full_.size()); }
  [[nodiscard]] int full_count() const { return static_cast<int>(to_free_.size()); }

  [[nodiscard]] Eigen::VectorXd restrict(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(free_count());
    for (int k = 0; k < free_count(); ++k) out(k) = full(to_full_[k]);
    return out;
  }

  /// Free vector scattered into zeros.
  [[nodiscard]] Eigen::VectorXd extend(const Eigen::VectorXd& free) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(full_count());
    for (int k = 0; k < free_count(); ++k) out(to_full_[k]) = free(k);
    return out;
  }

  /// Free-free block of a full matrix.
  [[nodiscard]] Eigen::SparseMatrix<double> restrict(const Eigen::SparseMatrix<double>& full) const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(full.nonZeros());
    for (int col = 0; col < full.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(full, col); it; ++it) {
        const int r = to_free_[it.row()];
        const int c = to_free_[it.col()];
        if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
      }
    Eigen::SparseMatrix<double> out(free_count(), free_count());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  }

  /// Free-constrained coupling block (rows free, columns full).
  [[nodiscard]] Eigen::SparseMatrix<double> coupling(const Eigen::SparseMatrix<double>& full) const {
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < full.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(full, col); it; ++it) {
        const int r = to_free_[it.row()];
        if (r >= 0 && to_free_[it.col()] < 0) trips.emplace_back(r, static_cast<int>(it.col()), it.value());
      }
    Eigen::SparseMatrix<double> out(free_count(), full_count());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  }

 private:
  std::vector<int> to_free_;
  std::vector<int> to_full_;
};

/// Above this many unknowns the SPD solve switches from sparse LDL^T to preconditioned CG.
inline constexpr int direct_solve_limit = 200000;

/// Solves A x = b for symmetric A. Returns nothing when A is not numerically positive definite.
inline std::optional<Eigen::VectorXd> spd_solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                                                double cg_tol = 1e-12) {
  if (a.rows() <= direct_solve_limit) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd d = ldlt.vectorD();
    if (d.size() > 0 && !(d.minCoeff() > 0.0)) return std::nullopt;
    Eigen::VectorXd x = ldlt.solve(b);
    if (ldlt.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
    return x;
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(cg_tol);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * a.rows()));
  cg.compute(a);
  if (cg.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd x = cg.solve(b);
  if (cg.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
  return x;
}

}  // namespace pgrowth
