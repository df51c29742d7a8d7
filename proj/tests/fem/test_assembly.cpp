#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "pgrowth/core/parallel.hpp"
#include "pgrowth/core/random.hpp"
#include "pgrowth/fem/assembly.hpp"

using namespace pgrowth;

namespace {

template <int D>
DiscreteField<D> random_field(const MeshPtr<D>& m, std::uint64_t seed, double scale) {
  SplitMix64 rng(seed);
  DiscreteField<D> u(m);
  for (int i = 0; i < u.values().size(); ++i) u.values()(i) = scale * rng.normal();
  return u;
}

// independent fidelity oracle: collapsed 12x12 Gauss rule on each triangle
double fidelity_oracle(const DiscreteField<2>& u, const DiscreteField<2>& g, double kappa, double p) {
  const auto [x, w] = gauss_legendre_unit(12);
  const Mesh<2>& m = u.mesh();
  double total = 0.0;
  for (int e = 0; e < m.element_count(); ++e) {
    const auto& el = m.element(e);
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) {
        const double s = x[i];
        const double t = (1.0 - x[i]) * x[j];
        const std::array<double, 3> b{1.0 - s - t, s, t};
        const Vec<2> d = u.evaluate(e, b) - g.evaluate(e, b);
        total += 2.0 * el.volume * w[i] * w[j] * (1.0 - x[i]) * kappa * std::pow(d.norm(), p);
      }
  }
  return total;
}

struct GridCase {
  double p;
  double mu;
  double kappa;
};

std::vector<GridCase> grid() {
  std::vector<GridCase> out;
  for (double p : {1.5, 2.0, 3.0, 4.0})
    for (double mu : {0.0, 1.0})
      for (double kappa : {0.0, 2.0}) out.push_back({p, mu, kappa});
  return out;
}

template <int D>
ProblemSpec<D> random_spec(const MeshPtr<D>& m, const GridCase& c, std::uint64_t seed) {
  auto spec = ProblemSpec<D>::make(m, GrowthParams{c.p, c.mu, c.kappa, D});
  spec.g = random_field<D>(m, seed + 100, 0.3);
  return spec;
}

double fd_directional(const std::function<double(double)>& f, double h) {
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

}  // namespace

TEST(Energy, VanishesForRigidDataMatch) {
  auto m = Mesh<2>::unit(6);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{3.0, 0.7, 4.0});
  Mat<2> w;
  w << 0.0, 1.3, -1.3, 0.0;
  const auto u = DiscreteField<2>::interpolate(m, [&](const Vec<2>& x) -> Vec<2> { return w * x + Vec<2>(0.2, -1.0); });
  spec.g = u;
  EXPECT_NEAR(assemble_energy(u, spec), 0.0, 1e-14);
}

TEST(Energy, ConstantStrainQuadratic) {
  auto m = Mesh<2>::build(Vec<2>(0, 0), Vec<2>(2, 1.5), 5);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{2.0, 0.0, 0.0});
  Mat<2> a;
  a << 0.4, -0.3, -0.3, 1.2;
  const auto u = DiscreteField<2>::interpolate(m, [&](const Vec<2>& x) -> Vec<2> { return a * x; });
  EXPECT_NEAR(assemble_energy(u, spec), 0.5 * a.squaredNorm() * 3.0, 1e-12);
}

TEST(Energy, MatchesDenseQuadratureOracle) {
  auto m = Mesh<2>::unit(4);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{3.0, 1.0, 2.0});
  const auto u = random_field<2>(m, 5, 0.05);
  // keep u - g away from zero so the integrand is smooth and both rules resolve it
  spec.g = DiscreteField<2>::interpolate(m, [](const Vec<2>& x) { return Vec<2>(1.0 + 0.1 * x(0), -0.5 + 0.2 * x(1) * x(1)); });
  spec.quadrature_order = 8;
  double bulk = 0.0;
  for (int e = 0; e < m->element_count(); ++e)
    bulk += m->element(e).volume * energy_density(u.sym_gradient(e), spec.params, spec.elastic);
  const double oracle = bulk + fidelity_oracle(u, spec.g, 2.0, 3.0);
  EXPECT_NEAR(assemble_energy(u, spec), oracle, 1e-10);
}

TEST(Energy, SkewAffineInvariance) {
  auto m = Mesh<3>::unit(3);
  auto spec = ProblemSpec<3>::make(m, GrowthParams{3.0, 0.5, 0.0, 3});
  const auto u = random_field<3>(m, 9, 0.2);
  Mat<3> w;
  w << 0, 1, -2, -1, 0, 0.5, 2, -0.5, 0;
  auto v = u + DiscreteField<3>::interpolate(m, [&](const Vec<3>& x) -> Vec<3> { return w * x; });
  const double a = energy_breakdown(u, spec).bulk;
  EXPECT_NEAR(energy_breakdown(v, spec).bulk, a, 1e-12 * std::max(1.0, a));
}

TEST(Energy, PenaltyOnlyAddsEnergy) {
  auto m = Mesh<2>::unit(5);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{1.5, 0.0, 1.0});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto u = random_field<2>(m, s, 0.5);
    const double plain = assemble_energy(u, spec);
    auto penalized = spec;
    penalized.L = 10.0;
    EXPECT_GE(assemble_energy(u, penalized), plain);
  }
}

TEST(Energy, AffineFieldHasNoJumps) {
  auto m = Mesh<3>::unit(3);
  Mat<3> a = Mat<3>::Random();
  const auto u = DiscreteField<3>::interpolate(m, [&](const Vec<3>& x) -> Vec<3> { return a * x; });
  EXPECT_NEAR(u.values().dot(m->jump_operator() * u.values()), 0.0, 1e-10);
  auto v = DiscreteField<3>::interpolate(m, [](const Vec<3>& x) { return Vec<3>(x(0) * x(0), 0, 0); });
  EXPECT_GT(v.values().dot(m->jump_operator() * v.values()), 0.0);
}

TEST(Energy, ConvergesUnderRefinement) {
  // smooth field, p = 3, mu = 1: energy error against a fine reference decays at order >= 2
  auto f = [](const Vec<2>& x) { return Vec<2>(0.3 * std::sin(x(0)) * std::cos(x(1)), 0.2 * x(0) * x(1)); };
  std::vector<double> e;
  double reference = 0.0;
  {
    auto m = Mesh<2>::unit(256);
    auto spec = ProblemSpec<2>::make(m, GrowthParams{3.0, 1.0, 0.0});
    reference = assemble_energy(DiscreteField<2>::interpolate(m, f), spec);
  }
  for (int n : {8, 16, 32}) {
    auto m = Mesh<2>::unit(n);
    auto spec = ProblemSpec<2>::make(m, GrowthParams{3.0, 1.0, 0.0});
    e.push_back(std::abs(assemble_energy(DiscreteField<2>::interpolate(m, f), spec) - reference));
  }
  EXPECT_GT(std::log2(e[0] / e[1]), 1.8);
  EXPECT_GT(std::log2(e[1] / e[2]), 1.8);
}

TEST(Gradient, QuadraticCaseIsLinearStiffness) {
  auto m = Mesh<2>::unit(4);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{2.0, 0.0, 0.0});
  const auto u = random_field<2>(m, 1, 1.0);
  const auto k = assemble_hessian(DiscreteField<2>(m), spec);
  const auto g = assemble_gradient(u, spec);
  const Eigen::VectorXd ku = k * u.values();
  EXPECT_LT((g.free + g.reaction - ku).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gradient, ReactionChannelSplit) {
  auto m = Mesh<2>::unit(4);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{3.0, 1.0, 1.0});
  const auto g = assemble_gradient(random_field<2>(m, 2, 0.5), spec);
  for (int n = 0; n < m->node_count(); ++n) {
    if (m->on_boundary(n)) {
      EXPECT_EQ(g.free.segment<2>(2 * n), Vec<2>::Zero());
    } else {
      EXPECT_EQ(g.reaction.segment<2>(2 * n), Vec<2>::Zero());
    }
  }
}

class Consistency : public ::testing::TestWithParam<GridCase> {};

TEST_P(Consistency, GradientMatchesFiniteDifferences) {
  const GridCase c = GetParam();
  for (int n : {4, 8}) {
    auto m = Mesh<2>::unit(n);
    auto spec = random_spec<2>(m, c, 17 + n);
    const auto u = random_field<2>(m, 3 + n, 0.4);
    const auto dir = random_field<2>(m, 7 + n, 1.0);
    const auto g = assemble_gradient(u, spec);
    const double exact = (g.free + g.reaction).dot(dir.values());
    const double fd = fd_directional([&](double t) { return assemble_energy(u + t * dir, spec); }, 1e-4);
    EXPECT_LE(std::abs(exact - fd), 1e-5 * std::max(std::abs(exact), 1e-3)) << "p=" << c.p << " mu=" << c.mu;
  }
}

TEST_P(Consistency, HessianMatchesFiniteDifferences) {
  const GridCase c = GetParam();
  for (int n : {4, 8}) {
    auto m = Mesh<2>::unit(n);
    auto spec = random_spec<2>(m, c, 31 + n);
    const auto u = random_field<2>(m, 13 + n, 0.4);
    const auto dir = random_field<2>(m, 19 + n, 1.0);
    const Eigen::VectorXd hv = assemble_hessian(u, spec) * dir.values();
    const double h = 1e-5;
    const auto gp = assemble_gradient(u + h * dir, spec);
    const auto gm = assemble_gradient(u + (-h) * dir, spec);
    const Eigen::VectorXd fd = ((gp.free + gp.reaction) - (gm.free + gm.reaction)) / (2 * h);
    EXPECT_LE((hv - fd).norm(), 1e-4 * std::max(hv.norm(), 1e-3)) << "p=" << c.p << " mu=" << c.mu;
  }
}

INSTANTIATE_TEST_SUITE_P(Grid, Consistency, ::testing::ValuesIn(grid()));

TEST(Hessian, ConsistencyIn3D) {
  auto m = Mesh<3>::unit(3);
  auto spec = random_spec<3>(m, GridCase{3.0, 0.5, 2.0}, 4);
  spec.elastic = ElasticTensor<3>::isotropic(1.5, 0.8);
  const auto u = random_field<3>(m, 5, 0.3);
  const auto dir = random_field<3>(m, 6, 1.0);
  const Eigen::VectorXd hv = assemble_hessian(u, spec) * dir.values();
  const double h = 1e-5;
  const auto gp = assemble_gradient(u + h * dir, spec);
  const auto gm = assemble_gradient(u + (-h) * dir, spec);
  const Eigen::VectorXd fd = ((gp.free + gp.reaction) - (gm.free + gm.reaction)) / (2 * h);
  EXPECT_LE((hv - fd).norm(), 1e-4 * hv.norm());
}

TEST(Hessian, SymmetricAndQuadraticConstant) {
  auto m = Mesh<2>::unit(4);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{2.0, 0.3, 0.0});
  const Eigen::SparseMatrix<double> a = assemble_hessian(random_field<2>(m, 1, 1.0), spec);
  const Eigen::SparseMatrix<double> b = assemble_hessian(random_field<2>(m, 2, 1.0), spec);
  EXPECT_NEAR((Eigen::MatrixXd(a) - Eigen::MatrixXd(b)).cwiseAbs().maxCoeff(), 0.0, 1e-13);
  const Eigen::MatrixXd dense(a);
  EXPECT_LT((dense - dense.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Hessian, RigidMotionsAreInTheNullSpace) {
  auto m = Mesh<3>::unit(3);
  auto spec = ProblemSpec<3>::make(m, GrowthParams{3.0, 1.0, 0.0, 3});
  const auto hmat = assemble_hessian(random_field<3>(m, 8, 0.3), spec);
  Mat<3> w;
  w << 0, 0.3, 1, -0.3, 0, -2, -1, 2, 0;
  const auto r = DiscreteField<3>::interpolate(m, [&](const Vec<3>& x) -> Vec<3> { return w * x + Vec<3>(1, 2, 3); });
  EXPECT_LT((hmat * r.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hessian, PositiveSemidefiniteWhenShifted) {
  auto m = Mesh<2>::unit(4);
  auto spec = random_spec<2>(m, GridCase{1.5, 1.0, 2.0}, 3);
  const Eigen::MatrixXd h(assemble_hessian(random_field<2>(m, 4, 0.5), spec));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-10);
}

TEST(Hessian, DegenerateSubQuadraticNeedsRegularization) {
  auto m = Mesh<2>::unit(4);
  auto spec = ProblemSpec<2>::make(m, GrowthParams{1.5, 0.0, 0.0});
  DiscreteField<2> zero(m);
  EXPECT_THROW(assemble_hessian(zero, spec), UndefinedHessian);
  spec.L = 1.0;
  EXPECT_NO_THROW(assemble_hessian(zero, spec));
}

TEST(Assembly, MeshMismatch) {
  auto spec = ProblemSpec<2>::make(Mesh<2>::unit(4), GrowthParams{2.0, 0.0, 0.0});
  DiscreteField<2> other(Mesh<2>::unit(5));
  EXPECT_THROW(assemble_energy(other, spec), MeshMismatch);
  EXPECT_THROW(assemble_gradient(other, spec), MeshMismatch);
  EXPECT_THROW(assemble_hessian(other, spec), MeshMismatch);
}

TEST(Assembly, ThreadCountDoesNotChangeResults) {
  auto m = Mesh<2>::unit(16);
  auto spec = random_spec<2>(m, GridCase{3.0, 1.0, 2.0}, 1);
  spec.L = 5.0;
  const auto u = random_field<2>(m, 2, 0.4);
  set_thread_count(1);
  const double e1 = assemble_energy(u, spec);
  const auto g1 = assemble_gradient(u, spec);
  set_thread_count(4);
  const double e4 = assemble_energy(u, spec);
  const auto g4 = assemble_gradient(u, spec);
  set_thread_count(1);
  EXPECT_EQ(e1, e4);
  EXPECT_EQ(g1.free, g4.free);
}

TEST(Korn, EmpiricalConstantIsStableUnderRefinement) {
  // sup over random constrained fields of int |grad u|^2 / int (|e(u)|^2 + |u|^2)
  std::vector<double> worst;
  for (int n : {8, 16}) {
    auto m = Mesh<2>::unit(n);
    double c = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto u = random_field<2>(m, s, 1.0);
      for (int b : m->boundary_nodes()) u.set_node(b, Vec<2>::Zero());
      double grad = 0.0;
      double sym = 0.0;
      for (int e = 0; e < m->element_count(); ++e) {
        grad += m->element(e).volume * u.gradient(e).squaredNorm();
        sym += m->element(e).volume * u.sym_gradient(e).squared_norm();
      }
      c = std::max(c, grad / sym);
    }
    worst.push_back(c);
  }
  // for H^1_0 fields |grad u|^2 <= 2 |e(u)|^2 in the integrated sense
  for (double c : worst) {
    EXPECT_TRUE(std::isfinite(c));
    EXPECT_LE(c, 2.0 + 1e-12);
  }
}
