#include <gtest/gtest.h>

#include <sstream>

#include "pgrowth/core/random.hpp"
#include "pgrowth/fem/ball.hpp"
#include "pgrowth/fem/difference.hpp"
#include "pgrowth/fem/snapshot.hpp"

using namespace pgrowth;

namespace {

template <int D>
double total_volume(const Mesh<D>& m) {
  double v = 0.0;
  for (const auto& e : m.elements()) v += e.volume;
  return v;
}

}  // namespace

TEST(Mesh, Counts) {
  auto m2 = Mesh<2>::unit(2);
  EXPECT_EQ(m2->node_count(), 9);
  EXPECT_EQ(m2->element_count(), 8);
  for (int n : {3, 5, 8}) {
    auto m = Mesh<2>::unit(n);
    EXPECT_EQ(m->node_count(), (n + 1) * (n + 1));
    EXPECT_EQ(m->element_count(), 2 * n * n);
    EXPECT_EQ(static_cast<int>(m->boundary_nodes().size()), 4 * n);
  }
  auto m3 = Mesh<3>::unit(2);
  EXPECT_EQ(m3->node_count(), 27);
  EXPECT_EQ(m3->element_count(), 48);
  EXPECT_EQ(static_cast<int>(m3->boundary_nodes().size()), 26);
}

TEST(Mesh, VolumeAndOrientation) {
  auto m2 = Mesh<2>::build(Vec<2>(-1.0, 0.5), Vec<2>(2.0, 1.25), 7);
  EXPECT_NEAR(total_volume(*m2), 3.0 * 0.75, 1e-12);
  auto m3 = Mesh<3>::build(Vec<3>(0, 0, 0), Vec<3>(1.0, 2.0, 0.5), 4);
  EXPECT_NEAR(total_volume(*m3), 1.0, 1e-12);
  for (const auto& e : m3->elements()) {
    Mat<3> jac;
    for (int k = 0; k < 3; ++k) jac.col(k) = m3->node(e.nodes[k + 1]) - m3->node(e.nodes[0]);
    EXPECT_GT(jac.determinant(), 0.0);
  }
}

TEST(Mesh, BoundaryNodesAreExactlyOnTheBox) {
  auto m = Mesh<3>::unit(3);
  for (int n = 0; n < m->node_count(); ++n) {
    const Vec<3>& x = m->node(n);
    const bool on = (x.array() == 0.0).any() || (x.array() == 1.0).any();
    EXPECT_EQ(on, m->on_boundary(n));
  }
}

TEST(Mesh, InteriorFacets) {
  // 2D: 3N^2 - 2N interior edges... counted directly: horizontal N(N-1), vertical N(N-1), diagonals N^2
  for (int n : {2, 4}) {
    auto m = Mesh<2>::unit(n);
    EXPECT_EQ(static_cast<int>(m->interior_facets().size()), 2 * n * (n - 1) + n * n);
  }
  // 3D: every tet has 4 faces, boundary faces are 2 per square, 6 N^2 squares
  auto m = Mesh<3>::unit(2);
  const int boundary_faces = 2 * 6 * 4;
  EXPECT_EQ(static_cast<int>(m->interior_facets().size()), (4 * m->element_count() - boundary_faces) / 2);
}

TEST(Mesh, RejectsBadDomains) {
  EXPECT_THROW(Mesh<2>::unit(1), BadDomain);
  EXPECT_THROW(Mesh<2>::build(Vec<2>(0, 0), Vec<2>(1, 0), 4), BadDomain);
  EXPECT_THROW(Mesh<3>::build(Vec<3>(0, 0, 0), Vec<3>(1, -1, 1), 4), BadDomain);
}

TEST(Mesh, DescriptorRoundTrip) {
  auto m = Mesh<3>::build(Vec<3>(-1, 0, 2), Vec<3>(1, 3, 2.5), 5);
  auto r = Mesh<3>::from_descriptor(m->descriptor());
  EXPECT_TRUE(m->same_as(*r));
  ASSERT_EQ(r->node_count(), m->node_count());
  for (int n = 0; n < m->node_count(); ++n) EXPECT_EQ(m->node(n), r->node(n));
}

TEST(Quadrature, RulesIntegratePolynomialsExactly) {
  // integral over the unit reference triangle of x^a y^b = a! b! / (a+b+2)!
  auto fact = [](int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  for (int order : {2, 3, 4, 6}) {
    const auto rule = SimplexRule<2>::of_order(order);
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        double q = 0.0;
        for (int k = 0; k < rule.size(); ++k) q += 0.5 * rule.weights[k] * std::pow(rule.bary[k][1], a) * std::pow(rule.bary[k][2], b);
        EXPECT_NEAR(q, fact(a) * fact(b) / fact(a + b + 2), 1e-14) << order << " " << a << " " << b;
      }
  }
  for (int order : {2, 3, 5}) {
    const auto rule = SimplexRule<3>::of_order(order);
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b)
        for (int c = 0; a + b + c <= order; ++c) {
          double q = 0.0;
          for (int k = 0; k < rule.size(); ++k)
            q += rule.weights[k] / 6.0 * std::pow(rule.bary[k][1], a) * std::pow(rule.bary[k][2], b) * std::pow(rule.bary[k][3], c);
          EXPECT_NEAR(q, fact(a) * fact(b) * fact(c) / fact(a + b + c + 3), 1e-14);
        }
  }
}

TEST(Field, SymGradientExamples) {
  auto m = Mesh<2>::build(Vec<2>(-1, -1), Vec<2>(1, 1), 4);
  Mat<2> a;
  a << 0.3, -0.7, -0.7, 1.1;
  Mat<2> w;
  w << 0.0, 0.4, -0.4, 0.0;
  const auto ua = DiscreteField<2>::interpolate(m, [&](const Vec<2>& x) -> Vec<2> { return a * x; });
  const auto uw = DiscreteField<2>::interpolate(m, [&](const Vec<2>& x) -> Vec<2> { return w * x; });
  const auto uq = DiscreteField<2>::interpolate(m, [](const Vec<2>& x) { return Vec<2>(x(0) * x(0), 0.0); });
  for (int e = 0; e < m->element_count(); ++e) {
    EXPECT_LT((ua.sym_gradient(e).matrix() - a).norm(), 1e-14);
    EXPECT_LT(uw.sym_gradient(e).norm(), 1e-15);
    // the x1-edge of a Kuhn triangle runs from x_a to x_b, and (x_b^2 - x_a^2) / (x_b - x_a) = x_a + x_b
    double lo = 1e9;
    double hi = -1e9;
    for (int n : m->element(e).nodes) {
      lo = std::min(lo, m->node(n)(0));
      hi = std::max(hi, m->node(n)(0));
    }
    EXPECT_NEAR(uq.sym_gradient(e)(0, 0), lo + hi, 1e-14);
  }
}

TEST(Field, LengthMismatch) {
  auto m = Mesh<2>::unit(3);
  EXPECT_THROW(DiscreteField<2>(m, Eigen::VectorXd::Zero(5)), MeshMismatch);
  DiscreteField<2> a(m);
  DiscreteField<2> b(Mesh<2>::unit(4));
  EXPECT_THROW(a += b, MeshMismatch);
}

TEST(Difference, AffineFieldGivesConstant) {
  auto m = Mesh<2>::unit(8);
  Mat<2> a;
  a << 1.0, 2.0, -3.0, 0.5;
  const auto u = DiscreteField<2>::interpolate(m, [&](const Vec<2>& x) -> Vec<2> { return a * x; });
  const double h = 2.0 / 8.0;
  const auto dq = difference_quotient(u, 1, h);
  for (int n = 0; n < m->node_count(); ++n) {
    if (m->lattice(n)[1] + 2 <= 8) {
      EXPECT_LT((dq.at_node(n) - a.col(1)).norm(), 1e-13);
    } else {
      EXPECT_EQ(dq.at_node(n), Vec<2>::Zero());
    }
  }
}

TEST(Difference, SecondDifferenceOfQuadratic) {
  auto m = Mesh<2>::unit(10);
  const auto u = DiscreteField<2>::interpolate(m, [](const Vec<2>& x) { return Vec<2>(x(0) * x(0), 0.0); });
  const double h = 0.1;
  const auto dd = difference_quotient(difference_quotient(u, 0, h), 0, -h);
  for (int n = 0; n < m->node_count(); ++n) {
    const int i = m->lattice(n)[0];
    if (i >= 1 && i <= 9) {
      EXPECT_LT((dd.at_node(n) - Vec<2>(2.0, 0.0)).norm(), 1e-10);
    }
  }
}

TEST(Difference, ShiftIsStepTimesQuotient) {
  auto m = Mesh<3>::unit(4);
  SplitMix64 rng(3);
  DiscreteField<3> u(m);
  for (int i = 0; i < u.values().size(); ++i) u.values()(i) = rng.normal();
  const double h = -0.5;
  const auto tau = shift_difference(u, 2, h);
  auto dq = difference_quotient(u, 2, h);
  dq *= h;
  EXPECT_LT((tau.values() - dq.values()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Difference, RejectsMisalignedSteps) {
  auto m = Mesh<2>::unit(4);
  DiscreteField<2> u(m);
  EXPECT_THROW(difference_quotient(u, 0, 0.3), BadStep);
  EXPECT_THROW(difference_quotient(u, 0, 0.0), BadStep);
  EXPECT_THROW(difference_quotient(u, 2, 0.25), BadStep);
  EXPECT_NO_THROW(difference_quotient(u, 0, 0.75));
}

TEST(Ball, ConstantMeanIsExact) {
  auto m = Mesh<2>::build(Vec<2>(-1, -1), Vec<2>(1, 1), 32);
  BallRegion<2> region(m, Ball<2>{Vec<2>(0.1, -0.05), 0.5});
  EXPECT_DOUBLE_EQ(region.mean([](int) { return 3.25; }), 3.25);
  EXPECT_DOUBLE_EQ(region.element_mean([](int) { return -1.5; }), -1.5);
}

TEST(Ball, OddFieldCancels) {
  auto m = Mesh<2>::build(Vec<2>(-1, -1), Vec<2>(1, 1), 32);
  BallRegion<2> region(m, Ball<2>{Vec<2>::Zero(), 0.5});
  const auto& q = m->quadrature(region.order());
  EXPECT_LE(std::abs(region.mean([&](int g) { return q.point(g)(0); })), 1e-3 * 0.5);
}

TEST(Ball, SecondMomentOverDisk) {
  // mean of x1^2 over the disk of radius r is (pi r^4 / 4) / (pi r^2) = r^2 / 4
  for (int n : {32, 64}) {
    auto m = Mesh<2>::build(Vec<2>(-1, -1), Vec<2>(1, 1), n);
    for (double r : {0.25, 0.5, 0.8}) {
      if (r < 4.0 * 2.0 / n) continue;
      BallRegion<2> region(m, Ball<2>{Vec<2>::Zero(), r});
      const auto& q = m->quadrature(region.order());
      const double mean = region.mean([&](int g) { return q.point(g)(0) * q.point(g)(0); });
      EXPECT_NEAR(mean, r * r / 4.0, 0.02 * r * r / 4.0);
    }
  }
}

TEST(Ball, VolumeApproachesBallVolume) {
  auto m = Mesh<3>::build(Vec<3>(-1, -1, -1), Vec<3>(1, 1, 1), 16);
  BallRegion<3> region(m, Ball<3>{Vec<3>::Zero(), 0.6});
  EXPECT_NEAR(region.volume(), 4.0 / 3.0 * M_PI * 0.216, 0.03 * 4.0 / 3.0 * M_PI * 0.216);
}

TEST(Ball, Guards) {
  auto m = Mesh<2>::unit(16);
  EXPECT_THROW(BallRegion<2>(m, Ball<2>{Vec<2>(0.5, 0.5), 0.2}), BallTooSmall);
  EXPECT_THROW(BallRegion<2>(m, Ball<2>{Vec<2>(0.5, 0.5), 0.5}), BallOutsideDomain);
  EXPECT_THROW(BallRegion<2>(m, Ball<2>{Vec<2>(0.2, 0.5), 0.3}), BallOutsideDomain);
  EXPECT_NO_THROW(BallRegion<2>(m, Ball<2>{Vec<2>(0.5, 0.5), 0.25}));
}

TEST(Snapshot, RoundTripIsBitwise) {
  auto m = Mesh<3>::build(Vec<3>(0, 0, 0), Vec<3>(2, 1, 1), 3);
  SplitMix64 rng(11);
  DiscreteField<3> u(m);
  for (int i = 0; i < u.values().size(); ++i) u.values()(i) = rng.normal() * 1e-7 + (i % 3 == 0 ? -0.0 : 1.0 / 3.0);
  std::stringstream buf;
  write_snapshot(buf, u, nlohmann::json{{"p", 3.0}});
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "PGFS");
  nlohmann::json params;
  const auto r = read_snapshot<3>(buf, &params);
  EXPECT_TRUE(r.mesh().same_as(*m));
  EXPECT_EQ(params.at("p").get<double>(), 3.0);
  for (int i = 0; i < u.values().size(); ++i) EXPECT_EQ(std::memcmp(&u.values()(i), &r.values()(i), 8), 0);
  std::stringstream wrong(bytes);
  EXPECT_THROW(read_snapshot<2>(wrong), MeshMismatch);
  std::stringstream junk("nope");
  EXPECT_THROW(read_snapshot<2>(junk), IoError);
}
