#include <gtest/gtest.h>

#include "pgrowth/core/random.hpp"
#include "pgrowth/tensor/exponents.hpp"
#include "pgrowth/tensor/types.hpp"

using namespace pgrowth;

TEST(GrowthParams, RejectsInvalid) {
  EXPECT_THROW((GrowthParams{1.0, 0.0, 0.0, 2}.validate()), DomainError);
  EXPECT_THROW((GrowthParams{2.0, -1.0, 0.0, 2}.validate()), DomainError);
  EXPECT_THROW((GrowthParams{2.0, 0.0, -1.0, 2}.validate()), DomainError);
  EXPECT_THROW((GrowthParams{2.0, 0.0, 0.0, 4}.validate()), DomainError);
  EXPECT_NO_THROW((GrowthParams{1.5, 0.0, 1.0, 3}.validate()));
}

TEST(SymMatrix, FromIsBitwiseSymmetric) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Mat<3> a;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) a(i, j) = rng.normal() * 1e3;
    const auto s = SymMatrix<3>::from(a);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_EQ(s(i, j), s(j, i));
  }
}

TEST(Tensor4, SymmetricIdentityActsAsIdentity) {
  const auto id = Tensor4<2>::symmetric_identity();
  Mat<2> m;
  m << 1.0, 2.0, 2.0, -3.0;
  const auto xi = SymMatrix<2>::from(m);
  EXPECT_EQ(id.apply(xi), xi);
  EXPECT_DOUBLE_EQ(id.contract(xi, xi), xi.squared_norm());
  EXPECT_EQ(id.symmetry_defect(), 0.0);
}

TEST(ElasticTensor, IsotropicCoercivity) {
  // eigenvalues on Sym: 2 shear (deviatoric) and 2 shear + n lambda (spherical)
  const auto c = ElasticTensor<3>::isotropic(1.0, 0.5);
  EXPECT_NEAR(c.alpha(), 1.0, 1e-12);
  const auto c2 = ElasticTensor<2>::isotropic(-0.4, 1.0);
  EXPECT_NEAR(c2.alpha(), 2.0 - 0.8, 1e-12);
}

TEST(ElasticTensor, RejectsIndefiniteAndAsymmetric) {
  EXPECT_THROW(ElasticTensor<2>::isotropic(-1.5, 1.0), DomainError);
  auto t = Tensor4<2>::symmetric_identity();
  t(0, 0, 1, 1) = 0.3;
  EXPECT_THROW(ElasticTensor<2>{t}, DomainError);
}

TEST(Exponents, PtildeValues) {
  GrowthParams p4{4.0, 0.0, 0.0, 3};
  EXPECT_DOUBLE_EQ(ptilde(1.0, p4), 4.0);
  GrowthParams p3{3.0, 0.0, 0.0, 3};
  EXPECT_DOUBLE_EQ(ptilde(1.0, p3), 3.0);
  EXPECT_THROW(ptilde(1.0 / 3.0, p4), DomainError);
  EXPECT_THROW(ptilde(1.1, p4), DomainError);
  EXPECT_THROW(ptilde(1.0, GrowthParams{1.5, 0.0, 0.0, 2}), DomainError);
}

TEST(Exponents, PtildeDecreasingAndBlowsUp) {
  GrowthParams prm{3.5, 0.0, 0.0, 3};
  double prev = std::numeric_limits<double>::infinity();
  const double lo = 1.0 / (prm.p - 1.0);
  for (int k = 1; k <= 100; ++k) {
    const double lambda = lo + (1.0 - lo) * k / 100.0;
    const double v = ptilde(lambda, prm);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_GT(ptilde(lo + 1e-9, prm), 1e8);
}

TEST(Exponents, PtildeInverseMatchesScalarRoot) {
  // 8 lambda / (3 lambda - 1) = 12 by bisection
  GrowthParams prm{4.0, 0.0, 0.0, 3};
  double lo = 1.0 / 3.0 + 1e-12;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (8.0 * mid / (3.0 * mid - 1.0) > 12.0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(ptilde_inverse(12.0, prm), 0.5 * (lo + hi), 1e-12);
  EXPECT_NEAR(ptilde_inverse(12.0, prm), 3.0 / 7.0, 1e-15);
}

TEST(Exponents, Lambda0) {
  // p >= n: lambda0 = 1/(p-1)
  EXPECT_DOUBLE_EQ(lambda0(GrowthParams{4.0, 0.0, 0.0, 3}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(lambda0(GrowthParams{2.0, 0.0, 0.0, 3}), 1.0);
  // p < n: ptilde(lambda0) = p*
  GrowthParams prm{2.5, 0.0, 0.0, 3};
  const double l0 = lambda0(prm);
  EXPECT_NEAR(ptilde(l0, prm), sobolev_exponent(2.5, 3), 1e-10);
}
