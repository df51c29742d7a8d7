#include <gtest/gtest.h>

#include "pgrowth/core/random.hpp"
#include "pgrowth/tensor/n_function.hpp"

using namespace pgrowth;

namespace {

// Closed form of phi_a at p = 3 from the antiderivative in w = a + s.
double phi_p3(double a, double t, double mu) {
  auto g = [&](double w) {
    const double root = std::sqrt(mu + w * w);
    double log_term = 0.0;
    if (mu > 0.0) log_term = 0.5 * mu * std::log(w + root);
    return (mu + w * w) * root / 3.0 - a * (0.5 * w * root + log_term);
  };
  return g(a + t) - g(a);
}

}  // namespace

TEST(ShiftedNFunction, Examples) {
  for (double a : {0.0, 0.3, 7.0})
    for (double mu : {0.0, 2.0}) EXPECT_DOUBLE_EQ(shifted_n_function(a, 1.7, GrowthParams{2.0, mu}), 0.5 * 1.7 * 1.7);
  EXPECT_NEAR(shifted_n_function(0.0, 1.3, GrowthParams{4.0, 0.0}), std::pow(1.3, 4) / 4, 1e-14);
  EXPECT_EQ(shifted_n_function(2.0, 0.0, GrowthParams{1.5, 1.0}), 0.0);

  const GrowthParams prm{1.5, 1.0};
  const double v = shifted_n_function(2.0, 1.0, prm);
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, std::pow(5.0, -0.25) / 2);
}

TEST(ShiftedNFunction, MatchesClosedFormAtP3) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const double a = trial % 5 == 0 ? 0.0 : std::pow(10.0, 4 * rng.uniform() - 2);
    const double t = std::pow(10.0, 4 * rng.uniform() - 2);
    const double mu = trial % 3 == 0 ? 0.0 : std::pow(10.0, 2 * rng.uniform() - 1);
    const double exact = phi_p3(a, t, mu);
    const double got = shifted_n_function(a, t, GrowthParams{3.0, mu});
    EXPECT_LE(std::abs(got - exact), 1e-10 * (1.0 + exact) + 1e-12 * exact) << a << " " << t << " " << mu;
  }
}

TEST(ShiftedNFunction, StrictlyConvexMidpoint) {
  SplitMix64 rng(9);
  for (double p : {1.3, 2.5, 4.0}) {
    const GrowthParams prm{p, 0.5};
    for (int trial = 0; trial < 200; ++trial) {
      const ShiftedNFunction phi(3.0 * rng.uniform(), prm);
      const double x = 5 * rng.uniform();
      const double y = x + 0.1 + 5 * rng.uniform();
      EXPECT_LT(phi.value(0.5 * (x + y)), 0.5 * (phi.value(x) + phi.value(y)));
    }
  }
}

TEST(ShiftedNFunction, DerivativesMatchFiniteDifferences) {
  const ShiftedNFunction phi(0.8, GrowthParams{1.7, 0.3});
  for (double t : {0.01, 0.5, 2.0, 40.0}) {
    const double h = 1e-5 * t;
    EXPECT_NEAR((phi.value(t + h) - phi.value(t - h)) / (2 * h), phi.derivative(t), 1e-6 * phi.derivative(t));
    EXPECT_NEAR((phi.derivative(t + h) - phi.derivative(t - h)) / (2 * h), phi.second_derivative(t),
                1e-6 * phi.second_derivative(t));
  }
}

TEST(ShiftedConjugate, Examples) {
  EXPECT_DOUBLE_EQ(shifted_conjugate(1.0, 3.0, GrowthParams{2.0, 4.0}), 4.5);
  EXPECT_EQ(shifted_conjugate(1.0, 0.0, GrowthParams{3.0, 4.0}), 0.0);
  EXPECT_NEAR(shifted_conjugate(0.0, 1.0, GrowthParams{4.0, 0.0}), 0.75, 1e-12);
  EXPECT_NEAR(ShiftedNFunction(0.0, GrowthParams{4.0, 0.0}).derivative_inverse(1.0), 1.0, 1e-12);
}

TEST(ShiftedConjugate, IsSupremumOfAffineGap) {
  // brute-force sup_t (s t - phi(t)) on a fine grid as an independent oracle
  const GrowthParams prm{1.6, 0.4};
  const ShiftedNFunction phi(0.5, prm);
  for (double s : {0.05, 0.7, 3.0}) {
    const double tstar = phi.derivative_inverse(s);
    double best = 0.0;
    for (int k = 0; k <= 4000; ++k) {
      const double t = 3.0 * tstar * k / 4000.0;
      best = std::max(best, s * t - phi.value(t));
    }
    const double conj = phi.conjugate(s);
    EXPECT_GE(conj, best - 1e-12);
    EXPECT_LE(conj - best, 1e-5 * conj);
  }
}

TEST(ShiftedConjugate, PolarIdentity) {
  SplitMix64 rng(10);
  for (double p : {1.2, 1.5, 3.0, 5.0}) {
    const GrowthParams prm{p, 0.2};
    for (int trial = 0; trial < 100; ++trial) {
      const ShiftedNFunction phi(std::pow(10.0, 3 * rng.uniform() - 2), prm);
      const double t = std::pow(10.0, 4 * rng.uniform() - 2);
      const double s = phi.derivative(t);
      const double rhs = s * t - phi.value(t);
      EXPECT_NEAR(phi.conjugate(s), rhs, 1e-8 * rhs);
    }
  }
}
