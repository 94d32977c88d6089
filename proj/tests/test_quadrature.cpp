#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "xxz/quadrature.hpp"

using namespace xxz;

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const auto r = make_rule(GaussSegment{cplx(-1.0), cplx(2.0)}, 8);
  for (int k = 0; k <= 15; ++k) {
    const cplx v = r.integrate([&](cplx x) { return std::pow(x, k); });
    const double exact = (std::pow(2.0, k + 1) - std::pow(-1.0, k + 1)) / (k + 1);
    EXPECT_NEAR(v.real(), exact, 1e-12 * std::max(1.0, std::abs(exact)));
  }
}

TEST(GaussLegendre, WeightsPositiveAndSumToLength) {
  std::vector<double> x, w;
  gauss_legendre(37, x, w);
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_GT(w[i], 0.0);
    EXPECT_NEAR(x[i], -x[w.size() - 1 - i], 1e-15);
    s += w[i];
  }
  EXPECT_NEAR(s, 2.0, 1e-14);
}

TEST(GaussLegendre, ComplexSegment) {
  const cplx a(0.0, -1.0), b(1.0, 0.5);
  const auto r = make_rule(GaussSegment{a, b}, 20);
  const cplx v = r.integrate([](cplx z) { return std::exp(z); });
  EXPECT_LT(std::abs(v - (std::exp(b) - std::exp(a))), 1e-13);
}

TEST(Periodic, ExactForTrigonometricPolynomials) {
  const auto r = make_rule(PeriodicSegment{-kPi / 2, kPi}, 16);
  for (int k = 1; k < 8; ++k) {
    EXPECT_LT(std::abs(r.integrate([&](cplx x) { return std::cos(2.0 * k * x); })), 1e-14);
  }
  EXPECT_NEAR(r.integrate([](cplx) { return cplx(1.0); }).real(), kPi, 1e-14);
}

TEST(Periodic, ShiftedContourGivesSameIntegral) {
  // analytic periodic integrand: contour can move vertically
  auto f = [](cplx x) { return 1.0 / (2.0 + std::cos(2.0 * x)); };
  const auto r0 = make_rule(PeriodicSegment{-kPi / 2, kPi, 0.0}, 64);
  const auto r1 = make_rule(PeriodicSegment{-kPi / 2, kPi, -0.3}, 64);
  EXPECT_LT(std::abs(r0.integrate(f) - r1.integrate(f)), 1e-13);
  EXPECT_NEAR(r0.integrate(f).real(), kPi / std::sqrt(3.0), 1e-13);
}

TEST(TruncatedLine, SechIntegral) {
  const auto r = make_rule(TruncatedLine{40.0}, 800);
  const cplx v = r.integrate([](cplx x) { return 1.0 / std::cosh(x); });
  EXPECT_NEAR(v.real(), kPi, 1e-13);
}

TEST(Circle, ResidueTheorem) {
  const cplx c(0.2, -0.4);
  const auto r = make_rule(Circle{c, 0.25}, 64);
  EXPECT_LT(std::abs(r.integrate([&](cplx z) { return 1.0 / (z - c); }) - 2.0 * kPi * kI), 1e-13);
  EXPECT_LT(std::abs(r.integrate([&](cplx z) { return std::exp(z) / (z - c); }) - 2.0 * kPi * kI * std::exp(c)), 1e-12);
  EXPECT_LT(std::abs(r.integrate([&](cplx z) { return z * z; })), 1e-14);
}

TEST(Descriptors, Rejected) {
  EXPECT_THROW(make_rule(GaussSegment{0.0, 1.0}, 1), BadDescriptor);
  EXPECT_THROW(make_rule(GaussSegment{1.0, 1.0}, 8), BadDescriptor);
  EXPECT_THROW(make_rule(PeriodicSegment{0.0, -1.0}, 8), BadDescriptor);
  EXPECT_THROW(make_rule(TruncatedLine{0.0}, 8), BadDescriptor);
  EXPECT_THROW(make_rule(Circle{0.0, 0.0}, 8), BadDescriptor);
}

TEST(Concat, JoinsPieces) {
  const std::vector<QuadRule> parts{make_rule(GaussSegment{0.0, 1.0}, 10), make_rule(GaussSegment{1.0, 3.0}, 10)};
  const auto r = concat(parts);
  EXPECT_EQ(r.size(), 20u);
  EXPECT_NEAR(r.integrate([](cplx x) { return x; }).real(), 4.5, 1e-14);
}

TEST(TensorProduct, FactorisedIntegrand) {
  std::vector<QuadRule> rules(3, make_rule(GaussSegment{0.0, 1.0}, 12));
  const cplx v = integrate_nd([](std::span<const cplx> x) { return x[0] * x[1] * x[1] * std::exp(x[2]); }, rules);
  EXPECT_NEAR(v.real(), 0.5 / 3.0 * (std::exp(1.0) - 1.0), 1e-13);
}

TEST(TensorProduct, ZeroDimensionalAndCap) {
  std::vector<QuadRule> none;
  EXPECT_EQ(integrate_nd([](std::span<const cplx>) { return cplx(2.5); }, none), cplx(2.5));
  std::vector<QuadRule> five(5, make_rule(GaussSegment{0.0, 1.0}, 2));
  EXPECT_THROW(integrate_nd([](std::span<const cplx>) { return cplx(1.0); }, five), DimensionCap);
  EXPECT_NO_THROW(integrate_nd([](std::span<const cplx>) { return cplx(1.0); }, five, false, 5));
}

TEST(TensorProduct, BitwiseIndependentOfThreadCount) {
  std::vector<QuadRule> rules{make_rule(TruncatedLine{6.0}, 41), make_rule(Circle{cplx(0, -0.5), 0.2}, 24),
                              make_rule(GaussSegment{cplx(-1, 0.1), cplx(1, -0.1)}, 17)};
  auto f = [](std::span<const cplx> x) {
    return std::exp(-x[0] * x[0]) * std::cos(x[1] * x[2]) / (1.0 + x[1] * x[1]) + std::sin(x[0] + x[2]);
  };
  const cplx serial = integrate_nd(f, rules, false);
  for (const char* n : {"1", "2", "3", "7"}) {
    setenv("XXZ_THREADS", n, 1);
    const cplx par = integrate_nd(f, rules, true);
    EXPECT_EQ(par.real(), serial.real());
    EXPECT_EQ(par.imag(), serial.imag());
  }
  unsetenv("XXZ_THREADS");
}
