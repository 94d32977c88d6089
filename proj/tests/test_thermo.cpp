#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "xxz/finite_chain.hpp"
#include "xxz/thermo.hpp"

using namespace xxz;

TEST(Density, ClosedFormValues) {
  EXPECT_NEAR(closed_form_density(Regime::from_delta(0.0), 0.0), 1.0 / kPi, 1e-15);
  const auto ml = Regime::from_delta(0.5);
  const cplx v = closed_form_density(ml, cplx(0.4, -0.3));
  EXPECT_LT(std::abs(v - cplx(0.20165953429741947637, 0.21185074241537699233)), 1e-14);
  const auto mv = Regime::from_delta(std::cosh(1.0));
  EXPECT_NEAR(closed_form_density(mv, 0.0), 0.50010345172298362100, 1e-14);
  const cplx w = closed_form_density(mv, cplx(0.7, 0.1));
  EXPECT_LT(std::abs(w - cplx(0.10512081327383196716, -0.033041145187507644936)), 1e-14);
}

TEST(Density, ThetaFormMatchesFourierSeries) {
  const auto r = Regime::from_delta(2.3);
  for (double a = -1.5; a <= 1.5; a += 0.21) {
    for (double b : {-0.3, 0.0, 0.2}) {
      const cplx x(a, b * r.zeta());
      EXPECT_LT(std::abs(closed_form_density(r, x) - massive_density_series(r.zeta(), x)), 1e-13);
    }
  }
}

TEST(Density, NormalisedToOneHalf) {
  for (const double d : {-0.7, 0.0, 0.5, 0.95}) {
    const auto r = Regime::from_delta(d);
    const auto rule = make_rule(TruncatedLine{massless_cutoff(r.zeta(), 1e-17)}, 4001);
    EXPECT_NEAR(rule.integrate([&](cplx a) { return closed_form_density(r, a); }).real(), 0.5, 1e-12);
  }
  for (const double d : {1.2, 2.0, 5.0}) {
    const auto r = Regime::from_delta(d);
    const auto rule = make_rule(PeriodicSegment{-kPi / 2, kPi}, 200);
    EXPECT_NEAR(rule.integrate([&](cplx a) { return closed_form_density(r, a); }).real(), 0.5, 1e-13);
  }
}

TEST(Density, RhoTildeRule) {
  const auto ml = Regime::from_delta(0.3);
  EXPECT_EQ(rho_tilde(ml, cplx(0.2, 0.1)), closed_form_density(ml, cplx(0.2, 0.1)));
  const auto mv = Regime::from_delta(2.0);
  EXPECT_LT(std::abs(rho_tilde(mv, cplx(0.1, 0.2)) - kI * closed_form_density(mv, kI * cplx(0.1, 0.2))), 1e-16);
}

TEST(Density, PoleRaises) {
  const auto ml = Regime::from_delta(0.5);
  EXPECT_THROW(closed_form_density(ml, cplx(0.0, ml.zeta() / 2)), PoleError);
  const auto mv = Regime::from_delta(2.0);
  EXPECT_THROW(closed_form_density(mv, cplx(0.0, mv.zeta() / 2)), PoleError);
}

TEST(CriticalField, RegressionAndIndependentCheck) {
  EXPECT_NEAR(critical_field(1.0), 0.424839331300272611, 1e-15);
  EXPECT_NEAR(critical_field(std::acosh(2.0)), 1.55920908568011766, 1e-14);
  // the zero-field dressed energy at the zone edge vanishes exactly at h_c
  for (const double d : {std::cosh(1.0), 2.0, 3.0}) {
    const auto r = Regime::from_delta(d);
    const double hc = critical_field(r.zeta());
    EXPECT_NEAR(detail::edge_energy(r, hc, kPi / 2, 128), 0.0, 1e-12);
    EXPECT_GT(detail::edge_energy(r, 1.01 * hc, kPi / 2, 128), 0.0);
    EXPECT_LT(detail::edge_energy(r, 0.99 * hc, kPi / 2, 128), 0.0);
  }
}

TEST(CriticalField, BothSeriesAgree) {
  // direct alternating sum where it converges quickly
  for (const double z : {2.0, 3.0, kPi * 0.999, kPi * 1.001}) {
    double s = 1.0;
    for (int n = 1; n < 200; ++n) s += 2.0 * ((n % 2) ? -1.0 : 1.0) / std::cosh(n * z);
    EXPECT_NEAR(critical_field(z), 4.0 * std::sinh(z) * s, 1e-13 * critical_field(z));
  }
}

TEST(CriticalField, VanishesAtIsotropicPoint) {
  double prev = critical_field(2.0);
  for (double z = 1.5; z > 0.05; z *= 0.7) {
    const double hc = critical_field(z);
    EXPECT_LT(hc, prev);
    EXPECT_GT(hc, 0.0);
    prev = hc;
  }
  EXPECT_LT(critical_field(0.06), 1e-6);
  EXPECT_THROW(critical_field(0.0), ConfigError);
}

TEST(CriticalField, FiniteChainGapsLieAbove) {
  // spin-flip gap E(N-1) - E(N) decreases toward h_c with growing M
  const double hc = critical_field(std::acosh(2.0));
  double prev = 1e9;
  for (int M : {8, 10, 12}) {
    const double e0 = sector_lowest(Sector(M, M / 2), 2.0, 0.0, 1)[0].energy;
    const double e1 = sector_lowest(Sector(M, M / 2 - 1), 2.0, 0.0, 1)[0].energy;
    const double gap = e1 - e0;
    EXPECT_GT(gap, hc);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
}

TEST(Lieb, ZeroFieldMatchesClosedForm) {
  for (const double d : {-0.5, 0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    const auto p = solve_lieb(r, 0.0);
    EXPECT_FALSE(p.field_active);
    double err = 0;
    for (std::size_t i = 0; i < p.size(); ++i) err = std::max(err, std::abs(p.rho[i] - closed_form_density(r, p.x[i])));
    EXPECT_LT(err, 1e-8);
    for (double a = -1.3; a <= 1.3; a += 0.17) {
      EXPECT_LT(std::abs(p.rho_at(a) - closed_form_density(r, a)), 1e-8);
      EXPECT_LT(std::abs(p.rho_b_at(1, a) - closed_form_density(r, a)), 1e-8);
    }
    EXPECT_NEAR(p.integral(), 0.5, 1e-9);
    EXPECT_NEAR(p.magnetization(), 0.0, 1e-8);
  }
}

TEST(Lieb, FreeFermionFilling) {
  const auto r = Regime::from_delta(0.0);
  const auto p = solve_lieb(r, 1.3);
  EXPECT_TRUE(p.field_active);
  EXPECT_NEAR(p.integral(), 0.39463569450639678953, 1e-10);
}

TEST(Lieb, ResidualOffGrid) {
  for (const auto& [d, h] : std::vector<std::pair<double, double>>{{0.5, 1.0}, {-0.3, 2.0}, {2.0, 3.0}}) {
    const auto r = Regime::from_delta(d);
    const auto p = solve_lieb(r, h);
    ASSERT_TRUE(p.field_active);
    const double L = p.lambda_F;
    const auto fine = make_rule(GaussSegment{cplx(-L), cplx(L)}, 400);
    for (double t = -0.93; t < 1.0; t += 0.31) {
      const double a = t * L * 1.3;
      const cplx conv = fine.integrate([&](cplx mu) { return kernel_K(r, a - mu) * p.rho_at(mu); });
      const cplx res = p.rho_at(a) + conv - p0_prime(r, cplx(a)) / (2 * kPi);
      EXPECT_LT(std::abs(res), 1e-9);
    }
    EXPECT_NEAR(p.eps_at(L), 0.0, 1e-10);
  }
}

TEST(Lieb, EvenSolution) {
  const auto r = Regime::from_delta(0.7);
  const auto p = solve_lieb(r, 1.5);
  for (double a = 0.1; a < 2; a += 0.3) EXPECT_NEAR((p.rho_at(a) - p.rho_at(-a)).real(), 0.0, 1e-12);
}

TEST(Lieb, FermiBoundaryLimits) {
  const auto mv = Regime::from_delta(2.0);
  const double hc = critical_field(mv.zeta());
  EXPECT_THROW(fermi_boundary(mv, 0.5 * hc), NoFermiBoundary);
  EXPECT_FALSE(solve_lieb(mv, 0.5 * hc).field_active);
  const double near = fermi_boundary(mv, hc * 1.0001);
  EXPECT_LT(near, kPi / 2);
  EXPECT_GT(near, kPi / 2 - 0.2);
  const auto ml = Regime::from_delta(0.5);
  EXPECT_TRUE(std::isinf(fermi_boundary(ml, 0.0)));
  EXPECT_EQ(fermi_boundary(ml, saturation_field(ml)), 0.0);
  EXPECT_THROW(fermi_boundary(ml, -1.0), ConfigError);
}

TEST(Lieb, MonotoneTowardSaturation) {
  for (const double d : {0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    const double hs = saturation_field(r);
    double prevL = 1e9, prevM = -1;
    const double h0 = r.massive() ? critical_field(r.zeta()) * 1.05 : 0.3;
    for (double f = 0.0; f <= 1.0; f += 0.125) {
      const double h = h0 + f * (0.999 * hs - h0);
      const auto p = solve_lieb(r, h);
      EXPECT_LT(p.lambda_F, prevL);
      EXPECT_GT(p.magnetization(), prevM);
      prevL = p.lambda_F;
      prevM = p.magnetization();
    }
    EXPECT_LT(prevL, 0.15);
    EXPECT_GT(prevM, 0.9);
    EXPECT_NEAR(solve_lieb(r, hs).magnetization(), 1.0, 1e-15);
  }
}

TEST(Lieb, MagnetizationTracksFiniteChain) {
  // ground-state magnetization of M = 12 lies near the thermodynamic curve
  const double d = 0.5;
  const auto r = Regime::from_delta(d);
  for (double h : {1.0, 2.5, 4.0}) {
    const auto gs = exact_ground_state(d, 12, h);
    const double sigma_chain = 1.0 - 2.0 * gs.N / 12.0;
    EXPECT_NEAR(solve_lieb(r, h).magnetization(), sigma_chain, 2.0 / 12.0);
  }
}

TEST(Density, ResidueAtPoleAcrossRegimes) {
  for (const double d : {-0.7, -0.5, -0.3, 0.0, 0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    EXPECT_LT(std::abs(density_residue(zero_field_profile(r)) + 1.0), 1e-8) << d;
  }
  const std::array<double, 1> line{0.0};
  EXPECT_THROW(pole_circle_radius(Regime::from_delta(-0.5), line), PoleError);
  EXPECT_LT(pole_circle_radius(Regime::from_delta(-0.45), line), Regime::from_delta(-0.45).zeta() / 4);
  EXPECT_EQ(pole_circle_radius(Regime::from_delta(0.5), line), Regime::from_delta(0.5).zeta() / 4);
}
