#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "xxz/correlators.hpp"

using namespace xxz;

namespace {

cplx F(double delta, const char* spec) { return zero_field_F_m(Regime::from_delta(delta), CorrelatorSpec::parse(spec)).value; }

ModelParams random_chain(double delta, int M, std::uint64_t seed) {
  const auto r = Regime::from_delta(delta);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<cplx> xi;
  for (int k = 0; k < M; ++k) {
    const cplx d = r.massless() ? cplx(u(rng), 0.2 * u(rng)) : cplx(0.2 * u(rng), u(rng));
    xi.push_back(r.eta() / 2.0 + d);
  }
  return ModelParams::inhomogeneous_chain(delta, xi);
}

}  // namespace

TEST(Spec, IndexSetsAndVariables) {
  const auto s = CorrelatorSpec::parse("12,22,11,21");
  // tokens are e'e: E^{12} has eps = 2, eps' = 1
  EXPECT_EQ(s.pairs()[0], (std::pair<int, int>{2, 1}));
  EXPECT_EQ(s.alpha_plus(), (std::vector<int>{3, 4}));
  EXPECT_EQ(s.alpha_minus(), (std::vector<int>{2, 4}));
  EXPECT_EQ(s.s() + s.s_prime(), 4);
  EXPECT_TRUE(s.nonzero());
  const auto v = s.variables();
  ASSERT_EQ(v.size(), 4u);
  EXPECT_TRUE(v[0].primed && v[0].j == 4);
  EXPECT_TRUE(v[1].primed && v[1].j == 3);
  EXPECT_TRUE(!v[2].primed && v[2].j == 2);
  EXPECT_TRUE(!v[3].primed && v[3].j == 4);
  EXPECT_EQ(s.to_string(), "12,22,11,21");
  EXPECT_EQ(s.kind(1), LocalKind::E12);
  EXPECT_EQ(s.block(1), Block::C);
  EXPECT_EQ(s.block(4), Block::B);
  EXPECT_THROW(CorrelatorSpec::parse("13"), ConfigError);
  EXPECT_THROW(CorrelatorSpec::parse(""), ConfigError);
}

TEST(Spec, SelectionRuleGivesZero) {
  const auto r = Regime::from_delta(0.3);
  for (const char* s : {"12", "21", "12,12", "11,21", "22,12,22"}) {
    const auto res = zero_field_F_m(r, CorrelatorSpec::parse(s));
    EXPECT_EQ(res.value, cplx(0.0)) << s;
  }
}

TEST(ZeroField, OneSiteIsOneHalf) {
  for (const double d : {-0.5, 0.0, 0.5, 1.0, 2.0, 4.0}) {
    for (const char* s : {"11", "22"}) {
      const auto res = zero_field_F_m(Regime::from_delta(d), CorrelatorSpec::parse(s));
      EXPECT_NEAR(res.value.real(), 0.5, 1e-10) << d << " " << s;
      EXPECT_TRUE(res.converged);
    }
  }
}

TEST(ZeroField, ContourReferenceForOneSite) {
  for (const double d : {0.0, 0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    for (const char* s : {"11", "22"}) {
      const auto spec = CorrelatorSpec::parse(s);
      EXPECT_LT(std::abs(gamma_reference_F1(r, spec).value - zero_field_F_m(r, spec).value), 1e-10);
    }
  }
}

TEST(ZeroField, FreeFermionValues) {
  EXPECT_NEAR(F(0.0, "22,22").real(), 0.25 - 1.0 / (kPi * kPi), 1e-9);
  EXPECT_NEAR(F(0.0, "12,21").real(), -1.0 / kPi, 1e-9);
}

TEST(ZeroField, DeltaOneHalfValues) {
  EXPECT_NEAR(F(0.5, "22,22").real(), 1.0 / 8.0, 1e-9);
  EXPECT_NEAR(F(0.5, "22,22,22").real(), 7.0 / 512.0, 1e-9);
  EXPECT_NEAR(F(0.5, "12,21").real(), -5.0 / 16.0, 1e-9);
  const auto zz = spin_correlator(Regime::from_delta(0.5), 0.0, SpinKind::ZZ, 1);
  EXPECT_NEAR(zz.value, -0.5, 1e-9);
  EXPECT_EQ(zz.blocks, 4u);
}

TEST(ZeroField, IsotropicValues) {
  EXPECT_NEAR(F(1.0, "22,22").real(), 1.0 / 3.0 - std::log(2.0) / 3.0, 1e-9);
  const double zeta3 = 1.2020569031595942854;
  EXPECT_NEAR(F(1.0, "22,22,22").real(), 0.25 - std::log(2.0) + 3.0 * zeta3 / 8.0, 1e-9);
  const auto zz = spin_correlator(Regime::from_delta(1.0), 0.0, SpinKind::ZZ, 1);
  EXPECT_NEAR(zz.value, 1.0 / 3.0 - 4.0 * std::log(2.0) / 3.0, 1e-9);
}

TEST(ZeroField, MassiveRegression) {
  EXPECT_NEAR(F(2.0, "22,22").real(), 0.050906366280334, 1e-11);
  EXPECT_NEAR(F(2.0, "11,22").real(), 0.449093633719666, 1e-11);
  EXPECT_NEAR(F(2.0, "12,21").real(), -0.219034778536535, 1e-11);
  EXPECT_NEAR(F(2.0, "22,22,22").real(), 0.001470552298062, 1e-12);
}

TEST(ZeroField, MatchesExtrapolatedDiagonalisation) {
  const std::array<int, 3> Ms{10, 12, 14};
  for (const double d : {0.5, 2.0}) {
    for (int m : {2, 3}) {
      const auto spec = CorrelatorSpec::efp(m);
      const double thermo = zero_field_F_m(Regime::from_delta(d), spec).value.real();
      const double oracle = extrapolated_exact_F_m(d, spec, Ms);
      EXPECT_LT(std::abs(thermo - oracle) / thermo, 0.01) << d << " " << m;
    }
  }
  const double zz = spin_correlator(Regime::from_delta(0.5), 0.0, SpinKind::ZZ, 1).value;
  double oracle = 0.0;
  for (const auto& [w, spec] : spin_blocks(SpinKind::ZZ, 1)) oracle += w * extrapolated_exact_F_m(0.5, spec, Ms);
  EXPECT_LT(std::abs(zz - oracle) / std::abs(zz), 0.01);
}

TEST(ZeroField, Completeness) {
  for (const double d : {0.3, 0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    for (const char* base : {"22", "12,21", "22,22", "11,22"}) {
      const std::string b(base);
      const cplx lower = zero_field_F_m(r, CorrelatorSpec::parse(b)).value;
      const cplx upper = zero_field_F_m(r, CorrelatorSpec::parse(b + ",11")).value +
                         zero_field_F_m(r, CorrelatorSpec::parse(b + ",22")).value;
      EXPECT_LT(std::abs(upper - lower), 1e-6 * std::abs(lower)) << d << " " << base;
    }
  }
}

TEST(ZeroField, RealityAndSymmetry) {
  for (const double d : {0.2, 0.8, 1.5}) {
    const auto r = Regime::from_delta(d);
    for (int m : {1, 2, 3}) EXPECT_LT(std::abs(efp(r, 0.0, m).value.imag()), 1e-8);
    const auto zz = spin_correlator(r, 0.0, SpinKind::ZZ, 2);
    EXPECT_LT(std::abs(zz.imag), 1e-8);
    EXPECT_NEAR(spin_correlator(r, 0.0, SpinKind::Z, 0).value, 0.0, 1e-10);
  }
}

TEST(ZeroField, ContinuousAcrossIsotropicPoint) {
  for (const char* s : {"22", "22,22", "11,22", "12,21"}) {
    const double below = F(0.95, s).real();
    const double above = F(1.05, s).real();
    EXPECT_LT(std::abs(below - above), 0.05 * 0.5 * std::abs(below + above)) << s;
  }
}

TEST(ZeroField, ThreadCountDoesNotChangeBits) {
  CorrelatorOptions serial;
  serial.parallel = false;
  const auto spec = CorrelatorSpec::parse("12,22,21");
  const auto r = Regime::from_delta(0.4);
  const cplx a = zero_field_F_m(r, spec, serial).value;
  const cplx b = zero_field_F_m(r, spec).value;
  EXPECT_EQ(a, b);
}

TEST(ZeroField, DimensionCap) {
  CorrelatorOptions o;
  o.dimension_cap = 2;
  EXPECT_THROW(zero_field_F_m(Regime::from_delta(0.5), CorrelatorSpec::efp(3), o), DimensionCap);
}

TEST(Inhomogeneous, ClosedFormAndLUAgree) {
  for (const double d : {0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    std::vector<cplx> xi;
    for (int k = 0; k < 3; ++k) {
      const cplx dev = r.massless() ? cplx(0.1 * k - 0.1, 0.05 * k * r.zeta()) : cplx(0.05 * k * r.zeta(), 0.1 * k - 0.1);
      xi.push_back(r.eta() / 2.0 + dev);
    }
    for (const char* s : {"22,22", "22,22,22", "12,21", "11,22,11"}) {
      const auto spec = CorrelatorSpec::parse(s);
      const cplx a = inhomogeneous_F_m(r, spec, xi, DetMode::ClosedForm).value;
      const cplx b = inhomogeneous_F_m(r, spec, xi, DetMode::LU).value;
      EXPECT_LT(std::abs(a - b), 1e-9 * std::abs(a)) << d << " " << s;
    }
  }
}

TEST(Inhomogeneous, ApproachesHomogeneousLimit) {
  for (const double d : {0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    const auto spec = CorrelatorSpec::parse("12,21");
    const cplx hom = zero_field_F_m(r, spec).value;
    double previous = 1.0;
    for (double eps : {1e-2, 1e-3}) {
      std::vector<cplx> xi;
      for (int k = 0; k < 2; ++k) {
        xi.push_back(r.eta() / 2.0 + (r.massless() ? cplx(eps * (k - 0.5), 0.0) : cplx(0.0, eps * (k - 0.5))));
      }
      const double gap = std::abs(inhomogeneous_F_m(r, spec, xi).value - hom);
      EXPECT_LT(gap, previous / 50);
      previous = gap;
    }
  }
}

TEST(Field, ZeroFieldProfileReproducesZeroFieldBlocks) {
  for (const double d : {0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    const auto prof = zero_field_profile(r);
    const double tol = r.massless() ? 1e-6 : 1e-11;
    for (const char* s : {"22", "11", "22,22", "12,21", "11,22,11"}) {
      const auto spec = CorrelatorSpec::parse(s);
      const cplx z = zero_field_F_m(r, spec).value;
      EXPECT_LT(std::abs(field_F_m(prof, spec) - z), tol * std::abs(z)) << d << " " << s;
    }
  }
}

TEST(Field, OneSiteEqualsDensityIntegral) {
  const auto r = Regime::from_delta(0.5);
  for (const double h : {0.2, 1.0, 2.0, 3.5, 5.0}) {
    const auto prof = solve_lieb(r, h);
    const cplx f = field_F_m(r, h, CorrelatorSpec::parse("22")).value;
    EXPECT_LT(std::abs(f - prof.integral()), 1e-6 * prof.integral()) << h;
    const cplx g = field_F_m(r, h, CorrelatorSpec::parse("11")).value;
    EXPECT_NEAR((f + g).real(), 1.0, 1e-9);
  }
}

TEST(Field, CompletenessInField) {
  const auto r = Regime::from_delta(0.3);
  const double h = 1.5;
  const cplx lower = field_F_m(r, h, CorrelatorSpec::parse("12,21")).value;
  const cplx upper = field_F_m(r, h, CorrelatorSpec::parse("12,21,11")).value +
                     field_F_m(r, h, CorrelatorSpec::parse("12,21,22")).value;
  EXPECT_LT(std::abs(upper - lower), 1e-6 * std::abs(lower));
}

TEST(Field, ContinuousAtZeroField) {
  const auto r = Regime::from_delta(0.5);
  for (const char* s : {"22", "22,22", "12,21"}) {
    const auto spec = CorrelatorSpec::parse(s);
    const cplx z = zero_field_F_m(r, spec).value;
    EXPECT_LT(std::abs(field_F_m(r, 1e-3, spec).value - z), 1e-3) << s;
  }
}

TEST(Field, MassiveBelowCriticalFieldUnchanged) {
  const auto r = Regime::from_delta(2.0);
  const double hc = critical_field(r.zeta());
  for (const char* s : {"22", "22,22", "12,21"}) {
    const auto spec = CorrelatorSpec::parse(s);
    EXPECT_EQ(correlator(r, 0.5 * hc, spec).value, zero_field_F_m(r, spec).value);
  }
  const double above = correlator(r, 2.5 * hc, CorrelatorSpec::parse("22")).value.real();
  EXPECT_LT(above, 0.5);
  EXPECT_NEAR(above, solve_lieb(r, 2.5 * hc).integral(), 1e-9);
}

TEST(Field, SaturatedChainIsFullyPolarised) {
  const auto r = Regime::from_delta(0.5);
  const double h = saturation_field(r) + 0.5;
  EXPECT_NEAR(correlator(r, h, CorrelatorSpec::parse("11")).value.real(), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(correlator(r, h, CorrelatorSpec::parse("22")).value), 0.0, 1e-12);
}

TEST(Field, IsotropicFieldRejected) {
  EXPECT_THROW(correlator(Regime::from_delta(1.0), 0.5, CorrelatorSpec::parse("22")), ConfigError);
}

TEST(FiniteChain, ActionEngineMatchesDenseAndReconstruction) {
  for (const double d : {0.5, 2.0}) {
    const auto p = random_chain(d, 6, 5);
    const auto st = solve_ground_state(p);
    ASSERT_TRUE(st.converged);
    for (const char* s : {"22", "11", "22,22", "12,21", "21,12", "22,22,22", "12,22,21", "11,21,12"}) {
      const auto spec = CorrelatorSpec::parse(s);
      const cplx dense = dense_F_m(spec, p, st.roots);
      EXPECT_LT(std::abs(finite_chain_F_m(spec, p, st.roots) - dense), 1e-10) << d << " " << s;
      EXPECT_LT(std::abs(qisp_F_m(spec, p, st.roots) - dense), 1e-10) << d << " " << s;
    }
    EXPECT_EQ(finite_chain_F_m(CorrelatorSpec::parse("12,12"), p, st.roots), cplx(0.0));
  }
}

TEST(FiniteChain, EmptinessAtEightSites) {
  const auto p = random_chain(0.7, 8, 9);
  const auto st = solve_ground_state(p);
  ASSERT_TRUE(st.converged);
  const auto spec = CorrelatorSpec::efp(2);
  EXPECT_LT(std::abs(finite_chain_F_m(spec, p, st.roots) - dense_F_m(spec, p, st.roots)), 1e-10);
}

TEST(FiniteChain, HomogeneousBetheStateMatchesDiagonalisation) {
  const auto p = ModelParams::homogeneous_chain(0.5, 10);
  const auto st = solve_ground_state(p);
  const auto gs = exact_ground_state(0.5, 10);
  for (const char* s : {"22,22", "12,21", "11,22,11"}) {
    const auto spec = CorrelatorSpec::parse(s);
    EXPECT_NEAR(dense_F_m(spec, p, st.roots).real(), exact_F_m(spec, gs), 1e-9) << s;
  }
}

TEST(FiniteChain, ApproachesThermodynamicValue) {
  const auto spec = CorrelatorSpec::efp(2);
  const double thermo = zero_field_F_m(Regime::from_delta(0.5), spec).value.real();
  double previous = 1.0;
  for (int M : {8, 10, 12}) {
    const double gap = std::abs(exact_F_m(spec, exact_ground_state(0.5, M)) - thermo);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
}

TEST(FiniteChain, SizeLimits) {
  const auto p = random_chain(0.5, 6, 3);
  const auto st = solve_ground_state(p);
  EXPECT_THROW(finite_chain_F_m(CorrelatorSpec::efp(4), p, st.roots), SizeError);
}

TEST(Field, NegativeAnisotropy) {
  for (const double d : {-0.2, -0.45}) {
    const auto r = Regime::from_delta(d);
    const auto prof = zero_field_profile(r);
    for (const char* s : {"11,11", "12,21", "11,11,22"}) {
      const auto spec = CorrelatorSpec::parse(s);
      const cplx z = zero_field_F_m(r, spec).value;
      EXPECT_LT(std::abs(field_F_m(prof, spec) - z), 1e-7) << d << " " << s;
    }
  }
  const auto r = Regime::from_delta(-0.7);
  EXPECT_THROW(field_F_m(r, 0.5, CorrelatorSpec::parse("11,22")), ConfigError);
  EXPECT_NO_THROW(field_F_m(r, 0.5, CorrelatorSpec::parse("22,22")));
}
