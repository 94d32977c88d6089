#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "xxz/bethe.hpp"
#include "xxz/finite_chain.hpp"
#include "xxz/scalar_products.hpp"

using namespace xxz;

namespace {

ModelParams shifted_chain(double delta, int M) {
  const auto r = Regime::from_delta(delta);
  std::vector<cplx> xi;
  for (int k = 0; k < M; ++k) {
    const double t = 0.09 * (k - (M - 1) / 2.0) + 0.013 * k * k;
    xi.push_back(r.eta() / 2.0 + (r.massless() ? cplx(t, 0.03 * t) : cplx(0.03 * t, t)));
  }
  return ModelParams::inhomogeneous_chain(delta, xi);
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST(Cauchy, SinhDeterminantMatchesLu) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 1; n <= 5; ++n) {
    std::vector<cplx> l(n), m(n);
    for (int k = 0; k < n; ++k) {
      l[k] = cplx(u(rng), u(rng));
      m[k] = cplx(u(rng), u(rng));
    }
    Eigen::MatrixXcd v(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) v(a, b) = 1.0 / std::sinh(m[b] - l[a]);
    EXPECT_LT(rel(cauchy_det_sinh(l, m), lu_det(v)), 1e-11);
  }
}

TEST(Slavnov, MatchesDenseScalarProduct) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (const double d : {0.5, 2.0}) {
    const auto p = shifted_chain(d, 8);
    const auto st = solve_ground_state(p);
    ASSERT_TRUE(st.converged);
    for (int t = 0; t < 4; ++t) {
      std::vector<cplx> mu;
      for (int k = 0; k < 4; ++k) mu.push_back(cplx(u(rng), u(rng)));
      const cplx dense = dense_scalar_product(p, mu, st.roots);
      EXPECT_LT(rel(slavnov_scalar_product(p, st.roots, mu).value, dense), 1e-9);
    }
  }
}

TEST(Gaudin, NormMatchesDense) {
  for (const double d : {-0.3, 0.5, 2.0}) {
    const auto p = shifted_chain(d, 8);
    const auto st = solve_ground_state(p);
    const cplx dense = dense_scalar_product(p, st.roots, st.roots);
    EXPECT_LT(rel(gaudin_norm(p, st.roots).value, dense), 1e-9) << d;
  }
}

TEST(Gaudin, HomogeneousNormMatchesDense) {
  const auto p = ModelParams::homogeneous_chain(0.5, 8);
  const auto st = solve_homogeneous(p);
  EXPECT_LT(rel(gaudin_norm(p, st.roots).value, dense_scalar_product(p, st.roots, st.roots)), 1e-9);
}

TEST(Ratio, TradingRootsForInhomogeneities) {
  for (const double d : {0.5, 2.0}) {
    const auto p = shifted_chain(d, 8);
    const auto st = solve_ground_state(p);
    const cplx norm = dense_scalar_product(p, st.roots, st.roots);
    const std::vector<std::vector<int>> removals{{0}, {2}, {1, 3}, {3, 0}, {0, 1, 2}};
    for (const auto& rem : removals) {
      std::vector<cplx> x;
      for (std::size_t j = 0; j < rem.size(); ++j) x.push_back(p.xi[j + 1]);
      std::vector<cplx> mus;
      std::vector<bool> gone(st.roots.size(), false);
      for (int r : rem) gone[static_cast<std::size_t>(r)] = true;
      for (std::size_t a = 0; a < st.roots.size(); ++a) {
        if (!gone[a]) mus.push_back(st.roots[a]);
      }
      for (const auto& v : x) mus.push_back(v);
      const cplx dense = dense_scalar_product(p, mus, st.roots) / norm;
      EXPECT_LT(rel(normalized_ratio_S(p, st.roots, rem, x), dense), 1e-8) << "Delta " << d << " m " << rem.size();
    }
  }
}

TEST(Ratio, EmptyRemovalIsOne) {
  const auto p = shifted_chain(0.5, 4);
  const auto st = solve_ground_state(p);
  EXPECT_EQ(normalized_ratio_S(p, st.roots, std::vector<int>{}, std::vector<cplx>{}), cplx(1.0));
  EXPECT_THROW(normalized_ratio_S(p, st.roots, std::vector<int>{7}, std::vector<cplx>{p.xi[0]}), ConfigError);
}

TEST(ThermoMatrix, DeterminantClosedForms) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto ml = Regime::from_delta(0.3);
  const auto mv = Regime::from_delta(2.4);
  for (int m = 1; m <= 4; ++m) {
    std::vector<cplx> l(m), xi(m), a(m), beta(m);
    for (int k = 0; k < m; ++k) {
      l[k] = cplx(u(rng), 0.1 * u(rng));
      xi[k] = cplx(u(rng), -ml.zeta() / 2 + 0.1 * u(rng));
      a[k] = cplx(u(rng), 0.1 * u(rng));
      beta[k] = cplx(u(rng), -mv.zeta() / 2 + 0.1 * u(rng));
    }
    EXPECT_LT(rel(lu_det(thermo_S_matrix(ml, l, xi)), cauchy_det_massless(l, xi, ml.zeta())), 1e-11);
    // massive: lambda = -i alpha, xi = -i beta
    std::vector<cplx> lm(m), xm(m);
    for (int k = 0; k < m; ++k) {
      lm[k] = -kI * a[k];
      xm[k] = xi_from_beta(mv, beta[k]);
    }
    const cplx expect = std::pow(kI, m) * elliptic_det_massive(a, beta, mv.nome());
    EXPECT_LT(rel(lu_det(thermo_S_matrix(mv, lm, xm)), expect), 1e-10);
  }
}
