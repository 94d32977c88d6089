#pragma once

// Cross-module invariant batteries. Each check records the observed deviation
// and its tolerance; suites are deterministic for a fixed seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xxz/bethe.hpp"
#include "xxz/correlators.hpp"
#include "xxz/errors.hpp"
#include "xxz/finite_chain.hpp"
#include "xxz/model.hpp"
#include "xxz/scalar_products.hpp"
#include "xxz/special_functions.hpp"
#include "xxz/thermo.hpp"

namespace xxz {

struct Check {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct VerifyReport {
  std::vector<Check> checks;

  void add(std::string name, double deviation, double tolerance, std::string note = {}) {
    const bool ok = std::isfinite(deviation) && deviation < tolerance;
    checks.push_back({std::move(name), deviation, tolerance, ok, std::move(note)});
  }

  void fail(std::string name, std::string note) {
    checks.push_back({std::move(name), std::numeric_limits<double>::infinity(), 0.0, false, std::move(note)});
  }

  std::size_t passed() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.pass; }));
  }
  bool ok() const { return passed() == checks.size(); }

  void append(const VerifyReport& other) { checks.insert(checks.end(), other.checks.begin(), other.checks.end()); }
};

namespace detail {

inline double rel_gap(cplx a, cplx b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

/// Upper bound sqrt(|A|_1 |A|_inf) on the spectral norm.
inline double operator_norm_bound(const Mat& a) {
  const double col = a.cwiseAbs().colwise().sum().maxCoeff();
  const double row = a.cwiseAbs().rowwise().sum().maxCoeff();
  return std::sqrt(col * row);
}

/// Runs a check body, turning library exceptions into a failed check.
inline void guarded(VerifyReport& rep, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    rep.fail(name, e.what());
  }
}

}  // namespace detail

/// M pairwise distinct inhomogeneities xi = eta/2 + small offsets, inside the
/// strip. `spread` scales the offset across the strip.
inline std::vector<cplx> random_inhomogeneities(const Regime& r, int M, std::mt19937_64& rng, double spread = 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<cplx> xi;
  while (static_cast<int>(xi.size()) < M) {
    const cplx beta(0.6 * u(rng), -r.zeta() / 2 + spread * r.zeta() * u(rng));
    const cplx x = xi_from_beta(r, beta);
    bool distinct = true;
    for (const auto& y : xi) distinct = distinct && std::abs(x - y) > 0.02;
    if (distinct && in_strip(r, x)) xi.push_back(x);
  }
  return xi;
}

inline ModelParams random_chain(double delta, int M, std::mt19937_64& rng) {
  return ModelParams::inhomogeneous_chain(delta, random_inhomogeneities(Regime::from_delta(delta), M, rng));
}

// ---------------------------------------------------------------------------
// Finite-chain identities

/// Largest operator-norm deviation between reconstructed and literal local
/// operators, over all sites and all seven local kinds.
inline double qisp_identity_gap(const ModelParams& p) {
  const QispTable table(p);
  double worst = 0.0;
  for (int site = 1; site <= p.M; ++site) {
    for (LocalKind k : {LocalKind::SigmaMinus, LocalKind::SigmaPlus, LocalKind::SigmaZ, LocalKind::E11, LocalKind::E12,
                        LocalKind::E21, LocalKind::E22}) {
      const Mat lit = site_operator(p.M, site, literal_local(k)).matrix;
      worst = std::max(worst, detail::operator_norm_bound(table.reconstruct(site, k) - lit));
    }
  }
  return worst;
}

/// |<exact|Bethe>|^2 / (|exact|^2 |Bethe|^2) for the homogeneous ground state.
inline double bethe_overlap(double delta, int M) {
  const auto p = ModelParams::homogeneous_chain(delta, M);
  const auto st = solve_homogeneous(p);
  if (!st.converged) throw ConvergenceError("Bethe equations did not converge");
  const Vec psi = bethe_vector(p, st.roots);
  const auto gs = exact_ground_state(delta, M);
  return std::norm(gs.vector.dot(psi)) / (psi.squaredNorm() * gs.vector.squaredNorm());
}

/// Sup over bins in [-2, 2] of |histogram density - bin average of rho|,
/// relative to the sup of rho, for the homogeneous ground-state roots.
inline double root_histogram_gap(double delta, int M, int bins = 16) {
  const auto p = ModelParams::homogeneous_chain(delta, M);
  const auto st = solve_homogeneous(p);
  if (!st.converged) throw ConvergenceError("Bethe equations did not converge");
  const Regime& r = p.regime;
  const double lo = -2.0;
  const double width = 4.0 / bins;
  std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
  for (const auto& l : st.roots) {
    const double a = r.massless() ? l.real() : -l.imag();
    const int k = static_cast<int>(std::floor((a - lo) / width));
    if (k >= 0 && k < bins) count[static_cast<std::size_t>(k)] += 1.0;
  }
  const auto gl = make_rule(GaussSegment{cplx(0.0), cplx(width)}, 24);
  double sup_rho = 0.0;
  double worst = 0.0;
  for (int k = 0; k < bins; ++k) {
    const double a0 = lo + k * width;
    // roots live in the zone |alpha| < zone_edge
    auto inside = [&](double a) { return std::abs(a) < r.zone_edge() ? closed_form_density(r, a) : 0.0; };
    const double avg = gl.integrate([&](cplx t) { return cplx(inside(a0 + t.real())); }).real() / width;
    sup_rho = std::max(sup_rho, inside(a0 + width / 2));
    worst = std::max(worst, std::abs(count[static_cast<std::size_t>(k)] / (M * width) - avg));
  }
  return worst / sup_rho;
}

inline VerifyReport verify_finite(std::uint64_t seed) {
  VerifyReport rep;
  std::mt19937_64 rng(seed);
  for (const double d : {0.3, 0.7, 2.0}) {
    for (int M : {4, 6, 8}) {
      const auto p = random_chain(d, M, rng);
      const std::string name = "reconstruction Delta=" + std::to_string(d).substr(0, 3) + " M=" + std::to_string(M);
      detail::guarded(rep, name, [&] { rep.add(name, qisp_identity_gap(p), 1e-9); });
    }
  }
  for (const double d : {0.3, 0.7, 2.0}) {
    const auto p = random_chain(d, 6, rng);
    const std::string name = "action formulas Delta=" + std::to_string(d).substr(0, 3);
    detail::guarded(rep, name, [&] {
      double worst = 0.0;
      for (int N = 0; N <= 3; ++N) worst = std::max(worst, verify_action_formulas(p, N, 20, rng()).max());
      rep.add(name, worst, 1e-9);
    });
  }
  for (const double d : {0.3, 2.0}) {
    const std::string name = "Bethe overlap Delta=" + std::to_string(d).substr(0, 3);
    detail::guarded(rep, name, [&] {
      double worst = 0.0;
      for (int M : {4, 6, 8, 10}) worst = std::max(worst, 1.0 - bethe_overlap(d, M));
      rep.add(name, worst, 1e-7);
    });
  }
  for (const double d : {0.5, 2.0}) {
    const auto p = random_chain(d, 6, rng);
    const std::string name = "finite-chain blocks Delta=" + std::to_string(d).substr(0, 3);
    detail::guarded(rep, name, [&] {
      const auto st = solve_ground_state(p);
      if (!st.converged) throw ConvergenceError("Bethe equations did not converge");
      double worst = 0.0;
      for (const char* s : {"22,22", "12,21", "11,22,11", "12,22,21"}) {
        const auto spec = CorrelatorSpec::parse(s);
        const cplx dense = dense_F_m(spec, p, st.roots);
        worst = std::max(worst, std::abs(finite_chain_F_m(spec, p, st.roots) - dense));
        worst = std::max(worst, std::abs(qisp_F_m(spec, p, st.roots) - dense));
      }
      rep.add(name, worst, 1e-9);
    });
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Determinant identities

/// Largest relative gap of Slavnov's formula against the dense scalar product
/// for N = 1..4 on a chain of M sites with random off-shell parameters.
inline double slavnov_gap(const ModelParams& base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double worst = 0.0;
  for (int N = 1; N <= std::min(4, base.M / 2); ++N) {
    auto p = base;
    p.N = N;
    const auto st = solve_ground_state(p);
    if (!st.converged) throw ConvergenceError("Bethe equations did not converge");
    std::vector<cplx> mu;
    for (int k = 0; k < N; ++k) mu.push_back(cplx(u(rng), u(rng)));
    worst = std::max(worst, detail::rel_gap(slavnov_scalar_product(p, st.roots, mu).value,
                                            dense_scalar_product(p, mu, st.roots)));
  }
  return worst;
}

inline double gaudin_gap(const ModelParams& base) {
  double worst = 0.0;
  for (int N = 1; N <= std::min(4, base.M / 2); ++N) {
    auto p = base;
    p.N = N;
    const auto st = solve_ground_state(p);
    if (!st.converged) throw ConvergenceError("Bethe equations did not converge");
    worst = std::max(worst, detail::rel_gap(gaudin_norm(p, st.roots).value, dense_scalar_product(p, st.roots, st.roots)));
  }
  return worst;
}

inline double ratio_gap(const ModelParams& p) {
  const auto st = solve_ground_state(p);
  if (!st.converged) throw ConvergenceError("Bethe equations did not converge");
  const cplx norm = dense_scalar_product(p, st.roots, st.roots);
  double worst = 0.0;
  const std::vector<std::vector<int>> removals{{0}, {2}, {1, 3}, {0, 1, 2}};
  for (const auto& rem : removals) {
    std::vector<cplx> x;
    for (std::size_t j = 0; j < rem.size(); ++j) x.push_back(p.xi[j + 1]);
    std::vector<bool> gone(st.roots.size(), false);
    for (int k : rem) gone[static_cast<std::size_t>(k)] = true;
    std::vector<cplx> mus;
    for (std::size_t a = 0; a < st.roots.size(); ++a) {
      if (!gone[a]) mus.push_back(st.roots[a]);
    }
    mus.insert(mus.end(), x.begin(), x.end());
    worst = std::max(worst, detail::rel_gap(normalized_ratio_S(p, st.roots, rem, x),
                                            dense_scalar_product(p, mus, st.roots) / norm));
  }
  return worst;
}

/// Relative gap of a closed-form determinant of rho(l_a - b_c - i zeta/2)
/// against LU, for m = 1..5 and `draws` random draws per size. Real parts are
/// stratified over [-1.5, 1.5] so that no two rows nearly coincide.
inline double density_det_gap(const Regime& r, int draws, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double z = r.zeta();
  double worst = 0.0;
  for (int m = 1; m <= 5; ++m) {
    const double cell = 3.0 / m;
    auto stratified = [&](int k) { return -1.5 + cell * (k + 0.5 + 0.35 * u(rng)); };
    for (int t = 0; t < draws; ++t) {
      std::vector<cplx> l(static_cast<std::size_t>(m)), b(static_cast<std::size_t>(m));
      for (int k = 0; k < m; ++k) {
        l[static_cast<std::size_t>(k)] = cplx(stratified(k), 0.2 * u(rng));
        b[static_cast<std::size_t>(k)] = cplx(stratified(k), -z / 2 + 0.2 * u(rng));
      }
      std::shuffle(b.begin(), b.end(), rng);
      Eigen::MatrixXcd s(m, m);
      for (int a = 0; a < m; ++a) {
        for (int c = 0; c < m; ++c) {
          s(a, c) = closed_form_density(r, l[static_cast<std::size_t>(a)] - b[static_cast<std::size_t>(c)] - kI * z / 2.0);
        }
      }
      const cplx closed = r.massless() ? cauchy_det_massless(l, b, z) : elliptic_det_massive(l, b, r.nome());
      worst = std::max(worst, detail::rel_gap(closed, lu_det(s)));
    }
  }
  return worst;
}

inline double sinh_cauchy_gap(int draws, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int n = 1; n <= 5; ++n) {
    for (int t = 0; t < draws; ++t) {
      std::vector<cplx> l(static_cast<std::size_t>(n)), m(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        l[static_cast<std::size_t>(k)] = cplx(u(rng), u(rng));
        m[static_cast<std::size_t>(k)] = cplx(u(rng), u(rng));
      }
      Eigen::MatrixXcd v(n, n);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) v(a, b) = 1.0 / std::sinh(m[static_cast<std::size_t>(b)] - l[static_cast<std::size_t>(a)]);
      }
      worst = std::max(worst, detail::rel_gap(cauchy_det_sinh(l, m), lu_det(v)));
    }
  }
  return worst;
}

inline double thermo_matrix_gap(const Regime& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int m = 1; m <= 4; ++m) {
    std::vector<cplx> a(static_cast<std::size_t>(m)), beta(static_cast<std::size_t>(m));
    std::vector<cplx> lam, xi;
    for (int k = 0; k < m; ++k) {
      a[static_cast<std::size_t>(k)] = cplx(u(rng), 0.1 * u(rng));
      beta[static_cast<std::size_t>(k)] = cplx(u(rng), -r.zeta() / 2 + 0.1 * u(rng));
      lam.push_back(r.massless() ? a[static_cast<std::size_t>(k)] : -kI * a[static_cast<std::size_t>(k)]);
      xi.push_back(xi_from_beta(r, beta[static_cast<std::size_t>(k)]));
    }
    const cplx closed = r.massless() ? cauchy_det_massless(a, beta, r.zeta())
                                     : std::pow(kI, m) * elliptic_det_massive(a, beta, r.nome());
    worst = std::max(worst, detail::rel_gap(lu_det(thermo_S_matrix(r, lam, xi)), closed));
  }
  return worst;
}

inline double inhomogeneous_mode_gap(std::mt19937_64& rng) {
  double worst = 0.0;
  for (const double d : {0.5, 2.0}) {
    const auto r = Regime::from_delta(d);
    auto xi = random_inhomogeneities(r, 2, rng, 0.05);
    for (const char* s : {"22,22", "12,21"}) {
      const auto spec = CorrelatorSpec::parse(s);
      worst = std::max(worst, detail::rel_gap(inhomogeneous_F_m(r, spec, xi, DetMode::ClosedForm).value,
                                              inhomogeneous_F_m(r, spec, xi, DetMode::LU).value));
    }
  }
  return worst;
}

inline VerifyReport verify_determinants(std::uint64_t seed) {
  VerifyReport rep;
  std::mt19937_64 rng(seed);
  const auto ml = Regime::from_delta(0.5);
  const auto mv = Regime::from_delta(2.0);
  for (const double d : {0.5, 2.0}) {
    const auto p = random_chain(d, 8, rng);
    const std::string tag = d < 1 ? " massless" : " massive";
    detail::guarded(rep, "Slavnov" + tag, [&] { rep.add("Slavnov" + tag, slavnov_gap(p, rng), 1e-8); });
    detail::guarded(rep, "Gaudin norm" + tag, [&] { rep.add("Gaudin norm" + tag, gaudin_gap(p), 1e-8); });
    detail::guarded(rep, "root trading ratio" + tag, [&] { rep.add("root trading ratio" + tag, ratio_gap(p), 1e-8); });
  }
  detail::guarded(rep, "massless Cauchy determinant", [&] {
    rep.add("massless Cauchy determinant", density_det_gap(ml, 50, rng), 1e-9);
  });
  detail::guarded(rep, "elliptic determinant", [&] { rep.add("elliptic determinant", density_det_gap(mv, 50, rng), 1e-9); });
  detail::guarded(rep, "sinh Cauchy determinant", [&] { rep.add("sinh Cauchy determinant", sinh_cauchy_gap(10, rng), 1e-10); });
  detail::guarded(rep, "density matrix massless", [&] { rep.add("density matrix massless", thermo_matrix_gap(ml, rng), 1e-10); });
  detail::guarded(rep, "density matrix massive", [&] { rep.add("density matrix massive", thermo_matrix_gap(mv, rng), 1e-10); });
  detail::guarded(rep, "inhomogeneous closed form vs LU", [&] {
    rep.add("inhomogeneous closed form vs LU", inhomogeneous_mode_gap(rng), 1e-9);
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Thermodynamic density

inline double lieb_closed_form_gap(double delta) {
  const auto r = Regime::from_delta(delta);
  const auto p = solve_lieb(r, 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p.rho[i] - closed_form_density(r, p.x[i])));
  for (double a = -2.0; a <= 2.0; a += 0.05) worst = std::max(worst, std::abs(p.rho_at(a) - closed_form_density(r, a)));
  return worst;
}

/// Off-grid residual of the Lieb equation for the density at field h.
inline double lieb_residual(double delta, double h) {
  const auto r = Regime::from_delta(delta);
  const auto p = solve_lieb(r, h);
  const double L = p.lambda_F;
  const auto fine = make_rule(GaussSegment{cplx(-L), cplx(L)}, 400);
  double worst = 0.0;
  for (double t = -0.93; t < 1.0; t += 0.31) {
    const double a = t * L * 1.3;
    const cplx conv = fine.integrate([&](cplx mu) { return kernel_K(r, a - mu) * p.rho_at(mu); });
    worst = std::max(worst, std::abs(p.rho_at(a) + conv - p0_prime(r, cplx(a)) / (2 * kPi)));
  }
  return worst;
}

/// Sup-norm gap between the massive field solver below h_c and the zero-field profile.
inline double below_critical_gap(double delta) {
  const auto r = Regime::from_delta(delta);
  const auto zero = zero_field_profile(r);
  double worst = 0.0;
  for (const double f : {0.1, 0.5, 0.99}) {
    const auto p = solve_lieb(r, f * critical_field(r.zeta()));
    if (p.field_active || p.size() != zero.size()) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i) {
      worst = std::max(worst, std::abs(p.rho[i] - zero.rho[i]) + std::abs(p.x[i] - zero.x[i]));
    }
  }
  return worst;
}

inline VerifyReport verify_thermo(std::uint64_t /*seed*/) {
  VerifyReport rep;
  for (const double d : {0.5, 2.0}) {
    const std::string tag = d < 1 ? " massless" : " massive";
    detail::guarded(rep, "zero-field density" + tag, [&] { rep.add("zero-field density" + tag, lieb_closed_form_gap(d), 1e-8); });
    detail::guarded(rep, "density normalisation" + tag, [&] {
      rep.add("density normalisation" + tag, std::abs(solve_lieb(Regime::from_delta(d), 0.0).integral() - 0.5), 1e-10);
    });
    detail::guarded(rep, "density residue" + tag, [&] {
      rep.add("density residue" + tag, std::abs(density_residue(zero_field_profile(Regime::from_delta(d))) + 1.0), 1e-8);
    });
    detail::guarded(rep, "Lieb residual" + tag, [&] { rep.add("Lieb residual" + tag, lieb_residual(d, d < 1 ? 1.0 : 3.0), 1e-9); });
  }
  detail::guarded(rep, "massive field below h_c", [&] { rep.add("massive field below h_c", below_critical_gap(2.0), 1e-300); });
  return rep;
}

inline VerifyReport verify_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "finite") return verify_finite(seed);
  if (suite == "determinants") return verify_determinants(seed);
  if (suite == "thermo") return verify_thermo(seed);
  if (suite == "all") {
    VerifyReport rep = verify_finite(seed);
    rep.append(verify_determinants(seed));
    rep.append(verify_thermo(seed));
    return rep;
  }
  throw ConfigError("unknown verify suite '" + suite + "' (all, finite, determinants, thermo)");
}

}  // namespace xxz
