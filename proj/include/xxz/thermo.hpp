#pragma once

// Ground-state rapidity densities in the thermodynamic limit: closed forms at
// zero field, the Nystrom solution of the Lieb equation in a field, the Fermi
// boundary, the critical and saturation fields, and the derivative densities
// rho_{h,b}. All functions use the real rapidity variable alpha.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>

#include "xxz/errors.hpp"
#include "xxz/model.hpp"
#include "xxz/quadrature.hpp"
#include "xxz/special_functions.hpp"

namespace xxz {

/// Zero-field density at complex alpha:
///   massless  1 / (2 zeta cosh(pi alpha / zeta))
///   massive   (1/2 pi) prod((1-q^{2n})/(1+q^{2n}))^2 th3(alpha) / th4(alpha)
inline cplx closed_form_density(const Regime& r, cplx alpha) {
  r.require_trigonometric("closed-form density");
  const double z = r.zeta();
  if (r.massless()) {
    const cplx c = std::cosh(kPi * alpha / z);
    if (std::abs(c) < kPoleTolerance) throw PoleError("density evaluated at its pole");
    return 1.0 / (2.0 * z * c);
  }
  const double q = r.nome();
  const Theta th(q);
  const cplx t4 = th.theta4(alpha);
  if (std::abs(t4) < kPoleTolerance) throw PoleError("density evaluated at its pole");
  return theta_c2(q) * th.theta3(alpha) / (2.0 * kPi * t4);
}

inline double closed_form_density(const Regime& r, double alpha) {
  return closed_form_density(r, cplx(alpha)).real();
}

/// Massive density from its Fourier series (1/2 pi)(1 + 2 sum cos(2 n alpha)/cosh(n zeta)),
/// convergent for |Im alpha| < zeta/2.
inline cplx massive_density_series(double zeta, cplx alpha) {
  if (std::abs(alpha.imag()) >= zeta / 2) throw ConvergenceError("Fourier series outside its strip");
  cplx s = 1.0;
  for (int n = 1; n < 100000; ++n) {
    const cplx t = 2.0 * std::cos(2.0 * n * alpha) / std::cosh(n * zeta);
    s += t;
    if (std::abs(t) < 1e-17) return s / (2 * kPi);
  }
  throw ConvergenceError("density series did not converge");
}

/// rho~(lambda): rho(lambda) (massless) or i rho(i lambda) (massive).
inline cplx rho_tilde(const Regime& r, cplx lambda) {
  return r.massless() ? closed_form_density(r, lambda) : kI * closed_form_density(r, kI * lambda);
}

/// Field at which the massive gap closes:
///   h_c = 4 sinh(zeta) sum_{n in Z} (-1)^n / cosh(n zeta)
///       = 4 sinh(zeta) (2 pi / zeta) sum_{k >= 0} 1 / cosh(pi^2 (2k + 1) / (2 zeta)).
/// The second (Poisson-resummed) form is used for zeta < pi, where the first cancels badly.
inline double critical_field(double zeta) {
  if (!(zeta > 0)) throw ConfigError("critical field needs zeta > 0");
  double s = 0.0;
  if (zeta < kPi) {
    for (int k = 0; k < 1000; ++k) {
      const double arg = kPi * kPi * (2 * k + 1) / (2 * zeta);
      if (arg > 700) break;
      const double t = 1.0 / std::cosh(arg);
      s += t;
      if (t < 1e-17 * s) break;
    }
    s *= 2 * kPi / zeta;
  } else {
    s = 1.0;
    for (int n = 1; n < 1000; ++n) {
      const double t = 2.0 * ((n % 2) ? -1.0 : 1.0) / std::cosh(n * zeta);
      s += t;
      if (std::abs(t) < 1e-17) break;
    }
  }
  return 4.0 * std::sinh(zeta) * s;
}

/// Field above which the ground state is fully polarised: 4 (1 + Delta).
inline double saturation_field(const Regime& r) { return 4.0 * (1.0 + r.delta()); }

struct LiebOptions {
  int n_grid = 256;
  /// Number of derivative densities rho_{h,b}, b = 1..m_max, to prepare.
  int m_max = 4;
  /// Zero-field massless truncation: the density is below this at the cutoff.
  double tail = 1e-14;
};

/// Solution of the Lieb-type equations on the support [-Lambda, Lambda]
///   f(alpha) + int K(alpha - mu) f(mu) d mu = g(alpha)
/// for the density, the dressed energy and the derivative densities.
/// Values off the grid (complex alpha included) come from the Nystrom
/// interpolation f(alpha) = g(alpha) - sum_i w_i K(alpha - x_i) f(x_i).
class DensityProfile {
 public:
  Regime regime = Regime::from_delta(0.0);
  double h = 0.0;
  double lambda_F = 0.0;
  /// false when the zero-field ground state is returned (h = 0, or massive h <= h_c).
  bool field_active = false;
  /// true when the support is the whole real line (massless h = 0, truncated).
  bool infinite_support = false;
  QuadRule grid;
  std::vector<double> x;
  std::vector<double> w;
  std::vector<double> rho;
  std::vector<double> eps;
  /// rho_b[b-1][i] = rho_{h,b}(x_i); complex because the source terms are.
  std::vector<std::vector<cplx>> rho_b;

  std::size_t size() const { return x.size(); }

  cplx kernel(cplx a) const { return kernel_K(regime, a); }

  /// Nystrom interpolation of the solution with source g and grid values f.
  template <class G, class V>
  cplx interpolate(G&& g, const V& f, cplx alpha) const {
    cplx acc = g(alpha);
    for (std::size_t i = 0; i < x.size(); ++i) acc -= w[i] * kernel(alpha - x[i]) * f[i];
    return acc;
  }

  cplx rho_at(cplx alpha) const {
    return interpolate([&](cplx a) { return p0_prime(regime, a) / (2 * kPi); }, rho, alpha);
  }

  /// rho_{h,b}(alpha) for b >= 1.
  cplx rho_b_at(int b, cplx alpha) const {
    if (b < 1 || b > static_cast<int>(rho_b.size())) throw ConfigError("derivative density index out of range");
    return interpolate([&](cplx a) { return rho_b_source(regime, b, a); }, rho_b[static_cast<std::size_t>(b - 1)],
                       alpha);
  }

  double eps_at(double alpha) const {
    return interpolate([&](cplx a) { return cplx(bare_energy_eps0(regime, a.real(), h)); }, eps, cplx(alpha))
        .real();
  }

  /// int rho_h over the support (the density of down spins N/M).
  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * rho[i];
    return s;
  }

  /// <sigma^z> = 1 - 2 N/M.
  double magnetization() const { return 1.0 - 2.0 * integral(); }

  /// p0^{(b)}(alpha) / (2 pi (b-1)!).
  static cplx rho_b_source(const Regime& r, int b, cplx alpha) {
    double fact = 1.0;
    for (int k = 2; k < b; ++k) fact *= k;
    return p0_derivative(r, b, alpha) / (2 * kPi * fact);
  }
};

namespace detail {

// Nystrom matrix I + K W on the grid, LU factorised.
inline Eigen::PartialPivLU<Eigen::MatrixXd> lieb_operator(const Regime& r, const std::vector<double>& x,
                                                           const std::vector<double>& w) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = (i == j ? 1.0 : 0.0) +
                w[static_cast<std::size_t>(j)] *
                    kernel_K(r, x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]);
    }
  }
  return a.partialPivLu();
}

inline void fill_grid(DensityProfile& p, const QuadRule& rule) {
  p.grid = rule;
  p.x.resize(rule.size());
  p.w.resize(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    p.x[i] = rule.nodes[i].real();
    p.w[i] = rule.weights[i].real();
  }
}

inline void solve_on_grid(DensityProfile& p, int m_max) {
  const auto lu = lieb_operator(p.regime, p.x, p.w);
  const auto n = static_cast<Eigen::Index>(p.x.size());
  Eigen::VectorXd g(n);
  Eigen::VectorXd e0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = p.x[static_cast<std::size_t>(i)];
    g(i) = p0_prime(p.regime, a) / (2 * kPi);
    e0(i) = bare_energy_eps0(p.regime, a, p.h);
  }
  const Eigen::VectorXd rho = lu.solve(g);
  const Eigen::VectorXd eps = lu.solve(e0);
  p.rho.assign(rho.data(), rho.data() + n);
  p.eps.assign(eps.data(), eps.data() + n);
  p.rho_b.clear();
  const Eigen::MatrixXcd op = lu.reconstructedMatrix().cast<cplx>();
  const auto clu = op.partialPivLu();
  for (int b = 1; b <= m_max; ++b) {
    Eigen::VectorXcd gb(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      gb(i) = DensityProfile::rho_b_source(p.regime, b, cplx(p.x[static_cast<std::size_t>(i)]));
    }
    const Eigen::VectorXcd sol = clu.solve(gb);
    p.rho_b.emplace_back(sol.data(), sol.data() + n);
  }
}

// Dressed energy at the edge of the support [-L, L].
inline double edge_energy(const Regime& r, double h, double L, int n_grid) {
  DensityProfile p;
  p.regime = r;
  p.h = h;
  fill_grid(p, make_rule(GaussSegment{cplx(-L), cplx(L)}, n_grid));
  const auto lu = lieb_operator(r, p.x, p.w);
  Eigen::VectorXd e0(static_cast<Eigen::Index>(p.x.size()));
  for (std::size_t i = 0; i < p.x.size(); ++i) e0(static_cast<Eigen::Index>(i)) = bare_energy_eps0(r, p.x[i], h);
  const Eigen::VectorXd eps = lu.solve(e0);
  p.eps.assign(eps.data(), eps.data() + eps.size());
  return p.eps_at(L);
}

}  // namespace detail

/// Zero-field truncation length of the massless real line.
inline double massless_cutoff(double zeta, double tail) {
  return zeta / kPi * std::log(1.0 / (zeta * tail));
}

/// Zero-field profile: Nystrom on the truncated line (massless) or the
/// periodic zone [-pi/2, pi/2] (massive).
inline DensityProfile zero_field_profile(const Regime& r, const LiebOptions& opt = {}) {
  r.require_trigonometric("the Lieb equation");
  DensityProfile p;
  p.regime = r;
  p.h = 0.0;
  p.field_active = false;
  if (r.massless()) {
    const double L = massless_cutoff(r.zeta(), opt.tail);
    p.lambda_F = L;
    p.infinite_support = true;
    detail::fill_grid(p, make_rule(GaussSegment{cplx(-L), cplx(L)}, opt.n_grid));
  } else {
    p.lambda_F = kPi / 2;
    detail::fill_grid(p, make_rule(PeriodicSegment{-kPi / 2, kPi}, opt.n_grid));
  }
  detail::solve_on_grid(p, opt.m_max);
  return p;
}

/// Fermi boundary Lambda_h: zero of the dressed energy at the support edge.
/// Massive h <= h_c has none (NoFermiBoundary); h >= 4(1 + Delta) gives 0.
inline double fermi_boundary(const Regime& r, double h, int n_grid = 256) {
  r.require_trigonometric("the Fermi boundary");
  if (h < 0) throw ConfigError("magnetic field must be non-negative");
  if (h >= saturation_field(r)) return 0.0;
  if (r.massive() && h <= critical_field(r.zeta())) {
    throw NoFermiBoundary("massive regime below the critical field has no Fermi boundary");
  }
  if (r.massless() && h == 0.0) return std::numeric_limits<double>::infinity();
  auto f = [&](double L) { return detail::edge_energy(r, h, L, n_grid); };
  double lo = 1e-6;
  double hi;
  if (r.massive()) {
    hi = kPi / 2;
  } else {
    hi = 1.0;
    const double cap = massless_cutoff(r.zeta(), 1e-15) * 2;
    while (f(hi) < 0) {
      hi *= 2;
      if (hi > cap) throw ConvergenceError("Fermi boundary bracket failed");
    }
  }
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!(flo < 0 && fhi > 0)) throw ConvergenceError("Fermi boundary is not bracketed");
  std::uintmax_t iters = 200;
  const auto tol = [](double a, double b) { return std::abs(a - b) < 1e-14 * std::max(1.0, std::abs(a)); };
  const auto res = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  if (iters >= 200) throw ConvergenceError("Fermi boundary iteration did not converge");
  return 0.5 * (res.first + res.second);
}

/// Ground-state density in a field. Below the field threshold (h = 0, or
/// massive h <= h_c) the zero-field profile is returned with field_active = false.
inline DensityProfile solve_lieb(const Regime& r, double h, const LiebOptions& opt = {}) {
  r.require_trigonometric("the Lieb equation");
  if (h < 0) throw ConfigError("magnetic field must be non-negative");
  if (h == 0.0 || (r.massive() && h <= critical_field(r.zeta()))) {
    DensityProfile p = zero_field_profile(r, opt);
    return p;
  }
  DensityProfile p;
  p.regime = r;
  p.h = h;
  p.field_active = true;
  p.lambda_F = fermi_boundary(r, h, opt.n_grid);
  if (p.lambda_F == 0.0) {
    // saturated: empty support, the derivative densities reduce to their sources
    p.rho_b.assign(static_cast<std::size_t>(opt.m_max), {});
    return p;
  }
  detail::fill_grid(p, make_rule(GaussSegment{cplx(-p.lambda_F), cplx(p.lambda_F)}, opt.n_grid));
  detail::solve_on_grid(p, opt.m_max);
  return p;
}

/// Radius of a circle around -i zeta/2 that keeps half the distance to every
/// other pole of p0' and of K(alpha - x), x in `centres`, capped at zeta/4.
/// In the massless regime K(alpha - x) has poles at x - i (pi - zeta), which
/// approach -i zeta/2 as zeta -> 2 pi / 3.
inline double pole_circle_radius(const Regime& r, std::span<const double> centres) {
  const double z = r.zeta();
  double d = std::numeric_limits<double>::infinity();
  if (r.massless()) {
    d = kPi - z;
    for (const double x : centres) d = std::min(d, std::hypot(x, kPi - 1.5 * z));
  }
  const double radius = std::min(z / 4, d / 2);
  if (radius < 1e-3) throw PoleError("no pole-free circle around -i zeta/2 at this anisotropy");
  return radius;
}

/// 2 pi i Res_{alpha = -i zeta/2} rho_h from a counter-clockwise circle
/// around the pole, using the Nystrom continuation of the profile.
inline cplx density_residue(const DensityProfile& p, int points = 128) {
  const Regime& r = p.regime;
  const QuadRule c = make_rule(Circle{cplx(0.0, -r.zeta() / 2), pole_circle_radius(r, p.x)}, points);
  return c.integrate([&](cplx a) { return p.rho_at(a); });
}

/// Same residue of the zero-field closed form.
inline cplx closed_form_density_residue(const Regime& r, int points = 128) {
  const QuadRule c = make_rule(Circle{cplx(0.0, -r.zeta() / 2), r.zeta() / 4}, points);
  return c.integrate([&](cplx a) { return closed_form_density(r, a); });
}

inline DensityProfile solve_lieb(const ModelParams& params, const LiebOptions& opt = {}) {
  return solve_lieb(params.regime, params.h, opt);
}

}  // namespace xxz
