#pragma once

// Model parameters of the periodic XXZ spin-1/2 chain
//
//   H = sum_m { sx_m sx_{m+1} + sy_m sy_{m+1} + Delta (sz_m sz_{m+1} - 1) - (h/2) sz_m }
//
// and the elementary scalar functions of its algebraic Bethe ansatz:
// R-matrix weights b, c, vacuum eigenvalues a, d, bare momentum, scattering
// phase, Lieb kernel and bare energy.
//
// Parametrisation: Delta = cosh(eta).
//   massless, -1 < Delta < 1 : eta = -i zeta, zeta in (0, pi), lambda real
//   massive,  Delta > 1      : eta = -zeta,   zeta > 0, nome q = exp(-zeta),
//                              rapidities lambda = -i alpha with alpha real
// The real variable alpha of the thermodynamic functions is lambda (massless)
// or i lambda (massive).

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "xxz/errors.hpp"

namespace xxz {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// |sinh(.)| below this in a denominator raises PoleError.
inline constexpr double kPoleTolerance = 1e-12;

class Regime {
 public:
  enum class Kind { Massless, Massive };

  static Regime from_delta(double delta) {
    if (!(delta > -1.0)) {
      throw ConfigError("anisotropy Delta <= -1 is the ferromagnetic regime (out of scope)");
    }
    Regime r;
    r.delta_ = delta;
    if (delta < 1.0) {
      r.kind_ = Kind::Massless;
      r.zeta_ = std::acos(delta);
    } else if (delta > 1.0) {
      r.kind_ = Kind::Massive;
      r.zeta_ = std::acosh(delta);
    } else {
      // Isotropic point: only the rational (rescaled) correlator formulas apply.
      r.kind_ = Kind::Massless;
      r.zeta_ = 0.0;
    }
    return r;
  }

  Kind kind() const { return kind_; }
  bool massless() const { return kind_ == Kind::Massless; }
  bool massive() const { return kind_ == Kind::Massive; }
  bool isotropic() const { return zeta_ == 0.0; }
  double delta() const { return delta_; }
  double zeta() const { return zeta_; }

  cplx eta() const { return massless() ? cplx(0.0, -zeta_) : cplx(-zeta_, 0.0); }

  /// Nome q = exp(-zeta) of the massive theta functions.
  double nome() const {
    if (!massive()) throw ConfigError("nome is defined only in the massive regime");
    return std::exp(-zeta_);
  }

  /// sin(zeta) (massless) or sinh(zeta) (massive).
  double energy_scale() const { return massless() ? std::sin(zeta_) : std::sinh(zeta_); }

  /// Half-width of the ground-state rapidity support: infinity or pi/2.
  double zone_edge() const {
    return massless() ? std::numeric_limits<double>::infinity() : kPi / 2;
  }

  void require_trigonometric(const char* what) const {
    if (isotropic()) {
      throw ConfigError(std::string(what) +
                        " is not available at the isotropic point Delta = 1");
    }
  }

  std::string name() const { return massless() ? "massless" : "massive"; }

 private:
  Kind kind_ = Kind::Massless;
  double delta_ = 0.0;
  double zeta_ = kPi / 2;
};

// ---------------------------------------------------------------------------
// R-matrix weights and vacuum eigenvalues

inline cplx checked_inverse_sinh(cplx x) {
  const cplx s = std::sinh(x);
  if (std::abs(s) < kPoleTolerance) throw PoleError("sinh(.) vanishes in a denominator");
  return 1.0 / s;
}

inline cplx b_fn(cplx lambda, cplx mu, cplx eta) {
  return std::sinh(lambda - mu) * checked_inverse_sinh(lambda - mu + eta);
}

inline cplx c_fn(cplx lambda, cplx mu, cplx eta) {
  return std::sinh(eta) * checked_inverse_sinh(lambda - mu + eta);
}

inline cplx a_fn(cplx /*lambda*/) { return 1.0; }

struct ModelParams {
  Regime regime = Regime::from_delta(0.0);
  double h = 0.0;
  int M = 0;
  int N = 0;
  std::vector<cplx> xi;

  cplx eta() const { return regime.eta(); }
  double zeta() const { return regime.zeta(); }

  bool homogeneous() const {
    for (const auto& x : xi) {
      if (std::abs(x - eta() / 2.0) > 1e-15) return false;
    }
    return true;
  }

  /// Homogeneous chain, xi_k = eta/2. N defaults to M/2.
  static ModelParams homogeneous_chain(double delta, int M, int N = -1, double h = 0.0) {
    ModelParams p;
    p.regime = Regime::from_delta(delta);
    p.h = h;
    p.M = M;
    p.N = N < 0 ? M / 2 : N;
    p.xi.assign(static_cast<std::size_t>(M), p.regime.eta() / 2.0);
    p.validate();
    return p;
  }

  static ModelParams inhomogeneous_chain(double delta, std::vector<cplx> xi, int N = -1) {
    ModelParams p;
    p.regime = Regime::from_delta(delta);
    p.M = static_cast<int>(xi.size());
    p.N = N < 0 ? p.M / 2 : N;
    p.xi = std::move(xi);
    p.validate();
    return p;
  }

  void validate() const {
    regime.require_trigonometric("the finite-chain Bethe ansatz");
    if (M < 1) throw ConfigError("chain length must be positive");
    if (N < 0 || 2 * N > M) throw ConfigError("need 0 <= N <= M/2");
    if (static_cast<int>(xi.size()) != M) throw ConfigError("need one inhomogeneity per site");
    if (h < 0) throw ConfigError("magnetic field must be non-negative");
  }
};

/// beta = xi (massless) or i xi (massive); the strip convention is -zeta < Im beta < 0.
inline cplx beta_from_xi(const Regime& r, cplx xi) { return r.massless() ? xi : kI * xi; }
inline cplx xi_from_beta(const Regime& r, cplx beta) { return r.massless() ? beta : -kI * beta; }

inline bool in_strip(const Regime& r, cplx xi) {
  const double im = beta_from_xi(r, xi).imag();
  return im < 0.0 && im > -r.zeta();
}

/// d(lambda) = prod_i b(lambda, xi_i).
inline cplx d_fn(cplx lambda, const ModelParams& p) {
  cplx d = 1.0;
  for (const auto& x : p.xi) d *= b_fn(lambda, x, p.eta());
  return d;
}

// ---------------------------------------------------------------------------
// Bare momentum, scattering phase, kernel and bare energy

/// Principal-branch p0(lambda) = i ln[sinh(lambda - eta/2) / sinh(lambda + eta/2)].
inline cplx bare_momentum_p0(cplx lambda, cplx eta) {
  return kI * std::log(std::sinh(lambda - eta / 2.0) * checked_inverse_sinh(lambda + eta / 2.0));
}

/// Principal-branch theta(lambda) = i ln[sinh(eta + lambda) / sinh(eta - lambda)].
inline cplx scattering_phase(cplx lambda, cplx eta) {
  return kI * std::log(std::sinh(eta + lambda) * checked_inverse_sinh(eta - lambda));
}

namespace detail {

// atan(c tan a) continued through the poles of tan a; equals a at multiples of pi/2.
inline double unwrapped_atan_tan(double c, double a) {
  const double s = std::sin(a);
  const double co = std::cos(a);
  return a + std::atan((c - 1.0) * s * co / (co * co + c * s * s));
}

}  // namespace detail

/// Continuous real bare momentum in the alpha variable, odd, p0(0) = 0.
inline double bare_momentum_unwrapped(const Regime& r, double alpha) {
  r.require_trigonometric("bare momentum");
  const double z = r.zeta();
  if (r.massless()) return 2.0 * std::atan(std::tanh(alpha) / std::tan(z / 2));
  return 2.0 * detail::unwrapped_atan_tan(1.0 / std::tanh(z / 2), alpha);
}

/// Continuous real scattering phase in the alpha variable, odd, with
/// d/d alpha = -2 pi K(alpha).
inline double scattering_phase_unwrapped(const Regime& r, double alpha) {
  r.require_trigonometric("scattering phase");
  const double z = r.zeta();
  if (r.massless()) return -2.0 * std::atan(std::tanh(alpha) / std::tan(z));
  return -2.0 * detail::unwrapped_atan_tan(1.0 / std::tanh(z), alpha);
}

inline cplx p0_prime(const Regime& r, cplx alpha) {
  r.require_trigonometric("p0'");
  const double z = r.zeta();
  const cplx half = kI * (z / 2);
  if (r.massless()) return std::sin(z) / (std::sinh(alpha + half) * std::sinh(alpha - half));
  return std::sinh(z) / (std::sin(alpha + half) * std::sin(alpha - half));
}

inline double p0_prime(const Regime& r, double alpha) { return p0_prime(r, cplx(alpha)).real(); }

/// Lieb kernel K(alpha) = -theta'(alpha) / (2 pi).
inline cplx kernel_K(const Regime& r, cplx alpha) {
  r.require_trigonometric("Lieb kernel");
  const double z = r.zeta();
  const cplx iz = kI * z;
  if (r.massless()) return std::sin(2 * z) / (2 * kPi * std::sinh(alpha + iz) * std::sinh(alpha - iz));
  return std::sinh(2 * z) / (2 * kPi * std::sin(alpha + iz) * std::sin(alpha - iz));
}

inline double kernel_K(const Regime& r, double alpha) { return kernel_K(r, cplx(alpha)).real(); }

namespace detail {

// n-th derivative of coth (sign = +1, using coth' = 1 - coth^2) or of cot
// (sign = -1, cot' = -(1 + cot^2)), as a polynomial in the function value.
inline cplx cot_like_derivative(int n, cplx f, double sign) {
  std::vector<double> poly{0.0, 1.0};  // P_0(f) = f
  for (int k = 0; k < n; ++k) {
    // P_{k+1} = P_k'(f) * (sign - f^2)
    std::vector<double> dp(poly.size() > 1 ? poly.size() - 1 : 1, 0.0);
    for (std::size_t j = 1; j < poly.size(); ++j) dp[j - 1] = static_cast<double>(j) * poly[j];
    std::vector<double> next(dp.size() + 2, 0.0);
    for (std::size_t j = 0; j < dp.size(); ++j) {
      next[j] += sign * dp[j];
      next[j + 2] -= dp[j];
    }
    poly = std::move(next);
  }
  cplx acc = 0.0;
  for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * f + *it;
  return acc;
}

}  // namespace detail

/// order-th derivative of the bare momentum in the alpha variable (order >= 1);
/// order 1 is p0'. Valid for complex alpha away from -+ i zeta/2.
inline cplx p0_derivative(const Regime& r, int order, cplx alpha) {
  r.require_trigonometric("p0 derivatives");
  if (order < 1) throw ConfigError("p0_derivative needs order >= 1");
  const cplx half = kI * (r.zeta() / 2);
  const int n = order - 1;
  if (r.massless()) {
    const cplx fp = 1.0 / std::tanh(alpha + half);
    const cplx fm = 1.0 / std::tanh(alpha - half);
    return kI * (detail::cot_like_derivative(n, fp, 1.0) - detail::cot_like_derivative(n, fm, 1.0));
  }
  const cplx fp = 1.0 / std::tan(alpha + half);
  const cplx fm = 1.0 / std::tan(alpha - half);
  return kI * (detail::cot_like_derivative(n, fp, -1.0) - detail::cot_like_derivative(n, fm, -1.0));
}

/// eps0(alpha) = h - 2 sin(zeta) p0'(alpha)   (sinh in the massive regime).
inline double bare_energy_eps0(const Regime& r, double alpha, double h) {
  return h - 2.0 * r.energy_scale() * p0_prime(r, alpha);
}

}  // namespace xxz
