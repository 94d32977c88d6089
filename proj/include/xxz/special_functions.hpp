#pragma once

// Jacobi theta functions with nome q, the q-product constants of the massive
// regime, and closed forms of the determinant of the density matrix
// S_ab = rho(x_a - y_b - i zeta/2) in both regimes.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xxz/errors.hpp"
#include "xxz/model.hpp"

namespace xxz {

/// Truncated Jacobi theta series
///   th1 = 2 sum (-1)^n q^{(n+1/2)^2} sin((2n+1)x)
///   th2 = 2 sum q^{(n+1/2)^2} cos((2n+1)x)
///   th3 = 1 + 2 sum q^{n^2} cos(2nx)
///   th4 = 1 + 2 sum (-1)^n q^{n^2} cos(2nx)
/// Terms are summed until they drop below 1e-17 of the largest one, past the
/// peak of the (growing then decaying) series. |Im x| beyond the band raises
/// ConvergenceError.
class Theta {
 public:
  explicit Theta(double q, double band = -1.0) : q_(q) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("theta nome must lie in (0, 1)");
    zeta_ = -std::log(q);
    band_ = band > 0 ? band : 6.0 * zeta_;
  }

  double q() const { return q_; }
  double band() const { return band_; }

  cplx theta1(cplx x) const { return series(x, true, true); }
  cplx theta2(cplx x) const { return series(x, true, false); }
  cplx theta3(cplx x) const { return series(x, false, false); }
  cplx theta4(cplx x) const { return series(x, false, true); }

 private:
  cplx series(cplx x, bool half, bool alternating) const {
    const double im = std::abs(x.imag());
    if (im > band_) throw ConvergenceError("theta argument outside the convergence band");
    // term magnitude ~ q^{k^2} e^{2k|Im x|} with k = n (+1/2); it peaks near k = |Im x|/zeta
    const double peak = im / zeta_;
    cplx sum = half ? cplx(0.0) : cplx(1.0);
    double largest = 1.0;
    for (int n = half ? 0 : 1; n < 100000; ++n) {
      const double k = half ? n + 0.5 : static_cast<double>(n);
      const double qk = std::exp(-zeta_ * k * k);
      const double sign = (alternating && (n % 2 == 1)) ? -1.0 : 1.0;
      const cplx arg = 2.0 * k * x;
      const cplx trig = (half && alternating) ? std::sin(arg) : std::cos(arg);
      const cplx term = 2.0 * sign * qk * trig;
      sum += term;
      const double mag = qk * std::exp(2.0 * k * im);
      largest = std::max(largest, mag);
      if (k > peak + 1.0 && mag < 1e-17 * largest) return sum;
    }
    throw ConvergenceError("theta series did not converge");
  }

  double q_;
  double zeta_;
  double band_;
};

/// prod_{n>=1} f(q^{2n}) truncated once q^{2n} < 1e-17.
template <class F>
double q_product(double q, F&& f) {
  double p = 1.0;
  for (int n = 1; n < 100000; ++n) {
    const double x = std::pow(q, 2 * n);
    if (x < 1e-17) return p;
    p *= f(x);
  }
  throw ConvergenceError("q-product did not converge");
}

/// prod ((1 - q^{2n}) / (1 + q^{2n}))^2.
inline double theta_c2(double q) {
  return q_product(q, [](double x) {
    const double r = (1.0 - x) / (1.0 + x);
    return r * r;
  });
}

/// th1'(0) = 2 q^{1/4} prod (1 - q^{2n})^3.
inline double theta1_prime0(double q) {
  return 2.0 * std::pow(q, 0.25) * q_product(q, [](double x) { return (1 - x) * (1 - x) * (1 - x); });
}

/// g_m = prod((1-q^{2n})/(1+q^{2n}))^2 [2 q^{1/4} prod(1-q^{2n})^3]^{m-1}.
inline double g_m(int m, double q) { return theta_c2(q) * std::pow(theta1_prime0(q), m - 1); }

/// C_m = (i / 2 pi)^m g_m.
inline cplx C_m(int m, double q) { return std::pow(kI / (2 * kPi), m) * g_m(m, q); }

/// det S for S_ab = rho(lambda_a - xi_b - i zeta/2) with the massless density
/// rho(x) = 1 / (2 zeta cosh(pi x / zeta)):
///   (i/2 zeta)^m prod_{k<l} sinh(pi(xi_k - xi_l)/zeta) prod_{a>b} sinh(pi(lambda_a - lambda_b)/zeta)
///   / prod_{a,k} sinh(pi(lambda_a - xi_k)/zeta).
inline cplx cauchy_det_massless(std::span<const cplx> lambda, std::span<const cplx> xi, double zeta) {
  const std::size_t m = lambda.size();
  if (m == 0 || xi.size() != m) throw ConfigError("cauchy_det_massless needs m >= 1 equal-size sets");
  const double s = kPi / zeta;
  cplx num = std::pow(kI / (2 * zeta), static_cast<int>(m));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = k + 1; l < m; ++l) {
      num *= std::sinh(s * (xi[k] - xi[l])) * std::sinh(s * (lambda[l] - lambda[k]));
    }
  }
  cplx den = 1.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t k = 0; k < m; ++k) den *= std::sinh(s * (lambda[a] - xi[k]));
  }
  if (std::abs(den) < kPoleTolerance) throw PoleError("Cauchy determinant at coincident arguments");
  return num / den;
}

/// det S for S_ab = rho(lambda_a - beta_b - i zeta/2) with the massive density
/// (real variable alpha):
///   C_m prod_{j<k} th1(lambda_j - lambda_k) th1(beta_k - beta_j)
///   / prod_{j,k} th1(lambda_j - beta_k) * th2(sum_j (lambda_j - beta_j)).
inline cplx elliptic_det_massive(std::span<const cplx> lambda, std::span<const cplx> beta, double q) {
  const std::size_t m = lambda.size();
  if (m == 0 || beta.size() != m) throw ConfigError("elliptic_det_massive needs m >= 1 equal-size sets");
  const Theta th(q, -std::log(q) * (static_cast<double>(m) + 3.0));
  cplx num = C_m(static_cast<int>(m), q);
  cplx total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    total += lambda[j] - beta[j];
    for (std::size_t k = j + 1; k < m; ++k) {
      num *= th.theta1(lambda[j] - lambda[k]) * th.theta1(beta[k] - beta[j]);
    }
  }
  num *= th.theta2(total);
  cplx den = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) den *= th.theta1(lambda[j] - beta[k]);
  }
  if (std::abs(den) < kPoleTolerance) throw PoleError("elliptic determinant at coincident arguments");
  return num / den;
}

/// Determinant by LU with partial pivoting.
inline cplx lu_det(const Eigen::MatrixXcd& a) {
  if (a.rows() == 0) return 1.0;
  return a.partialPivLu().determinant();
}

}  // namespace xxz
