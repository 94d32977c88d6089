#pragma once

// Determinant representations of scalar products of Bethe states: the Slavnov
// formula, the Gaudin norm, the normalised ratio of a Bethe state with a state
// in which some roots are traded for inhomogeneities, and its thermodynamic
// density matrix.

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xxz/bethe.hpp"
#include "xxz/errors.hpp"
#include "xxz/model.hpp"
#include "xxz/special_functions.hpp"
#include "xxz/thermo.hpp"

namespace xxz {

namespace detail {

// coth(u) - coth(u + eta) = sinh(eta) / (sinh(u) sinh(u + eta))
inline cplx coth_difference(cplx u, cplx eta) {
  return std::sinh(eta) * checked_inverse_sinh(u) * checked_inverse_sinh(u + eta);
}

inline void require_distinct(std::span<const cplx> a, std::span<const cplx> b) {
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (std::abs(std::sinh(x - y)) < kPoleTolerance) throw PoleError("coincident spectral parameters");
    }
  }
}

}  // namespace detail

struct SlavnovData {
  Eigen::MatrixXcd T;
  Eigen::MatrixXcd V;
  cplx det_T = 0.0;
  cplx det_V = 0.0;
  cplx value = 0.0;
};

/// det[1/sinh(mu_b - lambda_a)] = prod_{a<b} sinh(l_a - l_b) sinh(mu_b - mu_a) / prod_{a,b} sinh(mu_b - l_a).
inline cplx cauchy_det_sinh(std::span<const cplx> lambda, std::span<const cplx> mu) {
  const std::size_t n = lambda.size();
  cplx num = 1.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) num *= std::sinh(lambda[a] - lambda[b]) * std::sinh(mu[b] - mu[a]);
  }
  cplx den = 1.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) den *= std::sinh(mu[b] - lambda[a]);
  }
  if (std::abs(den) < kPoleTolerance) throw PoleError("singular Cauchy matrix");
  return num / den;
}

/// <0| prod C(mu) prod B(lambda) |0> for Bethe roots lambda and arbitrary mu:
/// det T / det V with T_ab = d tau(mu_b, {lambda}) / d lambda_a and V_ab = 1/sinh(mu_b - lambda_a).
inline SlavnovData slavnov_scalar_product(const ModelParams& p, std::span<const cplx> lambda,
                                          std::span<const cplx> mu) {
  const std::size_t n = lambda.size();
  if (mu.size() != n) throw ConfigError("scalar product needs equal numbers of parameters");
  detail::require_distinct(lambda, mu);
  const cplx eta = p.eta();
  SlavnovData out;
  const auto N = static_cast<Eigen::Index>(n);
  out.T.resize(N, N);
  out.V.resize(N, N);
  for (std::size_t b = 0; b < n; ++b) {
    cplx t1 = 1.0;
    cplx t2 = d_fn(mu[b], p);
    for (const auto& l : lambda) {
      t1 /= b_fn(l, mu[b], eta);
      t2 /= b_fn(mu[b], l, eta);
    }
    for (std::size_t a = 0; a < n; ++a) {
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      out.T(ia, ib) = -t1 * detail::coth_difference(lambda[a] - mu[b], eta) +
                      t2 * detail::coth_difference(mu[b] - lambda[a], eta);
      out.V(ia, ib) = checked_inverse_sinh(mu[b] - lambda[a]);
    }
  }
  out.det_T = lu_det(out.T);
  out.det_V = n == 0 ? cplx(1.0) : cauchy_det_sinh(lambda, mu);
  out.value = out.det_T / out.det_V;
  return out;
}

struct GaudinNorm {
  Eigen::MatrixXcd phi_prime;
  cplx prefactor = 1.0;
  cplx value = 1.0;
};

/// <0| prod C(l) prod B(l) |0> = sinh^N(eta) prod_{a != b} sinh(l_a - l_b + eta)/sinh(l_a - l_b) det Phi'.
inline GaudinNorm gaudin_norm(const ModelParams& p, const std::vector<cplx>& roots) {
  GaudinNorm g;
  const cplx eta = p.eta();
  g.prefactor = std::pow(std::sinh(eta), static_cast<int>(roots.size()));
  for (std::size_t a = 0; a < roots.size(); ++a) {
    for (std::size_t b = 0; b < roots.size(); ++b) {
      if (a != b) g.prefactor *= std::sinh(roots[a] - roots[b] + eta) * checked_inverse_sinh(roots[a] - roots[b]);
    }
  }
  g.phi_prime = gaudin_matrix(p, roots);
  g.value = g.prefactor * lu_det(g.phi_prime);
  return g;
}

/// det Psi' / det Phi', where Psi' is the Gaudin matrix with column removed[j]
/// replaced by phi(lambda_a - x_j) = sinh(eta)/(sinh(lambda_a - x_j) sinh(lambda_a - x_j + eta)).
inline cplx gaudin_column_ratio(const ModelParams& p, const std::vector<cplx>& roots, std::span<const int> removed,
                                std::span<const cplx> x) {
  const Eigen::MatrixXcd phi = gaudin_matrix(p, roots);
  Eigen::MatrixXcd psi = phi;
  for (std::size_t j = 0; j < removed.size(); ++j) {
    for (std::size_t a = 0; a < roots.size(); ++a) {
      psi(static_cast<Eigen::Index>(a), removed[j]) = detail::coth_difference(roots[a] - x[j], p.eta());
    }
  }
  // det(Phi'^{-1} Psi') is better conditioned than the quotient of determinants
  return lu_det(phi.partialPivLu().solve(psi));
}

/// Normalised ratio
///   <0| prod_{kept} C(lambda) prod_j C(x_j) prod B(lambda) |0> / <0| prod C(lambda) prod B(lambda) |0>
/// where root removed[j] is traded for x_j. The x_j must be inhomogeneities of
/// the chain (d(x_j) = 0).
inline cplx normalized_ratio_S(const ModelParams& p, const std::vector<cplx>& roots, std::span<const int> removed,
                               std::span<const cplx> x) {
  const std::size_t m = removed.size();
  if (x.size() != m) throw ConfigError("one inhomogeneity per removed root");
  if (m == 0) return 1.0;
  const std::size_t N = roots.size();
  std::vector<bool> is_removed(N, false);
  for (int r : removed) {
    if (r < 0 || static_cast<std::size_t>(r) >= N) throw ConfigError("removed root index out of range");
    is_removed[static_cast<std::size_t>(r)] = true;
  }
  const cplx eta = p.eta();
  cplx v = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    const cplx lr = roots[static_cast<std::size_t>(removed[j])];
    for (std::size_t k = 0; k < j; ++k) {
      const cplx lk = roots[static_cast<std::size_t>(removed[k])];
      v *= std::sinh(lk - lr) * checked_inverse_sinh(x[k] - x[j]);
    }
    for (std::size_t a = 0; a < N; ++a) {
      if (!is_removed[a]) v *= std::sinh(roots[a] - lr) * checked_inverse_sinh(roots[a] - x[j]);
      v *= std::sinh(roots[a] - x[j] + eta) * checked_inverse_sinh(roots[a] - lr + eta);
    }
  }
  return v * gaudin_column_ratio(p, roots, removed, x);
}

/// Thermodynamic density matrix S_ab = rho~(lambda_a - xi_b + eta/2).
inline Eigen::MatrixXcd thermo_S_matrix(const Regime& r, std::span<const cplx> lambda, std::span<const cplx> xi) {
  const auto m = static_cast<Eigen::Index>(lambda.size());
  Eigen::MatrixXcd s(m, m);
  const cplx half = r.eta() / 2.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      s(a, b) = rho_tilde(r, lambda[static_cast<std::size_t>(a)] - xi[static_cast<std::size_t>(b)] + half);
    }
  }
  return s;
}

}  // namespace xxz
