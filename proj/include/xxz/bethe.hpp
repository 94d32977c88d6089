#pragma once

// Ground-state Bethe roots of the finite chain.
//
// Homogeneous chains are solved in the real variable alpha (lambda = alpha in
// the massless regime, lambda = -i alpha in the massive one) from the
// logarithmic equations
//   M p0(alpha_j) + sum_k theta(alpha_j - alpha_k) = 2 pi n_j,  n_j = j - (N+1)/2,
// by damped Newton iteration. Inhomogeneous chains are reached by continuation
// in the inhomogeneities with complex Newton steps on
//   log[ d(lambda_j) prod_{k != j} b(lambda_k, lambda_j) / b(lambda_j, lambda_k) ] = 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "xxz/errors.hpp"
#include "xxz/model.hpp"

namespace xxz {

struct BetheState {
  std::vector<cplx> roots;
  std::vector<double> quantum_numbers;
  /// max_j |d(l_j) prod b(l_k,l_j)/b(l_j,l_k) - 1|
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
  ModelParams params;
};

struct BetheOptions {
  int max_iter = 200;
  double tol = 1e-13;
  int continuation_steps = 10;
};

/// max_j |d(lambda_j) prod_{k != j} b(lambda_k, lambda_j) / b(lambda_j, lambda_k) - 1|.
inline double bethe_residual(const ModelParams& p, const std::vector<cplx>& roots) {
  double r = 0.0;
  for (std::size_t j = 0; j < roots.size(); ++j) {
    cplx v = d_fn(roots[j], p);
    for (std::size_t k = 0; k < roots.size(); ++k) {
      if (k != j) v *= b_fn(roots[k], roots[j], p.eta()) / b_fn(roots[j], roots[k], p.eta());
    }
    r = std::max(r, std::abs(v - 1.0));
  }
  return r;
}

/// Gaudin matrix Phi'_ab = -d/d lambda_b log[ prod_{k != a} b(l_a,l_k)/b(l_k,l_a) / d(l_a) ]:
///   Phi'_aa = sum_i phi(l_a - xi_i) - sum_{k != a} psi(l_a - l_k),  Phi'_ab = psi(l_a - l_b),
/// phi(u) = sinh(eta) / (sinh u sinh(u + eta)), psi(u) = coth(u - eta) - coth(u + eta).
inline Eigen::MatrixXcd gaudin_matrix(const ModelParams& p, const std::vector<cplx>& roots) {
  const auto n = static_cast<Eigen::Index>(roots.size());
  const cplx eta = p.eta();
  auto phi = [&](cplx u) { return std::sinh(eta) * checked_inverse_sinh(u) * checked_inverse_sinh(u + eta); };
  auto psi = [&](cplx u) {
    return std::cosh(u - eta) * checked_inverse_sinh(u - eta) - std::cosh(u + eta) * checked_inverse_sinh(u + eta);
  };
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    cplx diag = 0.0;
    for (const auto& x : p.xi) diag += phi(roots[static_cast<std::size_t>(a)] - x);
    for (Eigen::Index b = 0; b < n; ++b) {
      if (b == a) continue;
      const cplx v = psi(roots[static_cast<std::size_t>(a)] - roots[static_cast<std::size_t>(b)]);
      m(a, b) = v;
      diag -= v;
    }
    m(a, a) = diag;
  }
  return m;
}

namespace detail {

inline std::vector<double> ground_quantum_numbers(int N) {
  std::vector<double> n(static_cast<std::size_t>(N));
  for (int j = 1; j <= N; ++j) n[static_cast<std::size_t>(j - 1)] = j - (N + 1) / 2.0;
  return n;
}

inline cplx root_from_alpha(const Regime& r, double alpha) {
  return r.massless() ? cplx(alpha, 0.0) : cplx(0.0, -alpha);
}

// Real logarithmic Bethe equations for the homogeneous chain.
inline Eigen::VectorXd log_bethe_residual(const Regime& r, int M, const Eigen::VectorXd& a,
                                          const std::vector<double>& n) {
  const Eigen::Index N = a.size();
  Eigen::VectorXd f(N);
  for (Eigen::Index j = 0; j < N; ++j) {
    double s = M * bare_momentum_unwrapped(r, a(j)) - 2 * kPi * n[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < N; ++k) s += scattering_phase_unwrapped(r, a(j) - a(k));
    f(j) = s;
  }
  return f;
}

inline Eigen::MatrixXd log_bethe_jacobian(const Regime& r, int M, const Eigen::VectorXd& a) {
  const Eigen::Index N = a.size();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    double diag = M * p0_prime(r, a(j));
    for (Eigen::Index k = 0; k < N; ++k) {
      if (k == j) continue;
      const double tp = -2 * kPi * kernel_K(r, a(j) - a(k));
      diag += tp;
      J(j, k) = -tp;
    }
    J(j, j) = diag;
  }
  return J;
}

}  // namespace detail

/// Ground state of the homogeneous chain (xi_k = eta/2) with p.N roots.
inline BetheState solve_homogeneous(const ModelParams& p, const BetheOptions& opt = {}) {
  p.validate();
  const Regime& r = p.regime;
  const int N = p.N;
  BetheState st;
  st.params = p;
  st.quantum_numbers = detail::ground_quantum_numbers(N);
  if (N == 0) {
    st.converged = true;
    return st;
  }
  Eigen::VectorXd a(N);
  const double z = r.zeta();
  for (int j = 0; j < N; ++j) {
    const double nj = st.quantum_numbers[static_cast<std::size_t>(j)];
    if (r.massless()) {
      // inverse of the zero-field counting function int_0^alpha rho = n/M
      const double t = std::tan(kPi * nj / p.M);
      a(j) = (2 * z / kPi) * std::atanh(std::clamp(t, -0.999999, 0.999999));
    } else {
      a(j) = kPi * nj / N;
    }
  }
  Eigen::VectorXd f = detail::log_bethe_residual(r, p.M, a, st.quantum_numbers);
  double norm = f.cwiseAbs().maxCoeff();
  int it = 0;
  for (; it < opt.max_iter && norm > opt.tol; ++it) {
    const Eigen::MatrixXd J = detail::log_bethe_jacobian(r, p.M, a);
    const Eigen::VectorXd step = J.partialPivLu().solve(f);
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Eigen::VectorXd trial = a - t * step;
      const Eigen::VectorXd ft = detail::log_bethe_residual(r, p.M, trial, st.quantum_numbers);
      const double nt = ft.cwiseAbs().maxCoeff();
      if (nt < norm || halving == 29) {
        improved = nt < norm;
        a = trial;
        f = ft;
        norm = nt;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
  }
  st.iterations = it;
  st.roots.resize(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) st.roots[static_cast<std::size_t>(j)] = detail::root_from_alpha(r, a(j));
  st.residual = bethe_residual(p, st.roots);
  st.converged = norm < 1e-9 && st.residual < 1e-8;
  return st;
}

/// Complex Newton refinement of roots for the chain p starting from a guess.
inline BetheState refine_roots(const ModelParams& p, std::vector<cplx> roots, const BetheOptions& opt = {}) {
  BetheState st;
  st.params = p;
  const auto N = static_cast<Eigen::Index>(roots.size());
  auto residual_vec = [&](const std::vector<cplx>& l) {
    Eigen::VectorXcd f(N);
    for (Eigen::Index j = 0; j < N; ++j) {
      cplx v = d_fn(l[static_cast<std::size_t>(j)], p);
      for (Eigen::Index k = 0; k < N; ++k) {
        if (k != j) {
          v *= b_fn(l[static_cast<std::size_t>(k)], l[static_cast<std::size_t>(j)], p.eta()) /
               b_fn(l[static_cast<std::size_t>(j)], l[static_cast<std::size_t>(k)], p.eta());
        }
      }
      f(j) = std::log(v);
    }
    return f;
  };
  Eigen::VectorXcd f = residual_vec(roots);
  double norm = f.cwiseAbs().maxCoeff();
  int it = 0;
  for (; it < opt.max_iter && norm > opt.tol; ++it) {
    // d F_j / d lambda_b = Phi'_jb
    const Eigen::MatrixXcd J = gaudin_matrix(p, roots);
    const Eigen::VectorXcd step = J.partialPivLu().solve(f);
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      std::vector<cplx> trial = roots;
      for (Eigen::Index j = 0; j < N; ++j) trial[static_cast<std::size_t>(j)] -= t * step(j);
      const Eigen::VectorXcd ft = residual_vec(trial);
      const double nt = ft.cwiseAbs().maxCoeff();
      if (nt < norm) {
        improved = true;
        roots = trial;
        f = ft;
        norm = nt;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
  }
  st.iterations = it;
  st.roots = std::move(roots);
  st.residual = bethe_residual(p, st.roots);
  st.converged = st.residual < 1e-8;
  return st;
}

/// Ground state of the chain described by p. Inhomogeneous chains are reached
/// from the homogeneous solution by continuation xi(t) = eta/2 + t (xi - eta/2).
inline BetheState solve_ground_state(const ModelParams& p, const BetheOptions& opt = {}) {
  p.validate();
  ModelParams hom = ModelParams::homogeneous_chain(p.regime.delta(), p.M, p.N, p.h);
  BetheState st = solve_homogeneous(hom, opt);
  if (p.homogeneous()) return st;
  std::vector<cplx> roots = st.roots;
  const cplx mid = p.eta() / 2.0;
  BetheState cur = st;
  for (int s = 1; s <= opt.continuation_steps; ++s) {
    const double t = static_cast<double>(s) / opt.continuation_steps;
    ModelParams q = p;
    for (std::size_t k = 0; k < q.xi.size(); ++k) q.xi[k] = mid + t * (p.xi[k] - mid);
    cur = refine_roots(q, roots, opt);
    roots = cur.roots;
  }
  cur.params = p;
  cur.quantum_numbers = st.quantum_numbers;
  return cur;
}

/// Transfer-matrix eigenvalue tau(mu) = prod_j 1/b(l_j, mu) + d(mu) prod_j 1/b(mu, l_j).
inline cplx transfer_eigenvalue(const ModelParams& p, cplx mu, const std::vector<cplx>& roots) {
  cplx t1 = 1.0;
  cplx t2 = d_fn(mu, p);
  for (const auto& l : roots) {
    t1 /= b_fn(l, mu, p.eta());
    t2 /= b_fn(mu, l, p.eta());
  }
  return t1 + t2;
}

}  // namespace xxz
