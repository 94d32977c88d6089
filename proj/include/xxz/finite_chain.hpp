#pragma once

// Exact finite-lattice oracle for the periodic XXZ chain.
//
// Basis index = bitmask of down spins, bit (m-1) for site m; the reference
// state |0> (all spins up) is index 0. Local basis order is (up, down), so
// sigma^- = [[0,0],[1,0]] lowers an up spin. The monodromy matrix is
// T(lambda) = L_M(lambda) ... L_1(lambda) with
//   L_m = [[diag(1, b), c sigma^-_m], [c sigma^+_m, diag(b, 1)]],
// b = b(lambda, xi_m), c = c(lambda, xi_m), and T = [[A, B], [C, D]].

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xxz/errors.hpp"
#include "xxz/model.hpp"

namespace xxz {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using Local = Eigen::Matrix2cd;
using LVec = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, 1>;

/// Largest chain for dense 2^M x 2^M operators.
inline constexpr int kDenseCap = 12;
/// Largest chain for state vectors of length 2^M.
inline constexpr int kVectorCap = 20;

enum class Block { A, B, C, D };

inline void require_size(int M, int cap, const char* what) {
  if (M < 1) throw ConfigError("chain length must be positive");
  if (M > cap) {
    throw SizeError(std::string(what) + ": M = " + std::to_string(M) + " exceeds the cap " +
                    std::to_string(cap));
  }
}

inline std::size_t dim(int M) { return std::size_t{1} << M; }

namespace local {

inline Local identity() { return Local::Identity(); }
inline Local sigma_minus() { return (Local() << 0, 0, 1, 0).finished(); }
inline Local sigma_plus() { return (Local() << 0, 1, 0, 0).finished(); }
inline Local sigma_z() { return (Local() << 1, 0, 0, -1).finished(); }
inline Local sigma_x() { return (Local() << 0, 1, 1, 0).finished(); }
inline Local sigma_y() { return (Local() << 0, cplx(0, -1), cplx(0, 1), 0).finished(); }

/// Elementary matrix E^{e' e} = |e'><e| with 1 = up, 2 = down.
inline Local unit(int eps_prime, int eps) {
  if (eps_prime < 1 || eps_prime > 2 || eps < 1 || eps > 2) throw ConfigError("matrix-unit indices are 1 or 2");
  Local e = Local::Zero();
  e(eps_prime - 1, eps - 1) = 1.0;
  return e;
}

}  // namespace local

/// Dense operator acting on the 2^M-dimensional chain space.
struct SpinOperator {
  int M = 0;
  Mat matrix;
};

/// op acting on site (1-based) of an M-site chain, as a dense matrix.
inline SpinOperator site_operator(int M, int site, const Local& op, int cap = kDenseCap) {
  require_size(M, cap, "site_operator");
  if (site < 1 || site > M) throw ConfigError("site index out of range");
  const std::size_t D = dim(M);
  const std::uint64_t bit = std::uint64_t{1} << (site - 1);
  Mat out = Mat::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
  for (std::uint64_t s = 0; s < D; ++s) {
    const int loc = (s & bit) ? 1 : 0;
    for (int t = 0; t < 2; ++t) {
      const cplx v = op(t, loc);
      if (v == 0.0) continue;
      const std::uint64_t target = (t == loc) ? s : (s ^ bit);
      out(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(s)) += v;
    }
  }
  return {M, out};
}

/// v <- op_site v without forming the matrix.
inline Vec apply_local(const Vec& v, int site, const Local& op) {
  const std::uint64_t bit = std::uint64_t{1} << (site - 1);
  Vec out = Vec::Zero(v.size());
  for (Eigen::Index s = 0; s < v.size(); ++s) {
    const cplx x = v(s);
    if (x == 0.0) continue;
    const auto us = static_cast<std::uint64_t>(s);
    const int loc = (us & bit) ? 1 : 0;
    for (int t = 0; t < 2; ++t) {
      const cplx o = op(t, loc);
      if (o == 0.0) continue;
      out(static_cast<Eigen::Index>(t == loc ? us : (us ^ bit))) += o * x;
    }
  }
  return out;
}

/// |0>: all spins up.
inline Vec reference_state(int M) {
  require_size(M, kVectorCap, "reference_state");
  Vec v = Vec::Zero(static_cast<Eigen::Index>(dim(M)));
  v(0) = 1.0;
  return v;
}

/// (v1, v2) <- T(lambda) (v1, v2) in auxiliary (x) quantum space. With
/// transpose = true the quantum-space transpose T^t is applied instead
/// (sigma^- and sigma^+ exchanged in every L-operator). The weights are
/// evaluated in the scalar type of V.
template <class V>
void apply_monodromy(const ModelParams& p, cplx lambda, V& v1, V& v2, bool transpose = false) {
  using S = typename V::Scalar;
  const auto D = v1.size();
  V n1(D);
  V n2(D);
  const S eta(p.eta());
  for (int m = 1; m <= p.M; ++m) {
    const S u = S(lambda) - S(p.xi[static_cast<std::size_t>(m - 1)]);
    const S den = std::sinh(u + eta);
    if (std::abs(den) < kPoleTolerance) throw PoleError("R-matrix weight at a pole");
    const S b = std::sinh(u) / den;
    const S c = std::sinh(eta) / den;
    const std::uint64_t bit = std::uint64_t{1} << (m - 1);
    for (Eigen::Index s = 0; s < D; ++s) {
      const bool down = static_cast<std::uint64_t>(s) & bit;
      n1(s) = down ? S(b * v1(s)) : v1(s);
      n2(s) = down ? v2(s) : S(b * v2(s));
    }
    for (Eigen::Index s = 0; s < D; ++s) {
      const auto us = static_cast<std::uint64_t>(s);
      const auto flipped = static_cast<Eigen::Index>(us ^ bit);
      if (!(us & bit)) {
        // sigma^- (T_12 side without transpose) maps up -> down
        if (!transpose) {
          n1(flipped) += c * v2(s);  // c sigma^- in L_12
        } else {
          n2(flipped) += c * v1(s);  // c sigma^- in L_21^t
        }
      } else {
        if (!transpose) {
          n2(flipped) += c * v1(s);  // c sigma^+ in L_21
        } else {
          n1(flipped) += c * v2(s);  // c sigma^+ in L_12^t
        }
      }
    }
    v1.swap(n1);
    v2.swap(n2);
  }
}

/// X(lambda) v for a single monodromy entry, matrix free.
template <class V>
V apply_block(const ModelParams& p, cplx lambda, Block blk, const V& v, bool transpose = false) {
  V v1 = V::Zero(v.size());
  V v2 = V::Zero(v.size());
  const bool from_first = (blk == Block::A || blk == Block::C);
  (from_first ? v1 : v2) = v;
  apply_monodromy(p, lambda, v1, v2, transpose);
  return (blk == Block::A || blk == Block::B) ? v1 : v2;
}

struct MonodromyBlocks {
  Mat A;
  Mat B;
  Mat C;
  Mat D;
  const Mat& block(Block b) const {
    switch (b) {
      case Block::A:
        return A;
      case Block::B:
        return B;
      case Block::C:
        return C;
      default:
        return D;
    }
  }
  Mat transfer() const { return A + D; }
};

inline MonodromyBlocks build_monodromy(const ModelParams& p, cplx lambda, int cap = kDenseCap) {
  require_size(p.M, cap, "build_monodromy");
  const auto D = static_cast<Eigen::Index>(dim(p.M));
  MonodromyBlocks t{Mat(D, D), Mat(D, D), Mat(D, D), Mat(D, D)};
  for (Eigen::Index s = 0; s < D; ++s) {
    Vec v1 = Vec::Zero(D);
    Vec v2 = Vec::Zero(D);
    v1(s) = 1.0;
    apply_monodromy(p, lambda, v1, v2);
    t.A.col(s) = v1;
    t.C.col(s) = v2;
    v1.setZero();
    v2.setZero();
    v2(s) = 1.0;
    apply_monodromy(p, lambda, v1, v2);
    t.B.col(s) = v1;
    t.D.col(s) = v2;
  }
  return t;
}

/// prod_j B(lambda_j) |0>.
inline Vec bethe_vector(const ModelParams& p, std::span<const cplx> roots) {
  require_size(p.M, kVectorCap, "bethe_vector");
  Vec v = reference_state(p.M);
  for (const auto& l : roots) v = apply_block(p, l, Block::B, v);
  return v;
}

/// Column representation of the dual state <0| prod_j C(mu_j), so that
/// <0| prod C(mu) |psi> = dual_vector(mu).transpose() * psi.
template <class V = Vec>
V dual_vector(const ModelParams& p, std::span<const cplx> mus) {
  require_size(p.M, kVectorCap, "dual_vector");
  V v = reference_state(p.M).cast<typename V::Scalar>();
  for (const auto& mu : mus) v = apply_block(p, mu, Block::C, v, /*transpose=*/true);
  return v;
}

/// <0| prod C(mu) prod B(lambda) |0> by direct vector algebra.
inline cplx dense_scalar_product(const ModelParams& p, std::span<const cplx> mus, std::span<const cplx> lambdas) {
  if (mus.size() != lambdas.size()) return 0.0;
  return dual_vector(p, mus).transpose() * bethe_vector(p, lambdas);
}

enum class LocalKind { SigmaMinus, SigmaPlus, SigmaZ, E11, E12, E21, E22 };

inline Local literal_local(LocalKind k) {
  switch (k) {
    case LocalKind::SigmaMinus:
      return local::sigma_minus();
    case LocalKind::SigmaPlus:
      return local::sigma_plus();
    case LocalKind::SigmaZ:
      return local::sigma_z();
    case LocalKind::E11:
      return local::unit(1, 1);
    case LocalKind::E12:
      return local::unit(1, 2);
    case LocalKind::E21:
      return local::unit(2, 1);
    default:
      return local::unit(2, 2);
  }
}

/// Monodromy combination reconstructing a local operator: E^{e' e} <-> T_{e e'}.
inline Mat reconstruction_block(const MonodromyBlocks& t, LocalKind k) {
  switch (k) {
    case LocalKind::SigmaMinus:
    case LocalKind::E21:
      return t.B;
    case LocalKind::SigmaPlus:
    case LocalKind::E12:
      return t.C;
    case LocalKind::SigmaZ:
      return t.A - t.D;
    case LocalKind::E11:
      return t.A;
    default:
      return t.D;
  }
}

/// Monodromy matrices at all inhomogeneities with prefix and suffix products
/// of the transfer matrices, for rebuilding local operators:
///   X_i = prod_{a<i} (A+D)(xi_a) X(xi_i) prod_{a>i} (A+D)(xi_a).
class QispTable {
 public:
  explicit QispTable(const ModelParams& p, int cap = kDenseCap) : M_(p.M) {
    require_size(p.M, cap, "QispTable");
    for (int a = 0; a < p.M; ++a) {
      for (int b = a + 1; b < p.M; ++b) {
        if (std::abs(p.xi[static_cast<std::size_t>(a)] - p.xi[static_cast<std::size_t>(b)]) < 1e-10) {
          throw ConfigError("operator reconstruction needs pairwise distinct inhomogeneities");
        }
      }
    }
    const auto D = static_cast<Eigen::Index>(dim(p.M));
    for (int a = 0; a < p.M; ++a) t_.push_back(build_monodromy(p, p.xi[static_cast<std::size_t>(a)], cap));
    prefix_.assign(static_cast<std::size_t>(p.M) + 1, Mat::Identity(D, D));
    suffix_.assign(static_cast<std::size_t>(p.M) + 1, Mat::Identity(D, D));
    for (int a = 0; a < p.M; ++a) {
      prefix_[static_cast<std::size_t>(a) + 1] = prefix_[static_cast<std::size_t>(a)] * t_[static_cast<std::size_t>(a)].transfer();
    }
    for (int a = p.M - 1; a >= 0; --a) {
      suffix_[static_cast<std::size_t>(a)] = t_[static_cast<std::size_t>(a)].transfer() * suffix_[static_cast<std::size_t>(a) + 1];
    }
  }

  /// Operator at site (1-based).
  Mat reconstruct(int site, LocalKind kind) const {
    if (site < 1 || site > M_) throw ConfigError("site index out of range");
    const auto i = static_cast<std::size_t>(site - 1);
    return prefix_[i] * reconstruction_block(t_[i], kind) * suffix_[i + 1];
  }

  /// prod_{a=1}^{M} (A+D)(xi_a).
  const Mat& full_transfer_product() const { return prefix_.back(); }

 private:
  int M_;
  std::vector<MonodromyBlocks> t_;
  std::vector<Mat> prefix_;
  std::vector<Mat> suffix_;
};

/// Local operator at site i rebuilt from the monodromy matrix at the
/// inhomogeneities: prod_{a<i} (A+D)(xi_a) X(xi_i) prod_{a>i} (A+D)(xi_a).
inline SpinOperator qisp_reconstruct(const ModelParams& p, int site, LocalKind kind, int cap = kDenseCap) {
  return {p.M, QispTable(p, cap).reconstruct(site, kind)};
}

// ---------------------------------------------------------------------------
// Exact diagonalisation in fixed-magnetisation sectors

/// Basis states with N down spins.
struct Sector {
  int M = 0;
  int N = 0;
  std::vector<std::uint32_t> states;
  std::vector<std::int32_t> index;  // full basis -> sector position, -1 outside

  Sector(int M_, int N_) : M(M_), N(N_) {
    require_size(M, kVectorCap, "Sector");
    index.assign(dim(M), -1);
    for (std::uint32_t s = 0; s < dim(M); ++s) {
      if (std::popcount(s) == N) {
        index[s] = static_cast<std::int32_t>(states.size());
        states.push_back(s);
      }
    }
  }
  std::size_t size() const { return states.size(); }
};

/// y = H x on a sector, H = sum_m [sx sx + sy sy + Delta (sz sz - 1)] - (h/2) sum sz.
inline void apply_hamiltonian(const Sector& sec, double delta, double h, const Eigen::VectorXd& x,
                              Eigen::VectorXd& y) {
  const int M = sec.M;
  y.setZero(x.size());
  const double field = -0.5 * h * (M - 2 * sec.N);
  for (std::size_t i = 0; i < sec.size(); ++i) {
    const std::uint32_t s = sec.states[i];
    double diag = field;
    for (int m = 0; m < M; ++m) {
      const int n = (m + 1) % M;
      const bool a = (s >> m) & 1u;
      const bool b = (s >> n) & 1u;
      if (a != b) {
        diag -= 2.0 * delta;
        const std::uint32_t t = s ^ (1u << m) ^ (1u << n);
        y(sec.index[t]) += 2.0 * x(static_cast<Eigen::Index>(i));
      }
    }
    y(static_cast<Eigen::Index>(i)) += diag * x(static_cast<Eigen::Index>(i));
  }
}

struct EigenPair {
  double energy = 0.0;
  Eigen::VectorXd vector;  // sector coefficients, unit norm
};

/// Lowest k eigenpairs of a sector: dense below 600 states, otherwise Lanczos
/// with full reorthogonalisation from a fixed pseudo-random start vector.
inline std::vector<EigenPair> sector_lowest(const Sector& sec, double delta, double h, int k = 2) {
  const auto n = static_cast<Eigen::Index>(sec.size());
  k = std::min<int>(k, static_cast<int>(n));
  std::vector<EigenPair> out;
  if (n <= 600) {
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd e(n);
    Eigen::VectorXd y(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      e.setZero();
      e(j) = 1.0;
      apply_hamiltonian(sec, delta, h, e, y);
      H.col(j) = y;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    for (int i = 0; i < k; ++i) out.push_back({es.eigenvalues()(i), es.eigenvectors().col(i)});
    return out;
  }
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int max_iter = static_cast<int>(std::min<Eigen::Index>(n, 400));
  Eigen::MatrixXd Q(n, max_iter + 1);
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = u(rng);
  q.normalize();
  Q.col(0) = q;
  std::vector<double> alpha;
  std::vector<double> beta;
  Eigen::VectorXd w(n);
  std::vector<double> previous(static_cast<std::size_t>(k), 0.0);
  for (int j = 0; j < max_iter; ++j) {
    apply_hamiltonian(sec, delta, h, Q.col(j), w);
    const double a = Q.col(j).dot(w);
    alpha.push_back(a);
    // full reorthogonalisation, applied twice
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd c = Q.leftCols(j + 1).transpose() * w;
      w -= Q.leftCols(j + 1) * c;
    }
    const double b = w.norm();
    const int m = j + 1;
    bool done = b < 1e-13;
    if (m >= k && (m % 5 == 0 || done || m == max_iter)) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      bool converged = true;
      for (int i = 0; i < k; ++i) {
        const double resid = std::abs(b * es.eigenvectors()(m - 1, i));
        if (resid > 1e-10) converged = false;
      }
      if (converged || done || m == max_iter) {
        for (int i = 0; i < k; ++i) {
          Eigen::VectorXd v = Q.leftCols(m) * es.eigenvectors().col(i);
          v.normalize();
          out.push_back({es.eigenvalues()(i), v});
        }
        return out;
      }
    }
    beta.push_back(b);
    Q.col(j + 1) = w / b;
  }
  throw ConvergenceError("Lanczos did not converge");
}

/// Embed sector coefficients into the full 2^M basis.
inline Vec embed(const Sector& sec, const Eigen::VectorXd& v) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(dim(sec.M)));
  for (std::size_t i = 0; i < sec.size(); ++i) out(sec.states[i]) = v(static_cast<Eigen::Index>(i));
  return out;
}

struct GroundState {
  double energy = 0.0;
  Vec vector;
  int N = 0;
  /// Second-lowest state of the same sector (the partner of the massive doublet).
  double second_energy = 0.0;
  Vec second_vector;
  /// Another sector lies within 1e-9 of the ground-state energy.
  bool sector_tie = false;
};

/// Ground state of H_XXZ - (h/2) sum sigma^z. At h = 0 the sector is S^z = 0;
/// in a field the sector N minimising E_N(h) is chosen.
inline GroundState exact_ground_state(double delta, int M, double h = 0.0, int cap = kDenseCap + 4) {
  require_size(M, cap, "exact_ground_state");
  if (!(delta > -1.0)) throw ConfigError("anisotropy Delta <= -1 is out of scope");
  std::vector<int> candidates;
  if (h == 0.0) {
    candidates.push_back(M / 2);
  } else {
    for (int N = 0; N <= M / 2; ++N) candidates.push_back(N);
  }
  GroundState best;
  bool first = true;
  std::vector<double> energies;
  for (int N : candidates) {
    const Sector sec(M, N);
    const auto pairs = sector_lowest(sec, delta, h, 2);
    energies.push_back(pairs[0].energy);
    if (first || pairs[0].energy < best.energy - 1e-12) {
      first = false;
      best.energy = pairs[0].energy;
      best.vector = embed(sec, pairs[0].vector);
      best.N = N;
      if (pairs.size() > 1) {
        best.second_energy = pairs[1].energy;
        best.second_vector = embed(sec, pairs[1].vector);
      }
    }
  }
  int near = 0;
  for (double e : energies) {
    if (std::abs(e - best.energy) < 1e-9) ++near;
  }
  best.sector_tie = near > 1;
  return best;
}

inline GroundState exact_ground_state(const ModelParams& p) {
  return exact_ground_state(p.regime.delta(), p.M, p.h);
}

/// <u| prod_j op_j |v> (bilinear, no conjugation) for operators on sites first, first+1, ...
inline cplx bilinear_string(const Vec& u, const Vec& v, int first_site, std::span<const Local> ops) {
  Vec x = v;
  for (int j = static_cast<int>(ops.size()) - 1; j >= 0; --j) {
    x = apply_local(x, first_site + j, ops[static_cast<std::size_t>(j)]);
  }
  return u.transpose() * x;
}

/// <psi| prod_j op_j |psi> / <psi|psi> for a physical state.
inline cplx expectation_string(const Vec& psi, int first_site, std::span<const Local> ops) {
  return bilinear_string(psi.conjugate(), psi, first_site, ops) / psi.squaredNorm();
}

// ---------------------------------------------------------------------------
// Action of A, B, C, D on dual states <0| prod_{k in S} C(lambda_k)

/// Linear combinations of dual states <0| prod_{k in S} C(lambda_k), keyed by
/// the bitmask of S over a growing list of spectral parameters.
class BraAlgebra {
 public:
  using lcplx = std::complex<long double>;
  using Bra = std::map<std::uint64_t, lcplx>;

  BraAlgebra(const ModelParams& p, std::vector<cplx> params) : p_(p) {
    for (const auto& x : params) add(x);
  }

  int add(cplx value) {
    if (lambda_.size() >= 64) throw SizeError("at most 64 spectral parameters");
    lambda_.push_back(value);
    lcplx d = 1.0L;
    for (const auto& x : p_.xi) d *= std::sinh(lcplx(value) - lcplx(x)) / std::sinh(lcplx(value) - lcplx(x) + lcplx(p_.eta()));
    d_.push_back(d);
    return static_cast<int>(lambda_.size()) - 1;
  }

  cplx param(int i) const { return lambda_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return lambda_.size(); }

  static Bra single(std::uint64_t mask) { return Bra{{mask, 1.0L}}; }

  /// in * X(lambda_nu). With literal_b the B action keeps the factors
  /// 1/sinh(lambda_nu - lambda_a' + eta) and their cancelling partners explicit.
  Bra act(const Bra& in, Block op, int nu, bool literal_b = false) const {
    Bra out;
    const std::uint64_t nbit = std::uint64_t{1} << nu;
    for (const auto& [S, coef] : in) {
      if (S & nbit) throw ConfigError("parameter already present in the dual state");
      const std::uint64_t U = S | nbit;
      switch (op) {
        case Block::C:
          out[U] += coef;
          break;
        case Block::A:
          for_each(U, [&](int ap) { out[U & ~bit(ap)] += coef * a_coefficient(S, U, ap); });
          break;
        case Block::D:
          for_each(U, [&](int a) {
            if (d_[static_cast<std::size_t>(a)] == 0.0L) return;
            out[U & ~bit(a)] += coef * d_coefficient(S, U, a);
          });
          break;
        case Block::B:
          for_each(U, [&](int a) {
            if (d_[static_cast<std::size_t>(a)] == 0.0L) return;
            const lcplx da = d_coefficient(S, U, a);
            for_each(U, [&](int ap) {
              if (ap == a) return;
              const lcplx inner = literal_b ? b_inner_literal(U, nu, a, ap) : b_inner(U, nu, a, ap);
              out[U & ~bit(a) & ~bit(ap)] += coef * da * inner;
            });
          });
          break;
      }
    }
    return out;
  }

  /// Dense column representation of a combination of dual states.
  template <class V = Vec>
  V to_dual_vector(const Bra& bra) const {
    using S = typename V::Scalar;
    V v = V::Zero(static_cast<Eigen::Index>(dim(p_.M)));
    for (const auto& [mask, coef] : bra) {
      std::vector<cplx> mus;
      for_each(mask, [&](int k) { mus.push_back(lambda_[static_cast<std::size_t>(k)]); });
      v += S(coef) * dual_vector<V>(p_, mus);
    }
    return v;
  }

  template <class F>
  static void for_each(std::uint64_t mask, F&& f) {
    while (mask) {
      const int k = std::countr_zero(mask);
      f(k);
      mask &= mask - 1;
    }
  }

  static std::uint64_t bit(int k) { return std::uint64_t{1} << k; }

 private:
  lcplx sh(int i, int j, cplx shift = 0.0) const {
    return std::sinh(lcplx(lambda_[static_cast<std::size_t>(i)]) - lcplx(lambda_[static_cast<std::size_t>(j)]) +
                     lcplx(shift));
  }
  lcplx inv_sh(int i, int j) const {
    const lcplx s = sh(i, j);
    if (std::abs(s) < kPoleTolerance) throw PoleError("coincident spectral parameters in an action formula");
    return 1.0L / s;
  }

  // a(lambda_a') prod_{k in S} sinh(l_k - l_a' + eta) / prod_{k in U, k != a'} sinh(l_k - l_a')
  lcplx a_coefficient(std::uint64_t S, std::uint64_t U, int ap) const {
    lcplx c = 1.0L;
    for_each(S, [&](int k) { c *= sh(k, ap, p_.eta()); });
    for_each(U, [&](int k) {
      if (k != ap) c *= inv_sh(k, ap);
    });
    return c;
  }

  // d(lambda_a) prod_{k in S} sinh(l_a - l_k + eta) / prod_{k in U, k != a} sinh(l_a - l_k)
  lcplx d_coefficient(std::uint64_t S, std::uint64_t U, int a) const {
    lcplx c = d_[static_cast<std::size_t>(a)];
    for_each(S, [&](int k) { c *= sh(a, k, p_.eta()); });
    for_each(U, [&](int k) {
      if (k != a) c *= inv_sh(a, k);
    });
    return c;
  }

  // Second factor of the B action after cancelling sinh(l_nu - l_a' + eta).
  lcplx b_inner(std::uint64_t U, int nu, int a, int ap) const {
    lcplx c = 1.0L;
    for_each(U, [&](int j) {
      if (j != a && j != nu) c *= sh(j, ap, p_.eta());
      if (j != a && j != ap) c *= inv_sh(j, ap);
    });
    if (a == nu) {
      const lcplx s = sh(nu, ap, p_.eta());
      if (std::abs(s) < kPoleTolerance) throw PoleError("pole in the B action");
      c /= s;
    }
    return c;
  }

  lcplx b_inner_literal(std::uint64_t U, int nu, int a, int ap) const {
    const lcplx s = sh(nu, ap, p_.eta());
    if (std::abs(s) < kPoleTolerance) throw PoleError("pole in the B action");
    lcplx c = 1.0L / s;
    for_each(U, [&](int j) {
      if (j != a) c *= sh(j, ap, p_.eta());
      if (j != a && j != ap) c *= inv_sh(j, ap);
    });
    return c;
  }

  ModelParams p_;
  std::vector<cplx> lambda_;
  std::vector<lcplx> d_;
};

struct ActionReport {
  // maximal absolute deviations
  double a = 0.0;
  double d = 0.0;
  double b = 0.0;
  double c = 0.0;
  /// B(xi_k): literal general formula against dense algebra.
  double b_at_xi = 0.0;
  /// B(xi_k): reduced sum against the literal general sum.
  double b_reduced_vs_full = 0.0;
  /// Largest deviation relative to max(1, largest entry of the dense result).
  double relative = 0.0;
  double max() const { return std::max({a, d, b, c, b_at_xi, b_reduced_vs_full}); }
};

/// Compares the action formulas for A, B, C, D on <0| prod_{k<=N} C(lambda_k)
/// with dense algebra, over random parameter sets. Spectral parameters are
/// drawn near the ground-state contour: the real axis (massless) or the
/// imaginary axis (massive).
inline ActionReport verify_action_formulas(const ModelParams& p, int N, int draws, std::uint64_t seed) {
  require_size(p.M, kDenseCap, "verify_action_formulas");
  if (N + 1 > p.M) throw ConfigError("need N + 1 <= M");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double z = p.zeta();
  auto random_param = [&]() {
    // massless lambda = x + i y, massive lambda = -i (x + i y), x spread over the zone
    const double x = 1.5 * u(rng);
    const double y = 0.1 * z * u(rng);
    return p.regime.massless() ? cplx(x, y) : cplx(y, -x);
  };
  ActionReport rep;
  // both sides are formed in long double
  auto record = [&](const LVec& dense, const LVec& formula, double& slot) {
    const auto gap = static_cast<double>((dense - formula).cwiseAbs().maxCoeff());
    slot = std::max(slot, gap);
    rep.relative = std::max(rep.relative, gap / std::max(1.0, static_cast<double>(dense.cwiseAbs().maxCoeff())));
  };
  for (int draw = 0; draw < draws; ++draw) {
    std::vector<cplx> ls;
    for (int k = 0; k < N; ++k) ls.push_back(random_param());
    BraAlgebra alg(p, ls);
    const int nu = alg.add(random_param());
    const std::uint64_t S = (std::uint64_t{1} << N) - 1;
    const auto in = BraAlgebra::single(S);
    const LVec base = dual_vector<LVec>(p, ls);
    auto check = [&](Block blk, double& slot) {
      const LVec lhs = apply_block(p, alg.param(nu), blk, base, /*transpose=*/true);
      record(lhs, alg.to_dual_vector<LVec>(alg.act(in, blk, nu)), slot);
    };
    check(Block::A, rep.a);
    check(Block::D, rep.d);
    check(Block::B, rep.b);
    check(Block::C, rep.c);
    // B at an inhomogeneity, where d vanishes
    const int k = static_cast<int>(draw % p.M);
    const int nx = alg.add(p.xi[static_cast<std::size_t>(k)]);
    const LVec lhs = apply_block(p, alg.param(nx), Block::B, base, /*transpose=*/true);
    const LVec vf = alg.to_dual_vector<LVec>(alg.act(in, Block::B, nx, /*literal_b=*/true));
    record(lhs, vf, rep.b_at_xi);
    record(vf, alg.to_dual_vector<LVec>(alg.act(in, Block::B, nx, /*literal_b=*/false)), rep.b_reduced_vs_full);
  }
  return rep;
}

}  // namespace xxz
