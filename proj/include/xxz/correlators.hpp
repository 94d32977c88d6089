#pragma once

// Elementary blocks F_m = <prod_{j=1}^m E_j^{eps'_j eps_j}> of the ground state
// as multiple integrals in the thermodynamic limit (zero field, homogeneous
// and inhomogeneous; finite field through the derivative densities), and the
// same blocks on a finite chain from the operator-action algebra, the
// reconstructed local operators or exact diagonalisation.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <bit>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "xxz/bethe.hpp"
#include "xxz/errors.hpp"
#include "xxz/finite_chain.hpp"
#include "xxz/model.hpp"
#include "xxz/quadrature.hpp"
#include "xxz/scalar_products.hpp"
#include "xxz/special_functions.hpp"
#include "xxz/thermo.hpp"

namespace xxz {

/// Ordered list of pairs (eps_j, eps'_j) selecting E_j^{eps'_j eps_j}.
class CorrelatorSpec {
 public:
  /// mu'_j (primed) or mu_j for site j (1-based).
  struct Variable {
    bool primed;
    int j;
  };

  CorrelatorSpec() = default;

  explicit CorrelatorSpec(std::vector<std::pair<int, int>> pairs) : pairs_(std::move(pairs)) {
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto [e, ep] = pairs_[i];
      if (e < 1 || e > 2 || ep < 1 || ep > 2) throw ConfigError("matrix-unit indices are 1 or 2");
      const int j = static_cast<int>(i) + 1;
      if (e == 1) alpha_plus_.push_back(j);
      if (ep == 2) alpha_minus_.push_back(j);
    }
  }

  /// All pairs (2, 2): the emptiness formation probability.
  static CorrelatorSpec efp(int m) {
    if (m < 0) throw ConfigError("EFP length must be non-negative");
    return CorrelatorSpec(std::vector<std::pair<int, int>>(static_cast<std::size_t>(m), {2, 2}));
  }

  /// Tokens "e'e" separated by commas or spaces, one per site: "22,11" is E^{22} E^{11}.
  static CorrelatorSpec parse(std::string_view text) {
    std::vector<std::pair<int, int>> pairs;
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      if (token.size() != 2 || (token[0] != '1' && token[0] != '2') || (token[1] != '1' && token[1] != '2')) {
        throw ConfigError("bad matrix-unit token '" + token + "' (expected 11, 12, 21 or 22)");
      }
      pairs.emplace_back(token[1] - '0', token[0] - '0');
      token.clear();
    };
    for (char ch : text) {
      if (ch == ',' || ch == ' ' || ch == ';') {
        flush();
      } else {
        token.push_back(ch);
      }
    }
    flush();
    if (pairs.empty()) throw ConfigError("empty correlator descriptor");
    return CorrelatorSpec(std::move(pairs));
  }

  int m() const { return static_cast<int>(pairs_.size()); }
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  const std::vector<int>& alpha_plus() const { return alpha_plus_; }
  const std::vector<int>& alpha_minus() const { return alpha_minus_; }
  int s_prime() const { return static_cast<int>(alpha_plus_.size()); }
  int s() const { return static_cast<int>(alpha_minus_.size()); }
  bool nonzero() const { return s() + s_prime() == m(); }

  /// Integration variables: mu'_j for j in alpha+ descending, then mu_j for j in alpha- ascending.
  std::vector<Variable> variables() const {
    std::vector<Variable> v;
    for (auto it = alpha_plus_.rbegin(); it != alpha_plus_.rend(); ++it) v.push_back({true, *it});
    for (int j : alpha_minus_) v.push_back({false, j});
    return v;
  }

  /// Local operator E^{eps' eps} at site j (1-based).
  LocalKind kind(int j) const {
    const auto [e, ep] = pairs_.at(static_cast<std::size_t>(j - 1));
    if (e == ep) return e == 1 ? LocalKind::E11 : LocalKind::E22;
    return ep == 1 ? LocalKind::E12 : LocalKind::E21;
  }

  /// Monodromy entry T_{eps eps'} paired with E^{eps' eps}.
  Block block(int j) const {
    const auto [e, ep] = pairs_.at(static_cast<std::size_t>(j - 1));
    if (e == 1) return ep == 1 ? Block::A : Block::B;
    return ep == 1 ? Block::C : Block::D;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [e, ep] : pairs_) {
      if (!out.empty()) out += ',';
      out += static_cast<char>('0' + ep);
      out += static_cast<char>('0' + e);
    }
    return out;
  }

 private:
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> alpha_plus_;
  std::vector<int> alpha_minus_;
};

struct CorrelatorOptions {
  /// Accept when the fine and coarse evaluations differ by less than
  /// tolerance * max(|value|, 1e-3).
  double tolerance = 1e-6;
  /// Ratio of the coarse to the fine grid spacing of the error estimate.
  double coarsening = 1.3;
  int dimension_cap = kDefaultDimensionCap;
  bool parallel = true;
  /// Nodes of the circle around the density pole (finite field).
  int circle_points = 64;
  LiebOptions lieb{};
};

struct CorrelatorResult {
  cplx value = 0.0;
  /// |fine - coarse|.
  double error = 0.0;
  /// Integrand evaluations of the fine pass.
  std::size_t nodes = 0;
  std::string method;
  bool converged = true;
};

namespace detail {

enum class Flavor { Hyperbolic, Trigonometric, Rational };

// Elementary functions of the integrands: s = sinh, sin or the identity, and
// the shift c = i zeta (i at the isotropic point).
struct Shapes {
  Flavor flavor = Flavor::Hyperbolic;
  double zeta = 1.0;
  double q = 0.0;
  cplx ic = kI;

  cplx s(cplx x) const {
    switch (flavor) {
      case Flavor::Hyperbolic:
        return std::sinh(x);
      case Flavor::Trigonometric:
        return std::sin(x);
      default:
        return x;
    }
  }
  cplx ds(cplx x) const {
    switch (flavor) {
      case Flavor::Hyperbolic:
        return std::cosh(x);
      case Flavor::Trigonometric:
        return std::cos(x);
      default:
        return 1.0;
    }
  }
};

inline Shapes shapes(const Regime& r) {
  Shapes sh;
  if (r.isotropic()) {
    sh.flavor = Flavor::Rational;
    sh.zeta = 1.0;
  } else if (r.massless()) {
    sh.flavor = Flavor::Hyperbolic;
    sh.zeta = r.zeta();
  } else {
    sh.flavor = Flavor::Trigonometric;
    sh.zeta = r.zeta();
    sh.q = r.nome();
  }
  sh.ic = kI * sh.zeta;
  return sh;
}

inline Theta theta_for(const Shapes& sh, int m) { return Theta(sh.q, sh.zeta * (m + 4.0)); }

// Equally spaced nodes x_i = x0 + i step of one variable.
struct UniformGrid {
  double x0 = 0.0;
  double step = 0.0;
  std::size_t n = 0;
  QuadRule rule;
};

// Trapezoid on the truncated line (massless, isotropic) or the midpoint rule on
// the period (massive). The integrands are analytic in a strip of half-width
// min(c/2, pi - c) around the contours and decay like exp(-pi |x| / c).
inline UniformGrid uniform_grid(const Shapes& sh, double coarsening) {
  UniformGrid g;
  if (sh.flavor == Flavor::Trigonometric) {
    const double base = std::max(32.0, std::ceil(40.0 / sh.zeta));
    g.n = static_cast<std::size_t>(std::ceil(base / coarsening));
    g.step = kPi / static_cast<double>(g.n);
    g.x0 = -kPi / 2 + 0.5 * g.step;
    g.rule = make_rule(PeriodicSegment{-kPi / 2, kPi}, static_cast<int>(g.n));
    return g;
  }
  const double width = sh.flavor == Flavor::Rational ? 0.5 : std::min(sh.zeta / 2, kPi - sh.zeta);
  const double step = 0.176 * width * coarsening;
  const double L = 36.0 * sh.zeta / kPi;
  const auto half = static_cast<std::size_t>(std::ceil(L / step));
  g.n = 2 * half + 1;
  g.step = step;
  g.x0 = -static_cast<double>(half) * step;
  g.rule = make_rule(TruncatedLine{static_cast<double>(half) * step}, static_cast<int>(g.n));
  return g;
}

// Pair factor num(d) / s(d - c) with num = sinh(pi d / zeta), sinh(pi d) or th1(d),
// continued through its removable zeros.
inline cplx pair_factor(const Shapes& sh, const Theta* th, cplx d) {
  const cplx den = sh.s(d - sh.ic);
  const double scale = sh.flavor == Flavor::Rational ? kPi : kPi / sh.zeta;
  if (std::abs(den) >= kPoleTolerance) {
    if (sh.flavor == Flavor::Trigonometric) return th->theta1(d) / den;
    return std::sinh(scale * d) / den;
  }
  if (sh.flavor == Flavor::Trigonometric) {
    // th1(x + i zeta) = -q^{-1} e^{-2ix} th1(x) gives th1'(i zeta) = -th1'(0)/q
    if (std::abs(d - sh.ic) > 1e-9) throw PoleError("pair factor at a pole");
    return -theta1_prime0(sh.q) / sh.q / sh.ds(d - sh.ic);
  }
  if (std::abs(std::sinh(scale * d)) > 1e-9) throw PoleError("pair factor at a pole");
  return scale * std::cosh(scale * d) / sh.ds(d - sh.ic);
}

inline double power_sign(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

// Index-difference table of a pair function for two variables on the same
// uniform grid with extra offsets (in units of the step) and imaginary shifts.
template <class F>
std::vector<cplx> difference_table(const UniformGrid& g, double offset, cplx shift, F&& f) {
  const auto n = static_cast<long>(g.n);
  std::vector<cplx> t(static_cast<std::size_t>(2 * n - 1));
  for (long D = -(n - 1); D <= n - 1; ++D) {
    t[static_cast<std::size_t>(D + n - 1)] = f((static_cast<double>(D) + offset) * g.step + shift);
  }
  return t;
}

inline cplx small_det(int m, const std::array<const cplx*, 4>& rows) {
  switch (m) {
    case 1:
      return rows[0][0];
    case 2:
      return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
    case 3:
      return rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1]) -
             rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0]) +
             rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]);
    default: {
      Eigen::Matrix4cd a;
      for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) a(i, k) = rows[static_cast<std::size_t>(i)][k];
      }
      return a.determinant();
    }
  }
}

inline void require_dimension(int m, int cap) {
  if (m > cap) throw DimensionCap("correlator of length " + std::to_string(m) + " exceeds the dimension cap " +
                                  std::to_string(cap));
  if (m > 4) throw DimensionCap("correlators are limited to m <= 4");
}

// Homogeneous zero-field integral, massless / isotropic:
//   (-1)^s (-pi/zeta)^{m(m+1)/2} int prod d lambda / 2 pi
//     prod_{a>b} sinh(pi(l_a - l_b)/zeta) / sinh(l_a - l_b - i zeta)
//     prod_{alpha-} sinh^{j-1}(mu_j - i zeta/2) sinh^{m-j}(mu_j + i zeta/2) / cosh^m(pi mu_j / zeta)
//     prod_{alpha+} sinh^{j-1}(mu'_j + 3 i zeta/2) sinh^{m-j}(mu'_j + i zeta/2) / cosh^m(pi mu'_j / zeta)
// with mu' on Im = -zeta; massive:
//   c^2 th1'(0)^{m(m+1)/2 - 1} int prod_{alpha+} d lambda / 2 pi i prod_{alpha-} i d lambda / 2 pi
//     th2(sum l + m i zeta/2) prod_{a>b} th1(l_a - l_b) / sin(l_a - l_b - i zeta)
//     prod sin^{j-1}(.) sin^{m-j}(mu + i zeta/2) / th1^m(mu + i zeta/2)
// over one period, mu' on the period shifted by -i zeta.
inline cplx homogeneous_value(const Regime& r, const CorrelatorSpec& spec, double coarsening,
                              const CorrelatorOptions& opt, std::size_t& nodes) {
  const int m = spec.m();
  const auto vars = spec.variables();
  const Shapes sh = shapes(r);
  const bool massive = sh.flavor == Flavor::Trigonometric;
  std::unique_ptr<Theta> th;
  if (massive) th = std::make_unique<Theta>(theta_for(sh, m));
  const UniformGrid g = uniform_grid(sh, coarsening);
  const std::size_t n = g.n;
  auto shift = [&](bool primed) { return primed ? -sh.ic : cplx(0.0); };

  std::array<std::vector<cplx>, 4> pair;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < a; ++b) {
      const int key = 2 * vars[static_cast<std::size_t>(a)].primed + vars[static_cast<std::size_t>(b)].primed;
      if (!pair[static_cast<std::size_t>(key)].empty()) continue;
      pair[static_cast<std::size_t>(key)] =
          difference_table(g, 0.0, shift(vars[static_cast<std::size_t>(a)].primed) -
                                       shift(vars[static_cast<std::size_t>(b)].primed),
                           [&](cplx d) { return pair_factor(sh, th.get(), d); });
    }
  }
  std::vector<std::vector<cplx>> single(static_cast<std::size_t>(m), std::vector<cplx>(n));
  for (int k = 0; k < m; ++k) {
    const auto [primed, j] = vars[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < n; ++i) {
      const cplx l = g.x0 + static_cast<double>(i) * g.step + shift(primed);
      const cplx first = primed ? l + 1.5 * sh.ic : l - 0.5 * sh.ic;
      cplx v = std::pow(sh.s(first), j - 1) * std::pow(sh.s(l + 0.5 * sh.ic), m - j);
      if (massive) {
        v /= std::pow(th->theta1(l + 0.5 * sh.ic), m);
      } else {
        const double scale = sh.flavor == Flavor::Rational ? kPi : kPi / sh.zeta;
        v /= std::pow(std::cosh(scale * l), m);
      }
      single[static_cast<std::size_t>(k)][i] = v;
    }
  }
  std::vector<cplx> th2;
  if (massive) {
    const cplx base = static_cast<double>(m) * g.x0 - static_cast<double>(spec.s_prime()) * sh.ic +
                      static_cast<double>(m) * 0.5 * sh.ic;
    th2.resize(static_cast<std::size_t>(m) * (n - 1) + 1);
    for (std::size_t I = 0; I < th2.size(); ++I) th2[I] = th->theta2(base + static_cast<double>(I) * g.step);
  }

  auto f = [&](std::span<const std::size_t> idx) {
    cplx v = 1.0;
    std::size_t total = 0;
    for (int a = 0; a < m; ++a) {
      const auto ia = idx[static_cast<std::size_t>(a)];
      total += ia;
      v *= single[static_cast<std::size_t>(a)][ia];
      for (int b = 0; b < a; ++b) {
        const int key = 2 * vars[static_cast<std::size_t>(a)].primed + vars[static_cast<std::size_t>(b)].primed;
        v *= pair[static_cast<std::size_t>(key)][ia + n - 1 - idx[static_cast<std::size_t>(b)]];
      }
    }
    if (massive) v *= th2[total];
    return v;
  };
  const std::vector<QuadRule> rules(static_cast<std::size_t>(m), g.rule);
  nodes = static_cast<std::size_t>(std::pow(static_cast<double>(n), m));
  const cplx integral = integrate_nd_indexed(f, rules, opt.parallel, opt.dimension_cap);

  const int tri = m * (m + 1) / 2;
  if (massive) {
    cplx pre = theta_c2(sh.q) * std::pow(theta1_prime0(sh.q), tri - 1);
    pre *= std::pow(1.0 / (2 * kPi * kI), spec.s_prime()) * std::pow(kI / (2 * kPi), spec.s());
    return pre * integral;
  }
  const double scale = sh.flavor == Flavor::Rational ? kPi : kPi / sh.zeta;
  return power_sign(spec.s()) * std::pow(-scale, tri) / std::pow(2 * kPi, m) * integral;
}

template <class F>
CorrelatorResult with_error_estimate(F&& eval, const CorrelatorOptions& opt, std::string method) {
  CorrelatorResult res;
  std::size_t nodes = 0;
  std::size_t coarse_nodes = 0;
  res.value = eval(1.0, nodes);
  const cplx coarse = eval(opt.coarsening, coarse_nodes);
  res.error = std::abs(res.value - coarse);
  res.nodes = nodes;
  res.method = std::move(method);
  res.converged = res.error <= opt.tolerance * std::max(std::abs(res.value), 1e-3);
  return res;
}

}  // namespace detail

/// Homogeneous zero-field F_m (massless, massive, or the isotropic point).
inline CorrelatorResult zero_field_F_m(const Regime& r, const CorrelatorSpec& spec, const CorrelatorOptions& opt = {}) {
  if (spec.m() == 0) return {1.0, 0.0, 1, "trivial", true};
  if (!spec.nonzero()) return {0.0, 0.0, 0, "selection rule", true};
  detail::require_dimension(spec.m(), opt.dimension_cap);
  const std::string method = r.isotropic() ? "zero field, isotropic" : "zero field, " + r.name();
  return detail::with_error_estimate(
      [&](double c, std::size_t& nodes) { return detail::homogeneous_value(r, spec, c, opt, nodes); }, opt, method);
}

enum class DetMode { ClosedForm, LU };

namespace detail {

// Inhomogeneous zero-field integral in the native variables (beta = xi massless,
// beta = i xi massive), mu' on the line (period) shifted by -i zeta:
//   1/prod_{k<l} s(b_k - b_l) int prod d lambda (-1)^{s'} / prod_{a>b} s(l_a - l_b - i zeta)
//     prod_{alpha-} prod_{k<j} s(mu_j - b_k - i zeta) prod_{k>j} s(mu_j - b_k)
//     prod_{alpha+} prod_{k<j} s(mu'_j - b_k + i zeta) prod_{k>j} s(mu'_j - b_k)
//     det rho(l_a - b_k - i zeta/2).
inline cplx inhomogeneous_value(const Regime& r, const CorrelatorSpec& spec, std::span<const cplx> beta, DetMode mode,
                                double coarsening, const CorrelatorOptions& opt, std::size_t& nodes) {
  const int m = spec.m();
  const auto vars = spec.variables();
  const Shapes sh = shapes(r);
  const bool massive = sh.flavor == Flavor::Trigonometric;
  std::unique_ptr<Theta> th;
  if (massive) th = std::make_unique<Theta>(theta_for(sh, m));
  const UniformGrid g = uniform_grid(sh, coarsening);
  const std::size_t n = g.n;
  const bool mixed = spec.s() > 0 && spec.s_prime() > 0;
  // the LU integrand keeps the pair poles; move the mu' nodes off the mu nodes
  const double primed_offset = (mode == DetMode::LU && mixed) ? 0.5 : 0.0;
  auto shift = [&](bool primed) { return primed ? -sh.ic : cplx(0.0); };
  auto offset = [&](bool primed) { return primed ? primed_offset : 0.0; };
  auto node = [&](int k, std::size_t i) {
    const bool primed = vars[static_cast<std::size_t>(k)].primed;
    return cplx(g.x0 + (static_cast<double>(i) + offset(primed)) * g.step) + shift(primed);
  };

  std::array<std::vector<cplx>, 4> pair;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < a; ++b) {
      const bool pa = vars[static_cast<std::size_t>(a)].primed;
      const bool pb = vars[static_cast<std::size_t>(b)].primed;
      const int key = 2 * pa + pb;
      if (!pair[static_cast<std::size_t>(key)].empty()) continue;
      pair[static_cast<std::size_t>(key)] =
          difference_table(g, offset(pa) - offset(pb), shift(pa) - shift(pb), [&](cplx d) {
            if (mode == DetMode::ClosedForm) return pair_factor(sh, th.get(), d);
            const cplx den = sh.s(d - sh.ic);
            if (std::abs(den) < kPoleTolerance) throw PoleError("pair factor at a pole");
            return 1.0 / den;
          });
    }
  }
  // singles, and per node either the closed-form remainder or the row rho(l - b_k - i zeta/2)
  std::vector<std::vector<cplx>> single(static_cast<std::size_t>(m), std::vector<cplx>(n));
  std::vector<std::vector<std::array<cplx, 4>>> rows(static_cast<std::size_t>(m),
                                                     std::vector<std::array<cplx, 4>>(n));
  const double scale = kPi / sh.zeta;
  for (int k = 0; k < m; ++k) {
    const auto [primed, j] = vars[static_cast<std::size_t>(k)];
    const cplx c = primed ? sh.ic : -sh.ic;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx l = node(k, i);
      cplx v = 1.0;
      for (int kk = 1; kk <= m; ++kk) {
        if (kk < j) v *= sh.s(l - beta[static_cast<std::size_t>(kk - 1)] + c);
        if (kk > j) v *= sh.s(l - beta[static_cast<std::size_t>(kk - 1)]);
      }
      if (mode == DetMode::ClosedForm) {
        cplx den = 1.0;
        for (int kk = 0; kk < m; ++kk) {
          const cplx u = l - beta[static_cast<std::size_t>(kk)];
          den *= massive ? th->theta1(u) : std::sinh(scale * u);
        }
        v /= den;
      } else {
        for (int kk = 0; kk < m; ++kk) {
          const cplx u = l - beta[static_cast<std::size_t>(kk)] - 0.5 * sh.ic;
          rows[static_cast<std::size_t>(k)][i][static_cast<std::size_t>(kk)] = closed_form_density(r, u);
        }
      }
      single[static_cast<std::size_t>(k)][i] = v;
    }
  }
  cplx beta_sum = 0.0;
  for (const auto& b : beta) beta_sum += b;
  std::vector<cplx> th2;
  if (massive && mode == DetMode::ClosedForm) {
    double off_sum = 0.0;
    for (const auto& v : vars) off_sum += offset(v.primed);
    const cplx base = static_cast<double>(m) * g.x0 + off_sum * g.step -
                      static_cast<double>(spec.s_prime()) * sh.ic - beta_sum;
    th2.resize(static_cast<std::size_t>(m) * (n - 1) + 1);
    for (std::size_t I = 0; I < th2.size(); ++I) th2[I] = th->theta2(base + static_cast<double>(I) * g.step);
  }

  auto f = [&](std::span<const std::size_t> idx) {
    cplx v = 1.0;
    std::size_t total = 0;
    std::array<const cplx*, 4> rp{};
    for (int a = 0; a < m; ++a) {
      const auto ia = idx[static_cast<std::size_t>(a)];
      total += ia;
      v *= single[static_cast<std::size_t>(a)][ia];
      rp[static_cast<std::size_t>(a)] = rows[static_cast<std::size_t>(a)][ia].data();
      for (int b = 0; b < a; ++b) {
        const int key = 2 * vars[static_cast<std::size_t>(a)].primed + vars[static_cast<std::size_t>(b)].primed;
        v *= pair[static_cast<std::size_t>(key)][ia + n - 1 - idx[static_cast<std::size_t>(b)]];
      }
    }
    if (mode == DetMode::LU) return v * small_det(m, rp);
    if (massive) v *= th2[total];
    return v;
  };
  const std::vector<QuadRule> rules(static_cast<std::size_t>(m), g.rule);
  nodes = static_cast<std::size_t>(std::pow(static_cast<double>(n), m));
  const cplx integral = integrate_nd_indexed(f, rules, opt.parallel, opt.dimension_cap);

  cplx pre = power_sign(spec.s_prime());
  for (int k = 0; k < m; ++k) {
    for (int l = k + 1; l < m; ++l) {
      const cplx den = sh.s(beta[static_cast<std::size_t>(k)] - beta[static_cast<std::size_t>(l)]);
      if (std::abs(den) < kPoleTolerance) throw PoleError("coincident inhomogeneities");
      pre /= den;
    }
  }
  if (mode == DetMode::ClosedForm) {
    // det = C prod_{a>b} num(l_a - l_b) x (remainder accounted for above)
    if (massive) {
      cplx c = C_m(m, sh.q) * power_sign(m * (m - 1) / 2);
      for (int k = 0; k < m; ++k) {
        for (int l = k + 1; l < m; ++l) {
          c *= th->theta1(beta[static_cast<std::size_t>(l)] - beta[static_cast<std::size_t>(k)]);
        }
      }
      pre *= c;
    } else {
      cplx c = std::pow(kI / (2 * sh.zeta), m);
      for (int k = 0; k < m; ++k) {
        for (int l = k + 1; l < m; ++l) {
          c *= std::sinh(scale * (beta[static_cast<std::size_t>(k)] - beta[static_cast<std::size_t>(l)]));
        }
      }
      pre *= c;
    }
  }
  return pre * integral;
}

}  // namespace detail

/// Zero-field F_m of the inhomogeneous chain; xi holds the first m
/// inhomogeneities (pairwise distinct, inside the strip).
inline CorrelatorResult inhomogeneous_F_m(const Regime& r, const CorrelatorSpec& spec, std::span<const cplx> xi,
                                          DetMode mode = DetMode::ClosedForm, const CorrelatorOptions& opt = {}) {
  r.require_trigonometric("the inhomogeneous correlator");
  if (spec.m() == 0) return {1.0, 0.0, 1, "trivial", true};
  if (static_cast<int>(xi.size()) < spec.m()) throw ConfigError("need one inhomogeneity per site");
  if (!spec.nonzero()) return {0.0, 0.0, 0, "selection rule", true};
  detail::require_dimension(spec.m(), opt.dimension_cap);
  std::vector<cplx> beta;
  for (int k = 0; k < spec.m(); ++k) {
    const cplx x = xi[static_cast<std::size_t>(k)];
    if (!in_strip(r, x)) throw ConfigError("inhomogeneity outside the strip");
    beta.push_back(beta_from_xi(r, x));
  }
  const std::string method = std::string("zero field, inhomogeneous, ") + (mode == DetMode::LU ? "LU" : "closed form");
  return detail::with_error_estimate(
      [&](double c, std::size_t& nodes) { return detail::inhomogeneous_value(r, spec, beta, mode, c, opt, nodes); },
      opt, method);
}

/// One-site block from the contour Gamma = real line (period) plus a
/// counter-clockwise circle around the density pole, for the homogeneous chain:
///   F_1 = (-1)^{s'} int_{Gamma or R} rho(lambda) d lambda.
inline CorrelatorResult gamma_reference_F1(const Regime& r, const CorrelatorSpec& spec,
                                           const CorrelatorOptions& opt = {}) {
  r.require_trigonometric("the contour reference");
  if (spec.m() != 1) throw ConfigError("the contour reference covers one site");
  if (!spec.nonzero()) return {0.0, 0.0, 0, "selection rule", true};
  const bool primed = spec.s_prime() == 1;
  auto eval = [&](double c, std::size_t& nodes) {
    const detail::UniformGrid g = detail::uniform_grid(detail::shapes(r), c);
    auto rho = [&](cplx l) { return closed_form_density(r, l); };
    cplx v = g.rule.integrate(rho);
    nodes = g.n;
    if (primed) {
      const auto pts = static_cast<int>(std::ceil(opt.circle_points / c));
      v += make_rule(Circle{cplx(0.0, -r.zeta() / 2), r.zeta() / 4}, pts).integrate(rho);
      nodes += static_cast<std::size_t>(pts);
      v = -v;
    }
    return v;
  };
  return detail::with_error_estimate(eval, opt, "contour reference");
}

namespace detail {

// Finite-field integral over the derivative densities S_ab = rho_{h,b}(lambda_a):
//   int prod d lambda (-1)^{s'} / prod_{a>b} s(l_a - l_b - i zeta)
//     prod_{alpha-} s^{j-1}(mu_j - i zeta/2) s^{m-j}(mu_j + i zeta/2)
//     prod_{alpha+} s^{j-1}(mu'_j + 3 i zeta/2) s^{m-j}(mu'_j + i zeta/2) det S
// with mu on the support and mu' on the support plus a circle around -i zeta/2.
inline cplx field_value(const DensityProfile& prof, const CorrelatorSpec& spec, int circle_points,
                        const CorrelatorOptions& opt, std::size_t& nodes) {
  const int m = spec.m();
  if (static_cast<int>(prof.rho_b.size()) < m) throw ConfigError("profile lacks derivative densities for this m");
  const auto vars = spec.variables();
  const Shapes sh = shapes(prof.regime);
  const std::size_t ng = prof.size();
  // nodes and S rows of the two contours
  struct Contour {
    std::vector<cplx> z;
    std::vector<std::array<cplx, 4>> row;
    QuadRule rule;
  };
  Contour plain;
  plain.rule = prof.grid;
  for (std::size_t i = 0; i < ng; ++i) {
    plain.z.emplace_back(prof.x[i]);
    std::array<cplx, 4> row{};
    for (int b = 1; b <= m; ++b) row[static_cast<std::size_t>(b - 1)] = prof.rho_b[static_cast<std::size_t>(b - 1)][i];
    plain.row.push_back(row);
  }
  Contour primed = plain;
  if (spec.s_prime() > 0) {
    // the pair factors of circle and support variables have poles on the line
    // Im mu' = -(pi - zeta) above the support, so the circle keeps clear of x = 0
    if (prof.regime.massless() && prof.regime.zeta() >= 2 * kPi / 3 - 1e-12) {
      // the pole line then separates the support from -i zeta/2
      throw ConfigError("finite-field correlators with primed variables need Delta > -1/2");
    }
    const std::array<double, 1> line{0.0};
    const QuadRule circle =
        make_rule(Circle{cplx(0.0, -sh.zeta / 2), pole_circle_radius(prof.regime, line)}, circle_points);
    const std::array<QuadRule, 2> parts{prof.grid, circle};
    primed.rule = concat(parts);
    for (const auto& c : circle.nodes) {
      primed.z.push_back(c);
      std::array<cplx, 4> row{};
      for (int b = 1; b <= m; ++b) row[static_cast<std::size_t>(b - 1)] = prof.rho_b_at(b, c);
      primed.row.push_back(row);
    }
  }
  auto contour = [&](bool p) -> const Contour& { return p ? primed : plain; };

  std::array<std::vector<cplx>, 4> pair;
  std::array<std::size_t, 4> pair_cols{};
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < a; ++b) {
      const bool pa = vars[static_cast<std::size_t>(a)].primed;
      const bool pb = vars[static_cast<std::size_t>(b)].primed;
      const auto key = static_cast<std::size_t>(2 * pa + pb);
      if (!pair[key].empty()) continue;
      const Contour& ca = contour(pa);
      const Contour& cb = contour(pb);
      pair_cols[key] = cb.z.size();
      pair[key].resize(ca.z.size() * cb.z.size());
      for (std::size_t i = 0; i < ca.z.size(); ++i) {
        for (std::size_t k = 0; k < cb.z.size(); ++k) {
          const cplx den = sh.s(ca.z[i] - cb.z[k] - sh.ic);
          if (std::abs(den) < kPoleTolerance) throw PoleError("pair factor at a pole of the field integrand");
          pair[key][i * cb.z.size() + k] = 1.0 / den;
        }
      }
    }
  }
  std::vector<std::vector<cplx>> single(static_cast<std::size_t>(m));
  std::vector<QuadRule> rules;
  for (int k = 0; k < m; ++k) {
    const auto [p, j] = vars[static_cast<std::size_t>(k)];
    const Contour& c = contour(p);
    rules.push_back(c.rule);
    for (const auto& l : c.z) {
      const cplx first = p ? l + 1.5 * sh.ic : l - 0.5 * sh.ic;
      single[static_cast<std::size_t>(k)].push_back(std::pow(sh.s(first), j - 1) *
                                                     std::pow(sh.s(l + 0.5 * sh.ic), m - j));
    }
  }

  auto f = [&](std::span<const std::size_t> idx) {
    cplx v = 1.0;
    std::array<const cplx*, 4> rp{};
    for (int a = 0; a < m; ++a) {
      const auto ia = idx[static_cast<std::size_t>(a)];
      const bool pa = vars[static_cast<std::size_t>(a)].primed;
      v *= single[static_cast<std::size_t>(a)][ia];
      rp[static_cast<std::size_t>(a)] = contour(pa).row[ia].data();
      for (int b = 0; b < a; ++b) {
        const auto key = static_cast<std::size_t>(2 * pa + vars[static_cast<std::size_t>(b)].primed);
        v *= pair[key][ia * pair_cols[key] + idx[static_cast<std::size_t>(b)]];
      }
    }
    return v * small_det(m, rp);
  };
  nodes = 1;
  for (const auto& r : rules) nodes *= r.size();
  return power_sign(spec.s_prime()) * integrate_nd_indexed(f, rules, opt.parallel, opt.dimension_cap);
}

}  // namespace detail

/// F_m from a given density profile (finite or zero field), without error estimate.
inline cplx field_F_m(const DensityProfile& prof, const CorrelatorSpec& spec, const CorrelatorOptions& opt = {}) {
  if (spec.m() == 0) return 1.0;
  if (!spec.nonzero()) return 0.0;
  detail::require_dimension(spec.m(), opt.dimension_cap);
  std::size_t nodes = 0;
  return detail::field_value(prof, spec, opt.circle_points, opt, nodes);
}

/// Finite-field F_m (massless h > 0 or massive h > h_c). The error estimate
/// repeats the evaluation with a coarser Lieb grid and circle.
inline CorrelatorResult field_F_m(const Regime& r, double h, const CorrelatorSpec& spec,
                                  const CorrelatorOptions& opt = {}) {
  r.require_trigonometric("the finite-field correlator");
  if (spec.m() == 0) return {1.0, 0.0, 1, "trivial", true};
  if (!spec.nonzero()) return {0.0, 0.0, 0, "selection rule", true};
  detail::require_dimension(spec.m(), opt.dimension_cap);
  auto eval = [&](double c, std::size_t& nodes) {
    LiebOptions lo = opt.lieb;
    lo.n_grid = static_cast<int>(std::ceil(lo.n_grid / c));
    lo.m_max = std::max(lo.m_max, spec.m());
    const DensityProfile prof = solve_lieb(r, h, lo);
    const int pts = static_cast<int>(std::ceil(opt.circle_points / c));
    return detail::field_value(prof, spec, pts, opt, nodes);
  };
  return detail::with_error_estimate(eval, opt, "finite field, " + r.name());
}

/// Ground-state F_m at field h: the zero-field integrals for h = 0 (and for
/// massive h <= h_c, where the ground state does not change), else the
/// finite-field integrals.
inline CorrelatorResult correlator(const Regime& r, double h, const CorrelatorSpec& spec,
                                   const CorrelatorOptions& opt = {}) {
  if (!(h >= 0)) throw ConfigError("magnetic field must be non-negative");
  if (r.isotropic() && h > 0) throw ConfigError("finite-field correlators are not available at Delta = 1");
  if (h == 0.0 || (r.massive() && h <= critical_field(r.zeta()))) {
    CorrelatorResult res = zero_field_F_m(r, spec, opt);
    if (h > 0) res.method += " (h <= h_c)";
    return res;
  }
  return field_F_m(r, h, spec, opt);
}

/// Emptiness formation probability tau(m).
inline CorrelatorResult efp(const Regime& r, double h, int m, const CorrelatorOptions& opt = {}) {
  CorrelatorResult res = correlator(r, h, CorrelatorSpec::efp(m), opt);
  res.value = res.value.real();
  return res;
}

enum class SpinKind { Z, ZZ, PM };

/// Blocks (weight, spec) whose sum is the spin correlator:
///   Z   <sigma^z_1>                         (distance ignored)
///   ZZ  <sigma^z_1 sigma^z_{1+d}>
///   PM  <sigma^+_1 sigma^-_{1+d}>
inline std::vector<std::pair<double, CorrelatorSpec>> spin_blocks(SpinKind kind, int distance) {
  std::vector<std::pair<double, CorrelatorSpec>> out;
  if (kind == SpinKind::Z) {
    out.emplace_back(1.0, CorrelatorSpec({{1, 1}}));
    out.emplace_back(-1.0, CorrelatorSpec({{2, 2}}));
    return out;
  }
  if (distance < 1) throw ConfigError("two-point correlators need distance >= 1");
  const int m = distance + 1;
  const int middle = m - 2;
  for (int mask = 0; mask < (1 << middle); ++mask) {
    std::vector<std::pair<int, int>> inner;
    for (int k = 0; k < middle; ++k) {
      const int e = (mask >> k) & 1 ? 2 : 1;
      inner.emplace_back(e, e);
    }
    if (kind == SpinKind::PM) {
      std::vector<std::pair<int, int>> p{{2, 1}};
      p.insert(p.end(), inner.begin(), inner.end());
      p.emplace_back(1, 2);
      out.emplace_back(1.0, CorrelatorSpec(std::move(p)));
      continue;
    }
    for (int e1 : {1, 2}) {
      for (int em : {1, 2}) {
        std::vector<std::pair<int, int>> p{{e1, e1}};
        p.insert(p.end(), inner.begin(), inner.end());
        p.emplace_back(em, em);
        out.emplace_back((e1 == 1 ? 1.0 : -1.0) * (em == 1 ? 1.0 : -1.0), CorrelatorSpec(std::move(p)));
      }
    }
  }
  return out;
}

/// Spin correlator as a signed sum of blocks. The value is real; the
/// imaginary part of the sum is returned in imag for inspection.
struct SpinCorrelatorResult {
  double value = 0.0;
  double imag = 0.0;
  double error = 0.0;
  std::size_t blocks = 0;
  bool converged = true;
};

inline SpinCorrelatorResult spin_correlator(const Regime& r, double h, SpinKind kind, int distance,
                                            const CorrelatorOptions& opt = {}) {
  SpinCorrelatorResult out;
  cplx sum = 0.0;
  for (const auto& [w, spec] : spin_blocks(kind, distance)) {
    const CorrelatorResult res = correlator(r, h, spec, opt);
    sum += w * res.value;
    out.error += res.error;
    out.converged = out.converged && res.converged;
    ++out.blocks;
  }
  out.value = sum.real();
  out.imag = sum.imag();
  return out;
}

// ---------------------------------------------------------------------------
// Finite chain

namespace detail {

inline void require_finite_block(const CorrelatorSpec& spec, const ModelParams& p) {
  if (spec.m() > p.M) throw ConfigError("block longer than the chain");
}

inline std::vector<Local> spec_locals(const CorrelatorSpec& spec) {
  std::vector<Local> ops;
  for (int j = 1; j <= spec.m(); ++j) ops.push_back(literal_local(spec.kind(j)));
  return ops;
}

}  // namespace detail

/// <0| prod C(l) prod_j E_j prod B(l) |0> / <0| prod C(l) prod B(l) |0> by
/// dense algebra with the literal local operators.
inline cplx dense_F_m(const CorrelatorSpec& spec, const ModelParams& p, const std::vector<cplx>& roots) {
  detail::require_finite_block(spec, p);
  const Vec psi = bethe_vector(p, roots);
  const Vec dual = dual_vector(p, roots);
  const auto ops = detail::spec_locals(spec);
  return bilinear_string(dual, psi, 1, ops) / cplx(dual.transpose() * psi);
}

/// Same sandwich with the local operators rebuilt from the monodromy matrix.
inline cplx qisp_F_m(const CorrelatorSpec& spec, const ModelParams& p, const std::vector<cplx>& roots) {
  detail::require_finite_block(spec, p);
  const QispTable table(p);
  Vec x = bethe_vector(p, roots);
  for (int j = spec.m(); j >= 1; --j) x = table.reconstruct(j, spec.kind(j)) * x;
  const Vec dual = dual_vector(p, roots);
  return cplx(dual.transpose() * x) / cplx(dual.transpose() * bethe_vector(p, roots));
}

/// Finite-chain F_m from the action of T_{eps_j eps'_j}(xi_j), j = 1..m, on
/// <0| prod C(l), and normalised scalar products:
///   F_m = prod_{j<=m} prod_a b(l_a, xi_j) sum_S coef_S <S| prod B(l) |0> / <l| prod B(l) |0>.
/// Needs Bethe roots and pairwise distinct inhomogeneities.
inline cplx finite_chain_F_m(const CorrelatorSpec& spec, const ModelParams& p, const std::vector<cplx>& roots) {
  detail::require_finite_block(spec, p);
  require_size(p.M, 10, "finite_chain_F_m");
  if (spec.m() > 3) throw SizeError("finite_chain_F_m supports m <= 3");
  if (!spec.nonzero()) return 0.0;
  const int m = spec.m();
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if (std::abs(p.xi[static_cast<std::size_t>(a)] - p.xi[static_cast<std::size_t>(b)]) < 1e-10) {
        throw ConfigError("finite_chain_F_m needs pairwise distinct inhomogeneities");
      }
    }
  }
  const int N = static_cast<int>(roots.size());
  BraAlgebra alg(p, roots);
  auto bra = BraAlgebra::single((std::uint64_t{1} << N) - 1);
  for (int j = 1; j <= m; ++j) {
    const int nu = alg.add(p.xi[static_cast<std::size_t>(j - 1)]);
    bra = alg.act(bra, spec.block(j), nu);
  }
  cplx sum = 0.0;
  for (const auto& [S, coef] : bra) {
    if (std::popcount(S) != N) continue;
    std::vector<int> removed;
    std::vector<cplx> x;
    for (int k = 0; k < N; ++k) {
      if (!(S & BraAlgebra::bit(k))) removed.push_back(k);
    }
    BraAlgebra::for_each(S >> N, [&](int j) { x.push_back(p.xi[static_cast<std::size_t>(j)]); });
    sum += cplx(coef) * normalized_ratio_S(p, roots, removed, x);
  }
  cplx phi = 1.0;
  for (int j = 0; j < m; ++j) {
    for (const auto& l : roots) phi *= b_fn(l, p.xi[static_cast<std::size_t>(j)], p.eta());
  }
  return phi * sum;
}

/// Ground-state expectation by exact diagonalisation. With average_doublet
/// the two lowest states of the sector are averaged (massive regime).
inline double exact_F_m(const CorrelatorSpec& spec, const GroundState& gs, bool average_doublet = false) {
  const auto ops = detail::spec_locals(spec);
  const cplx v = expectation_string(gs.vector, 1, ops);
  if (!average_doublet) return v.real();
  const cplx w = expectation_string(gs.second_vector, 1, ops);
  return 0.5 * (v + w).real();
}

/// Thermodynamic estimate of F_m from exact diagonalisation at three chain
/// lengths: for Delta <= 1 a quadratic fit in 1/M^2 of the ground-state values
/// extrapolated to 1/M^2 = 0; for Delta > 1 Aitken's delta-squared on the
/// average over the two lowest states of the S^z = 0 sector, whose splitting
/// closes exponentially in M.
inline double extrapolated_exact_F_m(double delta, const CorrelatorSpec& spec, const std::array<int, 3>& lengths) {
  std::array<double, 3> y{};
  std::array<double, 3> x{};
  const bool massive = delta > 1.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const GroundState gs = exact_ground_state(delta, lengths[i], 0.0);
    y[i] = exact_F_m(spec, gs, massive);
    x[i] = 1.0 / (static_cast<double>(lengths[i]) * lengths[i]);
  }
  if (massive) {
    const double d1 = y[1] - y[0];
    const double d2 = y[2] - y[1];
    if (std::abs(d2 - d1) < 1e-300) return y[2];
    return y[2] - d2 * d2 / (d2 - d1);
  }
  double v = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double l = 1.0;
    for (std::size_t j = 0; j < 3; ++j) {
      if (j != i) l *= -x[j] / (x[i] - x[j]);
    }
    v += l * y[i];
  }
  return v;
}

}  // namespace xxz
