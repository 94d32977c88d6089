#pragma once

// One-dimensional quadrature rules on straight segments and circles of the
// complex plane, and deterministic tensor-product integration over them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "xxz/errors.hpp"
#include "xxz/model.hpp"

namespace xxz {

/// Gauss-Legendre on the straight segment a -> b (complex endpoints allowed).
struct GaussSegment {
  cplx a;
  cplx b;
};

/// Trapezoid with n equal panels, offset by half a panel: exact for
/// trigonometric polynomials on the period [a, a + period) shifted by i*shift.
struct PeriodicSegment {
  double a;
  double period;
  double shift = 0.0;
};

/// Trapezoid on [-L, L] + i*shift, for integrands decaying exponentially.
struct TruncatedLine {
  double L;
  double shift = 0.0;
};

/// Counter-clockwise circle; trapezoid in the angle.
struct Circle {
  cplx center;
  double radius;
};

using RuleDescriptor = std::variant<GaussSegment, PeriodicSegment, TruncatedLine, Circle>;

struct QuadRule {
  std::vector<cplx> nodes;
  std::vector<cplx> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  cplx integrate(F&& f) const {
    std::vector<cplx> terms(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) terms[i] = weights[i] * f(nodes[i]);
    return pairwise_sum(terms);
  }

  static cplx pairwise_sum(std::span<const cplx> v) {
    if (v.size() <= 8) {
      cplx s = 0.0;
      for (const auto& x : v) s += x;
      return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
  }
};

/// Nodes and weights of n-point Gauss-Legendre on [-1, 1] (Newton on P_n).
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw BadDescriptor("Gauss-Legendre needs at least one node");
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0;
    double p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
}

inline QuadRule make_rule(const RuleDescriptor& d, int n) {
  if (n < 2) throw BadDescriptor("quadrature rules need n_points >= 2");
  QuadRule r;
  r.nodes.reserve(static_cast<std::size_t>(n));
  r.weights.reserve(static_cast<std::size_t>(n));
  if (const auto* g = std::get_if<GaussSegment>(&d)) {
    if (g->a == g->b) throw BadDescriptor("degenerate segment");
    std::vector<double> x;
    std::vector<double> w;
    gauss_legendre(n, x, w);
    const cplx mid = 0.5 * (g->a + g->b);
    const cplx half = 0.5 * (g->b - g->a);
    for (int i = 0; i < n; ++i) {
      r.nodes.push_back(mid + half * x[static_cast<std::size_t>(i)]);
      r.weights.push_back(half * w[static_cast<std::size_t>(i)]);
    }
  } else if (const auto* p = std::get_if<PeriodicSegment>(&d)) {
    if (!(p->period > 0)) throw BadDescriptor("period must be positive");
    const double hstep = p->period / n;
    for (int i = 0; i < n; ++i) {
      r.nodes.emplace_back(p->a + (i + 0.5) * hstep, p->shift);
      r.weights.emplace_back(hstep, 0.0);
    }
  } else if (const auto* t = std::get_if<TruncatedLine>(&d)) {
    if (!(t->L > 0)) throw BadDescriptor("truncation length must be positive");
    const double hstep = 2.0 * t->L / (n - 1);
    for (int i = 0; i < n; ++i) {
      r.nodes.emplace_back(-t->L + i * hstep, t->shift);
      r.weights.emplace_back(hstep, 0.0);
    }
  } else if (const auto* c = std::get_if<Circle>(&d)) {
    if (!(c->radius > 0)) throw BadDescriptor("circle radius must be positive");
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * kPi * i / n;
      const cplx e = std::polar(1.0, phi);
      r.nodes.push_back(c->center + c->radius * e);
      // d lambda = i r e^{i phi} d phi
      r.weights.push_back(kI * c->radius * e * (2.0 * kPi / n));
    }
  }
  return r;
}

/// Rule for a contour made of consecutive pieces.
inline QuadRule concat(std::span<const QuadRule> parts) {
  QuadRule out;
  for (const auto& p : parts) {
    out.nodes.insert(out.nodes.end(), p.nodes.begin(), p.nodes.end());
    out.weights.insert(out.weights.end(), p.weights.begin(), p.weights.end());
  }
  return out;
}

inline constexpr int kDefaultDimensionCap = 4;

/// Worker count: XXZ_THREADS if set, else hardware concurrency.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("XXZ_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Tensor-product integral. The integrand receives the node index of every
/// dimension, which lets callers work from precomputed tables. Partial sums
/// are formed per outer node in fixed order and combined pairwise, so the
/// result does not depend on the number of threads.
template <class F>
cplx integrate_nd_indexed(F&& f, std::span<const QuadRule> rules, bool parallel = true,
                          int dimension_cap = kDefaultDimensionCap) {
  const std::size_t m = rules.size();
  if (m == 0) return f(std::span<const std::size_t>{});
  if (static_cast<int>(m) > dimension_cap) {
    throw DimensionCap("integral of dimension " + std::to_string(m) + " exceeds cap " +
                       std::to_string(dimension_cap));
  }
  const std::size_t outer = rules[0].size();
  std::vector<cplx> partial(outer, 0.0);

  auto work = [&](std::size_t i0) {
    std::vector<std::size_t> idx(m, 0);
    idx[0] = i0;
    std::vector<cplx> inner;
    // odometer over dimensions 1..m-1; innermost sums are accumulated pairwise
    const std::size_t last = rules[m - 1].size();
    inner.resize(last);
    std::vector<cplx> blocks;
    while (true) {
      if (m == 1) {
        blocks.push_back(rules[0].weights[i0] * f(std::span<const std::size_t>(idx)));
        break;
      }
      cplx w = rules[0].weights[i0];
      for (std::size_t d = 1; d + 1 < m; ++d) w *= rules[d].weights[idx[d]];
      for (std::size_t k = 0; k < last; ++k) {
        idx[m - 1] = k;
        inner[k] = rules[m - 1].weights[k] * f(std::span<const std::size_t>(idx));
      }
      blocks.push_back(w * QuadRule::pairwise_sum(inner));
      std::size_t d = m - 2;
      while (d >= 1) {
        if (++idx[d] < rules[d].size()) break;
        idx[d] = 0;
        --d;
      }
      if (d == 0) break;
    }
    partial[i0] = QuadRule::pairwise_sum(blocks);
  };

  const unsigned nthreads = parallel ? std::min<unsigned>(worker_threads(), static_cast<unsigned>(outer)) : 1u;
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < outer; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < outer; i += nthreads) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return QuadRule::pairwise_sum(partial);
}

/// Tensor-product integral of f(lambda_1, ..., lambda_m).
template <class F>
cplx integrate_nd(F&& f, std::span<const QuadRule> rules, bool parallel = true,
                  int dimension_cap = kDefaultDimensionCap) {
  return integrate_nd_indexed(
      [&](std::span<const std::size_t> idx) {
        std::vector<cplx> pts(idx.size());
        for (std::size_t d = 0; d < idx.size(); ++d) pts[d] = rules[d].nodes[idx[d]];
        return f(std::span<const cplx>(pts));
      },
      rules, parallel, dimension_cap);
}

}  // namespace xxz
