#pragma once

// Symmetric tridiagonal kernels: Sturm counts, Gershgorin bounds, bisection
// for the lowest eigenvalue and shifted LDL^T solves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace eigenshift {

struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples rows i and i+1

  std::size_t size() const { return diag.size(); }
};

/// Number of eigenvalues strictly below sigma (negative pivots of T - sigma I).
inline std::size_t sturm_count(const SymTridiagonal& T, double sigma) {
  const std::size_t n = T.size();
  std::size_t count = 0;
  double d = 1.0;
  const double tiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < n; ++i) {
    const double b2 = i == 0 ? 0.0 : T.off[i - 1] * T.off[i - 1];
    d = (T.diag[i] - sigma) - (i == 0 ? 0.0 : b2 / d);
    if (d == 0.0) d = -tiny;
    if (d < 0.0) ++count;
  }
  return count;
}

inline std::pair<double, double> gershgorin_bounds(const SymTridiagonal& T) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::size_t n = T.size();
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(T.off[i - 1]);
    if (i + 1 < n) r += std::abs(T.off[i]);
    lo = std::min(lo, T.diag[i] - r);
    hi = std::max(hi, T.diag[i] + r);
  }
  return {lo, hi};
}

struct Bracket {
  double lo = 0.0;  // sturm_count(lo) == 0
  double hi = 0.0;  // sturm_count(hi) >= 1
  int iterations = 0;
};

/// Bisects [lo, hi] on the Sturm count until the width drops below
/// rel_width * (1 + |mid|). Requires count(lo) == 0 and count(hi) >= 1.
inline Bracket bisect_lowest(const SymTridiagonal& T, double lo, double hi, double rel_width, int max_iter) {
  Bracket b{lo, hi, 0};
  while (b.hi - b.lo > rel_width * (1.0 + std::abs(0.5 * (b.lo + b.hi)))) {
    if (b.iterations >= max_iter) throw ConvergenceError("Sturm bisection did not converge");
    const double mid = 0.5 * (b.lo + b.hi);
    if (mid <= b.lo || mid >= b.hi) break;  // interval at floating-point resolution
    if (sturm_count(T, mid) == 0) {
      b.lo = mid;
    } else {
      b.hi = mid;
    }
    ++b.iterations;
  }
  return b;
}

inline Bracket lowest_eigenvalue_bracket(const SymTridiagonal& T, double rel_width, int max_iter) {
  auto [lo, hi] = gershgorin_bounds(T);
  const double pad = 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
  return bisect_lowest(T, lo - pad, hi + pad, rel_width, max_iter);
}

/// Expands a bracket geometrically around a guess, then bisects.
inline Bracket lowest_eigenvalue_bracket_near(const SymTridiagonal& T, double guess, double rel_width, int max_iter) {
  double step = 1e-3 * (1.0 + std::abs(guess));
  double lo = guess - step;
  double hi = guess + step;
  for (int k = 0; sturm_count(T, lo) > 0; ++k) {
    if (k > 200) throw ConvergenceError("cannot bracket lowest eigenvalue from below");
    step *= 2.0;
    lo -= step;
  }
  step = 1e-3 * (1.0 + std::abs(guess));
  for (int k = 0; sturm_count(T, hi) < 1; ++k) {
    if (k > 200) throw ConvergenceError("cannot bracket lowest eigenvalue from above");
    step *= 2.0;
    hi += step;
  }
  return bisect_lowest(T, lo, hi, rel_width, max_iter);
}

struct ShiftedSolve {
  std::vector<double> x;
  double min_pivot = 0.0;  // smallest LDL^T pivot, relative to the largest
};

/// Solves (T - sigma I + diag(extra)) x = rhs by LDL^T without pivoting.
/// Intended for positive definite shifted matrices; pivots are reported so
/// callers can reject indefinite or near-singular factorizations.
inline ShiftedSolve solve_shifted(const SymTridiagonal& T, double sigma, std::span<const double> rhs,
                                  std::span<const double> extra = {}) {
  const std::size_t n = T.size();
  std::vector<double> d(n);
  std::vector<double> l(n > 0 ? n - 1 : 0);
  ShiftedSolve out;
  out.x.assign(rhs.begin(), rhs.end());
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double di = T.diag[i] - sigma + (extra.empty() ? 0.0 : extra[i]);
    if (i > 0) {
      di -= l[i - 1] * T.off[i - 1];
      out.x[i] -= l[i - 1] * out.x[i - 1];
    }
    if (di == 0.0) di = std::numeric_limits<double>::min();
    d[i] = di;
    if (i + 1 < n) l[i] = T.off[i] / di;
    dmin = std::min(dmin, di);
    dmax = std::max(dmax, std::abs(di));
  }
  for (std::size_t i = n; i-- > 0;) {
    out.x[i] /= d[i];
    if (i + 1 < n) out.x[i] -= l[i] * out.x[i + 1];
  }
  out.min_pivot = dmax > 0.0 ? dmin / dmax : 0.0;
  return out;
}

}  // namespace eigenshift
