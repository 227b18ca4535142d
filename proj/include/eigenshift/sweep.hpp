#pragma once

// lambda(t) over a uniform grid of right endpoints, and the machine-checkable
// verdicts: monotone decrease, convexity or concavity in t, blow-up rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "format.hpp"
#include "ground_state.hpp"
#include "parallel.hpp"
#include "potential.hpp"
#include "sensitivity.hpp"

namespace eigenshift {

struct SweepOptions {
  bool warm_start = true;
  unsigned threads = 1;
  double tol_thm_factor = 10.0;  // tol_thm = factor * h^2 * max|lambda|
  SolverOptions solver{};
};

struct TheoremVerdict {
  bool monotone_decreasing = false;
  bool convex_in_t = false;
  bool concave_in_t = false;
  bool expect_convex = false;
  bool expect_concave = false;
  bool strictly_convex_observed = false;   // every second difference > tol_thm
  bool strictly_concave_observed = false;  // every second difference < -tol_thm
  double tol_thm = 0.0;
  double min_second_diff = 0.0;
  double max_second_diff = 0.0;

  bool passed() const {
    return monotone_decreasing && (!expect_convex || convex_in_t) && (!expect_concave || concave_in_t);
  }
};

struct SweepResult {
  double a = 0.0;
  double a_eff = 0.0;
  std::size_t n_interior = 0;
  std::vector<double> ts;
  std::vector<double> lambdas;
  std::vector<double> lambda_dots;
  std::vector<double> second_diffs;  // NaN at the two end samples
  TheoremVerdict verdict;

  bool left_infinite() const { return std::isinf(a); }
  double dt() const { return ts[1] - ts[0]; }
  /// Largest spatial step over the sweep (attained at t_max).
  double max_spacing() const { return (ts.back() - a_eff) / static_cast<double>(n_interior + 1); }
};

namespace detail {

[[noreturn]] inline void rethrow_at(double t) {
  const std::string where = "at t = " + format_shortest(t) + ": ";
  try {
    throw;
  } catch (const ConfinementError& e) {
    throw ConfinementError(where + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(where + e.what());
  } catch (const TruncationError& e) {
    throw TruncationError(where + e.what());
  } catch (const RangeError& e) {
    throw RangeError(where + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  } catch (const Error& e) {
    throw Error(where + e.what());
  }
}

inline Domain sweep_domain(double a, double a_eff, double t) {
  return std::isfinite(a) ? Domain::finite(a, t) : Domain::half_line(t, a_eff);
}

}  // namespace detail

/// Applies the theorem's expectations for the given convexity class:
/// decrease always; convex V => convex in t; concave V with a = -inf =>
/// concave in t; affine V is convex, and also concave when a = -inf.
inline TheoremVerdict check_theorem(const SweepResult& sweep, Convexity cls) {
  TheoremVerdict v;
  const double h = sweep.max_spacing();
  double lmax = 0.0;
  for (double l : sweep.lambdas) lmax = std::max(lmax, std::abs(l));
  v.tol_thm = sweep.verdict.tol_thm > 0.0 ? sweep.verdict.tol_thm : 10.0 * h * h * lmax;

  v.monotone_decreasing = true;
  for (std::size_t i = 1; i < sweep.lambdas.size(); ++i) {
    if (!(sweep.lambdas[i] - sweep.lambdas[i - 1] < 0.0)) v.monotone_decreasing = false;
  }
  v.convex_in_t = true;
  v.concave_in_t = true;
  v.strictly_convex_observed = true;
  v.strictly_concave_observed = true;
  v.min_second_diff = std::numeric_limits<double>::infinity();
  v.max_second_diff = -std::numeric_limits<double>::infinity();
  for (double d : sweep.second_diffs) {
    if (std::isnan(d)) continue;
    v.min_second_diff = std::min(v.min_second_diff, d);
    v.max_second_diff = std::max(v.max_second_diff, d);
    if (d < -v.tol_thm) v.convex_in_t = false;
    if (d > v.tol_thm) v.concave_in_t = false;
    if (!(d > v.tol_thm)) v.strictly_convex_observed = false;
    if (!(d < -v.tol_thm)) v.strictly_concave_observed = false;
  }
  switch (cls) {
    case Convexity::convex: v.expect_convex = true; break;
    case Convexity::affine:
      v.expect_convex = true;
      v.expect_concave = sweep.left_infinite();
      break;
    case Convexity::concave: v.expect_concave = sweep.left_infinite(); break;
    case Convexity::indeterminate: break;
  }
  return v;
}

/// Solves at n_t uniformly spaced endpoints in [t_min, t_max]. For a = -inf
/// one wall is chosen at t_min, where lambda is largest, and shared by all
/// samples.
inline SweepResult sweep(const PotentialSpec& spec, double a, double t_min, double t_max, std::size_t n_t,
                         std::size_t n_interior, const SweepOptions& opts = {}) {
  if (n_t < 5) throw DomainError("sweep needs at least 5 samples");
  if (!(t_min < t_max)) throw DomainError("sweep needs t_min < t_max");
  if (!(a < t_min)) throw DomainError("sweep needs a < t_min");
  SweepResult out;
  out.a = a;
  out.n_interior = n_interior;
  try {
    out.a_eff = resolve_domain(spec, a, t_min, n_interior, opts.solver).a_eff;
  } catch (const Error&) {
    detail::rethrow_at(t_min);
  }
  out.ts.resize(n_t);
  for (std::size_t i = 0; i < n_t; ++i) {
    out.ts[i] = i + 1 == n_t ? t_max : t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(n_t - 1);
  }
  out.lambdas.resize(n_t);
  out.lambda_dots.resize(n_t);

  auto solve_at = [&](std::size_t i, const WarmStart* warm) {
    try {
      return solve_ground_state(spec, detail::sweep_domain(a, out.a_eff, out.ts[i]), n_interior, opts.solver, warm);
    } catch (const Error&) {
      detail::rethrow_at(out.ts[i]);
    }
  };

  if (opts.warm_start) {
    GroundState prev = solve_at(0, nullptr);
    out.lambdas[0] = prev.lambda;
    out.lambda_dots[0] = lambda_dot_flux(prev);
    for (std::size_t i = 1; i < n_t; ++i) {
      const WarmStart warm{prev.lambda, prev.grid, prev.u};
      GroundState next = solve_at(i, &warm);
      out.lambdas[i] = next.lambda;
      out.lambda_dots[i] = lambda_dot_flux(next);
      prev = std::move(next);
    }
  } else {
    parallel_for(n_t, opts.threads, [&](std::size_t i) {
      const GroundState gs = solve_at(i, nullptr);
      out.lambdas[i] = gs.lambda;
      out.lambda_dots[i] = lambda_dot_flux(gs);
    });
  }

  const double dt = out.dt();
  out.second_diffs.assign(n_t, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 1; i + 1 < n_t; ++i) {
    out.second_diffs[i] = (out.lambdas[i - 1] - 2.0 * out.lambdas[i] + out.lambdas[i + 1]) / (dt * dt);
  }
  double lmax = 0.0;
  for (double l : out.lambdas) lmax = std::max(lmax, std::abs(l));
  const double h = out.max_spacing();
  out.verdict.tol_thm = opts.tol_thm_factor * h * h * lmax;
  out.verdict = check_theorem(out, spec.convexity());
  return out;
}

/// Supporting-line test: for convex lambda each tangent slope lies between
/// the neighbouring chord slopes; for concave lambda the order is reversed.
inline bool chord_tangent_consistent(const SweepResult& sweep, bool convex, double tol) {
  const double dt = sweep.dt();
  for (std::size_t i = 1; i + 1 < sweep.ts.size(); ++i) {
    const double left = (sweep.lambdas[i] - sweep.lambdas[i - 1]) / dt;
    const double right = (sweep.lambdas[i + 1] - sweep.lambdas[i]) / dt;
    const double slope = sweep.lambda_dots[i];
    const bool ok = convex ? (slope <= right + tol && slope >= left - tol) : (slope >= right - tol && slope <= left + tol);
    if (!ok) return false;
  }
  return true;
}

/// lambda(a + eps) * eps^2 for each eps; tends to pi^2 as eps -> 0 when V is
/// bounded near a.
inline std::vector<double> blowup_profile(const PotentialSpec& spec, double a, const std::vector<double>& epsilons,
                                          std::size_t n_interior, const SolverOptions& opts = {}) {
  if (!std::isfinite(a)) throw DomainError("blow-up profile needs a finite left endpoint");
  std::vector<double> out;
  out.reserve(epsilons.size());
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double eps = epsilons[i];
    if (!(eps > 0.0)) throw DomainError("blow-up offsets must be positive");
    if (i > 0 && !(eps < epsilons[i - 1])) throw DomainError("blow-up offsets must be decreasing");
    out.push_back(solve_ground_state(spec, Domain::finite(a, a + eps), n_interior, opts).lambda * eps * eps);
  }
  return out;
}

}  // namespace eigenshift
