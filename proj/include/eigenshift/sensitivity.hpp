#pragma once

// Derivatives of the ground energy with respect to the right endpoint t:
// two first-derivative formulas (boundary flux and V'-moment), the
// t-derivative field of the eigenfunction, its nodal point and the second
// derivative, plus a finite-difference oracle in t.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "ground_state.hpp"
#include "parallel.hpp"
#include "potential.hpp"
#include "tridiagonal.hpp"

namespace eigenshift {

struct SensitivityOptions {
  double tol_sign = 1e-9;      // dead-band for sign counting, relative to max|u_dot|
  double h_t = 0.0;            // <= 0 selects 1e-3 * (t - a_eff)
  double conditioning_cap = 1e-14;
  unsigned threads = 1;
};

struct Sensitivity {
  double t = 0.0;
  double lambda = 0.0;
  double lambda_dot_flux = 0.0;
  double lambda_dot_integral = 0.0;
  std::vector<double> u_dot;
  double t0 = 0.0;
  double lambda_ddot = 0.0;
  double lambda_dot_fd = 0.0;
  double lambda_ddot_fd = 0.0;
  double lambda_dot_fd_err = 0.0;
  double lambda_ddot_fd_err = 0.0;
  double orth_residual = 0.0;
  double u_dot_x_a = 0.0;
  int sign_changes = 0;
};

namespace detail {

// Integral of (V'(x) - shift) * f(x) over the grid, with f given at nodes and
// interpolated linearly. Cells are split at kinks of V and V' is sampled at
// sub-cell midpoints, so jumps in V' cost no accuracy.
inline double integrate_slope_weighted(const PotentialSpec& spec, const Grid& grid, std::span<const double> f,
                                       double shift) {
  const std::vector<double> kinks = breakpoints(spec);
  auto kink = kinks.begin();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < grid.nodes(); ++i) {
    const double xl = grid.x(i);
    const double xr = grid.x(i + 1);
    while (kink != kinks.end() && *kink <= xl) ++kink;
    double p = xl;
    double fp = f[i];
    auto piece = [&](double q) {
      const double fq = f[i] + (f[i + 1] - f[i]) * (q - xl) / (xr - xl);
      total += (q - p) * (eval_Vprime(spec, 0.5 * (p + q)) - shift) * 0.5 * (fp + fq);
      p = q;
      fp = fq;
    };
    for (auto k = kink; k != kinks.end() && *k < xr; ++k) piece(*k);
    piece(xr);
  }
  return total;
}

inline double trapezoid_dot(const Grid& grid, std::span<const double> f, std::span<const double> g) {
  const double h = grid.h();
  double sum = 0.5 * (f.front() * g.front() + f.back() * g.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) sum += f[i] * g[i];
  return h * sum;
}

}  // namespace detail

/// lambda' = -u_x(t)^2.
inline double lambda_dot_flux(const GroundState& gs) { return -gs.flux_t * gs.flux_t; }

/// lambda' = int V' u^2 dx - u_x(a)^2; the boundary term is dropped for a = -inf.
inline double lambda_dot_integral(const GroundState& gs, const PotentialSpec& spec) {
  std::vector<double> u2(gs.u.size());
  for (std::size_t i = 0; i < u2.size(); ++i) u2[i] = gs.u[i] * gs.u[i];
  double value = detail::integrate_slope_weighted(spec, gs.grid, u2, 0.0);
  if (!gs.domain.left_infinite()) value -= gs.flux_a * gs.flux_a;
  return value;
}

/// Solves (H - lambda) u_dot = lambda_dot u with u_dot(a) = 0,
/// u_dot(t) = -u_x(t) and int u u_dot = 0.
///
/// The bordered system [H - lambda, u; u^T, 0] is reduced as follows: the
/// multiplier is the projection of the lifted right-hand side onto u, the
/// singular operator is regularized by a diagonal bump at the peak of u
/// (which leaves it positive definite and tridiagonal), and the result is
/// projected orthogonally to u. This is exact when u spans the kernel.
/// Returns values on every grid node.
inline std::vector<double> solve_u_dot(const GroundState& gs, double lambda_dot, const PotentialSpec& spec,
                                       const SensitivityOptions& opts = {}) {
  const std::size_t n = gs.grid.interior;
  const double h = gs.grid.h();
  const SymTridiagonal T = discretize(spec, gs.domain, n);
  const std::span<const double> u(gs.u.data() + 1, n);
  const double boundary_value = -gs.flux_t;

  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = lambda_dot * u[i];
  rhs[n - 1] += boundary_value / (h * h);

  double uu = 0.0;
  double ur = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    uu += u[i] * u[i];
    ur += u[i] * rhs[i];
  }
  const double multiplier = ur / uu;
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= multiplier * u[i];

  const auto peak = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
  std::vector<double> bump(n, 0.0);
  bump[peak] = 1.0 / (h * h);
  const ShiftedSolve sol = solve_shifted(T, gs.lambda, rhs, bump);
  if (!(sol.min_pivot > opts.conditioning_cap)) {
    throw ConditioningError("bordered system for u_dot is ill-conditioned (relative pivot " +
                            format_shortest(sol.min_pivot) + "); lambda is not an isolated lowest eigenvalue");
  }
  double ux = 0.0;
  for (std::size_t i = 0; i < n; ++i) ux += u[i] * sol.x[i];
  const double c = ux / uu;

  std::vector<double> out(n + 2, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i + 1] = sol.x[i] - c * u[i];
  out[n + 1] = boundary_value;
  return out;
}

struct NodalPoint {
  double t0 = 0.0;
  int sign_changes = 0;
};

/// Locates the interior sign change of u_dot. Values within
/// tol_sign * max|u_dot| of zero do not count.
inline NodalPoint find_nodal_point_checked(std::span<const double> u_dot, const Grid& grid, double tol_sign = 1e-9) {
  double vmax = 0.0;
  for (double v : u_dot) vmax = std::max(vmax, std::abs(v));
  const double band = tol_sign * vmax;
  NodalPoint result;
  int last_sign = 0;
  std::size_t last_index = 0;
  std::size_t left = 0;
  std::size_t right = 0;
  for (std::size_t i = 1; i < u_dot.size(); ++i) {
    if (std::abs(u_dot[i]) <= band) continue;
    const int s = u_dot[i] > 0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) {
      ++result.sign_changes;
      if (result.sign_changes == 1) {
        left = last_index;
        right = i;
      }
    }
    last_sign = s;
    last_index = i;
  }
  if (result.sign_changes != 1) {
    throw StructureError("u_dot has " + std::to_string(result.sign_changes) + " sign changes, expected exactly one");
  }
  // The crossing lies between the bracketing significant nodes; take the
  // first cell inside that range whose end values differ in sign.
  std::size_t m = left;
  const bool rising = u_dot[left] < 0;
  for (std::size_t k = left; k < right; ++k) {
    if (rising ? (u_dot[k] < 0 && u_dot[k + 1] >= 0) : (u_dot[k] > 0 && u_dot[k + 1] <= 0)) {
      m = k;
      break;
    }
  }
  const double h = grid.h();
  const double frac = u_dot[m] / (u_dot[m] - u_dot[m + 1]);
  result.t0 = grid.x(m) + frac * h;
  return result;
}

inline double find_nodal_point(std::span<const double> u_dot, const Grid& grid, double tol_sign = 1e-9) {
  return find_nodal_point_checked(u_dot, grid, tol_sign).t0;
}

/// One-sided second-order derivative of u_dot at the left wall.
inline double u_dot_slope_at_left(std::span<const double> u_dot, const Grid& grid) {
  return (-3.0 * u_dot[0] + 4.0 * u_dot[1] - u_dot[2]) / (2.0 * grid.h());
}

/// lambda'' = 2 int (V'(x) - V'(t0)) u u_dot dx - 2 u_x(a) u_dot_x(a),
/// the boundary term omitted for a = -inf.
inline double lambda_ddot(const GroundState& gs, std::span<const double> u_dot, double t0, const PotentialSpec& spec) {
  std::vector<double> prod(gs.u.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = gs.u[i] * u_dot[i];
  double value = 2.0 * detail::integrate_slope_weighted(spec, gs.grid, prod, eval_Vprime(spec, t0));
  if (!gs.domain.left_infinite()) value -= 2.0 * gs.flux_a * u_dot_slope_at_left(u_dot, gs.grid);
  return value;
}

struct FdDerivatives {
  double first = 0.0;   // Richardson-combined central difference
  double second = 0.0;  // Richardson-combined second difference
  double first_err = 0.0;
  double second_err = 0.0;
  double h_t = 0.0;
};

/// Central first and second differences of lambda in t from independent
/// solves sharing the wall a_eff, evaluated at h_t and h_t/2 and combined by
/// Richardson extrapolation; the difference of the two levels is the error
/// estimate.
inline FdDerivatives fd_derivatives(const PotentialSpec& spec, const Domain& base, double h_t, std::size_t n_interior,
                                    const SolverOptions& opts = {}, unsigned threads = 1) {
  if (h_t <= 0.0) h_t = 1e-3 * base.width();
  if (!(base.t - h_t > base.a_eff)) throw DomainError("h_t too large for the domain");
  const std::array<double, 5> offsets = {-h_t, -0.5 * h_t, 0.0, 0.5 * h_t, h_t};
  std::array<double, 5> lam{};
  parallel_for(offsets.size(), threads, [&](std::size_t i) {
    Domain d = base;
    d.t = base.t + offsets[i];
    lam[i] = solve_ground_state(spec, d, n_interior, opts).lambda;
  });
  const double half = 0.5 * h_t;
  const double d1_coarse = (lam[4] - lam[0]) / (2.0 * h_t);
  const double d1_fine = (lam[3] - lam[1]) / (2.0 * half);
  const double d2_coarse = (lam[4] - 2.0 * lam[2] + lam[0]) / (h_t * h_t);
  const double d2_fine = (lam[3] - 2.0 * lam[2] + lam[1]) / (half * half);
  FdDerivatives out;
  out.h_t = h_t;
  out.first = d1_fine + (d1_fine - d1_coarse) / 3.0;
  out.second = d2_fine + (d2_fine - d2_coarse) / 3.0;
  out.first_err = std::abs(d1_fine - d1_coarse);
  out.second_err = std::abs(d2_fine - d2_coarse);
  return out;
}

/// Same, resolving the wall for a = -inf at t - h_t where lambda is largest.
inline FdDerivatives fd_derivatives(const PotentialSpec& spec, double a, double t, double h_t, std::size_t n_interior,
                                    const SolverOptions& opts = {}, unsigned threads = 1) {
  Domain base = std::isfinite(a) ? Domain::finite(a, t) : resolve_domain(spec, a, t, n_interior, opts);
  if (h_t <= 0.0) h_t = 1e-3 * base.width();
  if (base.left_infinite()) {
    base = Domain::half_line(t, resolve_domain(spec, a, t - h_t, n_interior, opts).a_eff);
  }
  return fd_derivatives(spec, base, h_t, n_interior, opts, threads);
}

/// Full derivative record for one ground state.
inline Sensitivity compute_sensitivity(const GroundState& gs, const PotentialSpec& spec, const SolverOptions& solver = {},
                                       const SensitivityOptions& opts = {}) {
  Sensitivity s;
  s.t = gs.domain.t;
  s.lambda = gs.lambda;
  s.lambda_dot_flux = lambda_dot_flux(gs);
  s.lambda_dot_integral = lambda_dot_integral(gs, spec);
  s.u_dot = solve_u_dot(gs, s.lambda_dot_flux, spec, opts);
  s.orth_residual = std::abs(detail::trapezoid_dot(gs.grid, gs.u, s.u_dot));
  const NodalPoint node = find_nodal_point_checked(s.u_dot, gs.grid, opts.tol_sign);
  s.t0 = node.t0;
  s.sign_changes = node.sign_changes;
  s.u_dot_x_a = u_dot_slope_at_left(s.u_dot, gs.grid);
  s.lambda_ddot = lambda_ddot(gs, s.u_dot, s.t0, spec);
  const FdDerivatives fd = fd_derivatives(spec, gs.domain, opts.h_t, gs.grid.interior, solver, opts.threads);
  s.lambda_dot_fd = fd.first;
  s.lambda_ddot_fd = fd.second;
  s.lambda_dot_fd_err = fd.first_err;
  s.lambda_ddot_fd_err = fd.second_err;
  return s;
}

}  // namespace eigenshift
