#pragma once

// Dirichlet ground state of -u'' + V u on (a, t) by second-order central
// differences, Sturm bisection and inverse iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "format.hpp"
#include "potential.hpp"
#include "tridiagonal.hpp"

namespace eigenshift {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Interval (a, t]. For a = -inf, a_eff is the finite wall used numerically.
struct Domain {
  double a = 0.0;
  double t = 1.0;
  double a_eff = 0.0;

  static Domain finite(double a, double t) { return checked({a, t, a}); }
  static Domain half_line(double t, double a_eff) { return checked({kNegInf, t, a_eff}); }

  bool left_infinite() const { return std::isinf(a); }
  double width() const { return t - a_eff; }

 private:
  static Domain checked(Domain d) {
    if (!std::isfinite(d.t)) throw DomainError("right endpoint t must be finite");
    if (!std::isfinite(d.a_eff)) throw DomainError("effective left endpoint must be finite");
    if (!(d.a < d.t) || !(d.a_eff < d.t)) {
      throw DomainError("need a < t, got a = " + format_shortest(d.a) + ", t = " + format_shortest(d.t));
    }
    if (std::isfinite(d.a) && d.a_eff != d.a) throw DomainError("a_eff must equal a for finite a");
    if (std::isinf(d.a) && d.a > 0) throw DomainError("left endpoint cannot be +inf");
    return d;
  }
};

/// Uniform grid x_0 = a_eff < ... < x_{N+1} = t with N interior nodes.
struct Grid {
  double x0 = 0.0;
  double x_end = 1.0;
  std::size_t interior = 0;

  Grid() = default;
  Grid(double left, double right, std::size_t n_interior) : x0(left), x_end(right), interior(n_interior) {}

  double h() const { return (x_end - x0) / static_cast<double>(interior + 1); }
  std::size_t nodes() const { return interior + 2; }
  double x(std::size_t i) const {
    return i == interior + 1 ? x_end : x0 + static_cast<double>(i) * h();
  }
};

struct SolverOptions {
  double tol_norm = 1e-12;
  double tol_res = 1e-8;           // relative to 1 + |lambda|
  double bisection_rel_width = 1e-12;
  int max_bisection = 400;
  int max_inverse_iterations = 50;
  double truncation_margin = 25.0;
  double tol_trunc = 1e-9;
  int max_truncation_doublings = 20;
};

inline constexpr std::size_t kMinInterior = 16;

struct GroundState {
  Domain domain;
  Grid grid;
  double lambda = 0.0;
  std::vector<double> u;  // all grid nodes; u.front() == u.back() == 0
  double flux_a = 0.0;
  double flux_t = 0.0;
  double residual = 0.0;
  double quad_norm = 0.0;
  int bisection_steps = 0;
  int inverse_iterations = 0;
};

/// Previous solution used to seed the bracket and the inverse iteration.
struct WarmStart {
  double lambda = 0.0;
  Grid grid;
  std::span<const double> u;
};

/// Central-difference Dirichlet operator on the interior nodes:
/// diagonal 2/h^2 + V(x_i), off-diagonal -1/h^2.
inline SymTridiagonal discretize(const PotentialSpec& spec, const Domain& domain, std::size_t n_interior) {
  if (n_interior < 1) throw DomainError("discretization needs at least one interior node");
  if (!(domain.a_eff < domain.t)) throw DomainError("invalid domain");
  const Grid grid(domain.a_eff, domain.t, n_interior);
  const double h = grid.h();
  const double inv_h2 = 1.0 / (h * h);
  SymTridiagonal T;
  T.diag.resize(n_interior);
  T.off.assign(n_interior - 1, -inv_h2);
  for (std::size_t i = 0; i < n_interior; ++i) {
    const double v = eval_V(spec, grid.x(i + 1));
    if (!std::isfinite(v)) throw DomainError("potential is not finite at x = " + format_shortest(grid.x(i + 1)));
    T.diag[i] = 2.0 * inv_h2 + v;
  }
  return T;
}

namespace detail {

// sum((u_{i+1}-u_i)^2)/h^2 + sum(V_i u_i^2) over all nodes: every term is
// nonnegative except the potential part, which keeps the quotient accurate
// to a few ulps of lambda rather than of ||T||.
inline double rayleigh_quotient(std::span<const double> potential, std::span<const double> nodes_u, double h) {
  const double inv_h2 = 1.0 / (h * h);
  double grad = 0.0;
  double pot = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < nodes_u.size(); ++i) {
    const double du = nodes_u[i + 1] - nodes_u[i];
    grad += du * du;
  }
  for (std::size_t i = 1; i + 1 < nodes_u.size(); ++i) {
    pot += potential[i - 1] * nodes_u[i] * nodes_u[i];
    mass += nodes_u[i] * nodes_u[i];
  }
  return (grad * inv_h2 + pot) / mass;
}

inline double interpolate(const Grid& grid, std::span<const double> values, double x) {
  const double h = grid.h();
  if (x <= grid.x0) return values.front();
  if (x >= grid.x_end) return values.back();
  const double s = (x - grid.x0) / h;
  auto i = static_cast<std::size_t>(s);
  if (i + 1 >= values.size()) i = values.size() - 2;
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

}  // namespace detail

/// Solves on an explicit domain (a_eff already chosen when a = -inf).
inline GroundState solve_ground_state(const PotentialSpec& spec, const Domain& domain, std::size_t n_interior,
                                      const SolverOptions& opts = {}, const WarmStart* warm = nullptr) {
  if (n_interior < kMinInterior) throw DomainError("N must be at least 16");
  if (domain.left_infinite() && !validate_confinement(spec, domain.a)) {
    throw ConfinementError("potential " + spec.label() + " is not confining as x -> -inf");
  }
  const SymTridiagonal T = discretize(spec, domain, n_interior);
  GroundState gs;
  gs.domain = domain;
  gs.grid = Grid(domain.a_eff, domain.t, n_interior);
  const double h = gs.grid.h();
  std::vector<double> potential(n_interior);
  for (std::size_t i = 0; i < n_interior; ++i) potential[i] = eval_V(spec, gs.grid.x(i + 1));

  const Bracket bracket = warm != nullptr
                              ? lowest_eigenvalue_bracket_near(T, warm->lambda, opts.bisection_rel_width, opts.max_bisection)
                              : lowest_eigenvalue_bracket(T, opts.bisection_rel_width, opts.max_bisection);
  gs.bisection_steps = bracket.iterations;

  std::vector<double> x(n_interior, 1.0);
  if (warm != nullptr) {
    for (std::size_t i = 0; i < n_interior; ++i) {
      x[i] = std::max(detail::interpolate(warm->grid, warm->u, gs.grid.x(i + 1)), 0.0);
    }
    if (*std::max_element(x.begin(), x.end()) <= 0.0) std::fill(x.begin(), x.end(), 1.0);
  }

  // count(lo) == 0, so T - lo I is positive definite up to the resolution of
  // the Sturm recurrence (about eps * ||T||). If the factorization still meets
  // a nonpositive pivot, back the shift off geometrically from that scale.
  double sigma = bracket.lo;
  double backoff = 16.0 * std::numeric_limits<double>::epsilon() * (4.0 / (h * h) + std::abs(sigma));
  std::vector<double> nodes(n_interior + 2, 0.0);
  double lambda = bracket.lo;
  bool converged = false;
  for (int it = 1; it <= opts.max_inverse_iterations; ++it) {
    ShiftedSolve step = solve_shifted(T, sigma, x);
    if (step.min_pivot <= 0.0) {
      sigma -= backoff;
      backoff *= 4.0;
      continue;
    }
    double peak = 0.0;
    for (double v : step.x) {
      if (std::abs(v) > std::abs(peak)) peak = v;
    }
    if (peak == 0.0 || !std::isfinite(peak)) throw ConvergenceError("inverse iteration broke down");
    double change = 0.0;
    for (std::size_t i = 0; i < n_interior; ++i) {
      const double next = step.x[i] / peak;
      change = std::max(change, std::abs(next - x[i]));
      x[i] = next;
    }
    gs.inverse_iterations = it;
    if (it >= 2 && change <= 1e-13) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("inverse iteration did not converge for " + spec.label());

  std::copy(x.begin(), x.end(), nodes.begin() + 1);
  lambda = detail::rayleigh_quotient(potential, nodes, h);

  double sumsq = 0.0;
  for (double v : x) sumsq += v * v;
  const double scale = 1.0 / std::sqrt(h * sumsq);
  for (double& v : nodes) v *= scale;

  double norm2 = 0.0;
  for (std::size_t i = 1; i <= n_interior; ++i) norm2 += nodes[i] * nodes[i];
  gs.quad_norm = std::sqrt(h * norm2);
  gs.lambda = lambda;
  gs.u = std::move(nodes);
  const auto& u = gs.u;
  const std::size_t last = n_interior + 1;
  gs.flux_a = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  gs.flux_t = (3.0 * u[last] - 4.0 * u[last - 1] + u[last - 2]) / (2.0 * h);

  const double inv_h2 = 1.0 / (h * h);
  double res2 = 0.0;
  for (std::size_t i = 1; i <= n_interior; ++i) {
    const double r = (2.0 * u[i] - u[i - 1] - u[i + 1]) * inv_h2 + (potential[i - 1] - lambda) * u[i];
    res2 += r * r;
  }
  gs.residual = std::sqrt(h * res2);

  for (std::size_t i = 1; i <= n_interior; ++i) {
    if (!(u[i] > 0.0)) throw ConvergenceError("computed eigenvector is not positive; not a ground state");
  }
  if (std::abs(gs.quad_norm - 1.0) > opts.tol_norm) throw ConvergenceError("normalization failed");
  if (gs.residual > opts.tol_res * (1.0 + std::abs(lambda))) {
    throw ConvergenceError("eigen-residual " + format_shortest(gs.residual) + " above tolerance");
  }
  return gs;
}

/// Energy by forward-difference gradient quadrature plus trapezoid potential term.
inline double rayleigh_energy(const GroundState& gs, const PotentialSpec& spec) {
  const double h = gs.grid.h();
  double grad = 0.0;
  double pot = 0.0;
  for (std::size_t i = 0; i + 1 < gs.u.size(); ++i) {
    const double du = (gs.u[i + 1] - gs.u[i]) / h;
    grad += h * du * du;
  }
  for (std::size_t i = 0; i < gs.u.size(); ++i) {
    const double w = (i == 0 || i + 1 == gs.u.size()) ? 0.5 * h : h;
    pot += w * eval_V(spec, gs.grid.x(i)) * gs.u[i] * gs.u[i];
  }
  return grad + pot;
}

/// Wall position for a = -inf: the first point left of t (leftward geometric
/// search, refined by bisection) where V >= lambda_probe + margin, then moved
/// further out until doubling the width changes lambda by < tol_trunc at
/// fixed grid spacing.
inline double truncate_domain(const PotentialSpec& spec, double t, double lambda_probe, std::size_t n_interior = 2001,
                              const SolverOptions& opts = {}) {
  if (!validate_confinement(spec, kNegInf)) {
    throw ConfinementError("potential " + spec.label() + " is not confining as x -> -inf");
  }
  const double threshold = lambda_probe + opts.truncation_margin;
  double d = 1.0;
  int k = 0;
  while (eval_V(spec, t - d) < threshold) {
    if (++k > 60) throw TruncationError("no point left of t reaches V >= " + format_shortest(threshold));
    d *= 2.0;
  }
  if (k > 0) {
    double inside = d / 2.0;  // V(t - inside) < threshold
    double outside = d;       // V(t - outside) >= threshold
    for (int i = 0; i < 60 && outside - inside > 1e-6 * outside; ++i) {
      const double mid = 0.5 * (inside + outside);
      if (eval_V(spec, t - mid) >= threshold) {
        outside = mid;
      } else {
        inside = mid;
      }
    }
    d = outside;
  }

  for (int doubling = 0; doubling <= opts.max_truncation_doublings; ++doubling) {
    const double a_eff = t - d;
    const double lam = solve_ground_state(spec, Domain::half_line(t, a_eff), n_interior, opts).lambda;
    const double lam2 = solve_ground_state(spec, Domain::half_line(t, t - 2.0 * d), 2 * n_interior + 1, opts).lambda;
    if (std::abs(lam - lam2) < opts.tol_trunc) return a_eff;
    d *= 2.0;
  }
  throw TruncationError("doubling check failed to converge for " + spec.label());
}

/// Effective domain for (a, t]. For a = -inf the wall is derived from an
/// upper bound on lambda obtained on shrunken domains.
inline Domain resolve_domain(const PotentialSpec& spec, double a, double t, std::size_t n_interior = 2001,
                             const SolverOptions& opts = {}) {
  if (std::isfinite(a)) return Domain::finite(a, t);
  if (!(a < 0)) throw DomainError("left endpoint must be finite or -inf");
  if (!validate_confinement(spec, a)) {
    throw ConfinementError("potential " + spec.label() + " is not confining as x -> -inf");
  }
  // Dirichlet monotonicity: lambda on a subinterval bounds lambda(t) from above.
  const std::size_t probe_n = std::max<std::size_t>(kMinInterior, std::min<std::size_t>(n_interior, 801));
  double probe = solve_ground_state(spec, Domain::half_line(t, t - 1.0), probe_n, opts).lambda;
  double width = 1.0;
  while (eval_V(spec, t - width) < probe + opts.truncation_margin && width < 1e18) width *= 2.0;
  probe = std::min(probe, solve_ground_state(spec, Domain::half_line(t, t - width), probe_n, opts).lambda);
  return Domain::half_line(t, truncate_domain(spec, t, probe, n_interior, opts));
}

inline GroundState solve_ground_state(const PotentialSpec& spec, double a, double t, std::size_t n_interior,
                                      const SolverOptions& opts = {}) {
  return solve_ground_state(spec, resolve_domain(spec, a, t, n_interior, opts), n_interior, opts);
}

/// Richardson extrapolation of lambda from N and 2N+1 interior nodes (h and h/2).
inline double extrapolated_lambda(const PotentialSpec& spec, const Domain& domain, std::size_t n_interior,
                                  const SolverOptions& opts = {}) {
  const double coarse = solve_ground_state(spec, domain, n_interior, opts).lambda;
  const double fine = solve_ground_state(spec, domain, 2 * n_interior + 1, opts).lambda;
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace eigenshift
