#pragma once

// Verification battery: runs every ground-state, derivative and sweep check
// over a fixed set of potentials and collects pass/fail lines with the
// measured value and tolerance of each.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "format.hpp"
#include "ground_state.hpp"
#include "parallel.hpp"
#include "potential.hpp"
#include "sensitivity.hpp"
#include "sweep.hpp"

namespace eigenshift {

enum class CheckStatus { pass, fail, not_asserted, not_run };

inline std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::not_asserted: return "NOT ASSERTED";
    case CheckStatus::not_run: return "NOT RUN";
  }
  return "FAIL";
}

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::not_run;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct BatteryMember {
  std::string name;
  PotentialSpec spec;
  double a = 0.0;
  double t = 1.0;
  double sweep_min = 0.5;
  double sweep_max = 2.0;
};

struct MemberReport {
  std::string name;
  std::string potential;
  std::string convexity;
  double a = 0.0;
  double t = 0.0;
  double a_eff = 0.0;
  std::size_t n_interior = 0;
  std::vector<Check> checks;
};

struct VerifyTolerances {
  double match = 1e-5;      // flux vs moment formula, relative
  double orth = 1e-10;
  double norm = 1e-12;
  double fd_first = 1e-4;   // relative
  double fd_second = 1e-2;  // relative
  double ddot_affine = 1e-5;
  double oracle_lambda = 1e-8;
  double blowup = 1e-3;
  double warm_cold = 1e-9;  // relative to 1 + max|lambda|
};

struct VerifyOptions {
  std::size_t n_interior = 4001;
  std::size_t sweep_points = 31;
  unsigned threads = 1;
  SolverOptions solver{};
  SensitivityOptions sensitivity{};
  VerifyTolerances tol{};
  double tol_thm_factor = 10.0;
  std::vector<BatteryMember> extra_members;
};

struct VerifyReport {
  std::size_t n_interior = 0;
  double widen = 1.0;
  std::vector<MemberReport> members;
  std::vector<Check> global;

  bool all_passed() const {
    auto ok = [](const Check& c) { return c.status != CheckStatus::fail; };
    for (const auto& m : members) {
      if (!std::all_of(m.checks.begin(), m.checks.end(), ok)) return false;
    }
    return std::all_of(global.begin(), global.end(), ok);
  }
};

/// Reference resolution: grids are refined so that the spacing never
/// exceeds kBatteryLength / (N + 1).
inline constexpr double kBatteryLength = 4.0;
inline constexpr std::size_t kReferenceN = 4001;

/// Interior node count giving spacing at most kBatteryLength/(N+1) on a
/// domain of the given width (never fewer than N).
inline std::size_t nodes_for_width(std::size_t n_interior, double width) {
  const double wanted = std::ceil(width * static_cast<double>(n_interior + 1) / kBatteryLength) - 1.0;
  return std::max(n_interior, static_cast<std::size_t>(std::max(wanted, 0.0)));
}

inline std::vector<BatteryMember> default_battery() {
  return {
      {"free", PotentialSpec::affine(0.0, 0.0), 0.0, 1.0, 0.5, 2.0},
      {"quadratic", PotentialSpec::quadratic(0.0, 0.0, 1.0), kNegInf, 0.0, -1.0, 2.0},
      {"abs", PotentialSpec::abs_shift(0.0), kNegInf, 1.0, 0.0, 2.0},
      {"exponential", PotentialSpec::exp_growth(1.0, 1.0), 0.0, 1.0, 0.5, 2.0},
      {"airy", PotentialSpec::affine(0.0, -1.0), kNegInf, 2.0, 0.0, 4.0},
      {"concave_exp", PotentialSpec::exp_growth(-1.0, 1.0, 0.0, -1.0), kNegInf, 0.0, -1.0, 1.0},
      {"concave_kink", PotentialSpec::neg_abs(0.0, 1.0, 0.0, -2.0), kNegInf, 1.0, 0.5, 2.0},
      {"neg_quadratic_half_line", PotentialSpec::neg_quadratic(1.0), kNegInf, 0.0, -1.0, 1.0},
      {"neg_quadratic_finite", PotentialSpec::neg_quadratic(1.0), 0.0, 1.0, 0.5, 2.0},
  };
}

namespace detail {

inline Check bound_check(std::string name, double measured, double tolerance, std::string note = {}) {
  return {std::move(name), measured <= tolerance ? CheckStatus::pass : CheckStatus::fail, measured, tolerance,
          std::move(note)};
}

inline Check flag_check(std::string name, bool ok, double measured = 0.0, std::string note = {}) {
  return {std::move(name), ok ? CheckStatus::pass : CheckStatus::fail, measured, 0.0, std::move(note)};
}

inline Check gated(std::string name, double measured, std::string note) {
  return {std::move(name), CheckStatus::not_asserted, measured, 0.0, std::move(note)};
}

inline double relative(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), std::numeric_limits<double>::min());
}

// Analytic oracle for selected members, where one exists.
inline std::optional<Check> oracle_check(const BatteryMember& m, const Domain& domain, std::size_t n,
                                         const SolverOptions& solver, double tol, double widen) {
  constexpr double kAiryZero = 2.338107410459767;  // -a_1, first zero of Ai
  const double pi2 = std::numbers::pi * std::numbers::pi;
  if (m.name == "free") {
    const double exact = pi2 / (m.t * m.t);
    return bound_check("oracle_lambda_pi2_over_t2", relative(extrapolated_lambda(m.spec, domain, n, solver), exact), tol,
                       "Richardson N/2N+1 vs pi^2/t^2");
  }
  if (m.name == "quadratic" && m.t == 0.0) {
    return bound_check("oracle_lambda_half_oscillator", relative(extrapolated_lambda(m.spec, domain, n, solver), 3.0),
                       1e-6 * widen, "Richardson vs 3");
  }
  if (m.name == "airy") {
    const double exact = -m.t + kAiryZero;
    return bound_check("oracle_lambda_airy", std::abs(extrapolated_lambda(m.spec, domain, n, solver) - exact), 1e-5 * widen,
                       "Richardson vs -t - a_1");
  }
  return std::nullopt;
}

inline MemberReport run_member(const BatteryMember& m, const VerifyOptions& opts, double widen) {
  MemberReport r;
  r.name = m.name;
  r.potential = m.spec.label();
  r.a = m.a;
  r.t = m.t;
  const auto& tol = opts.tol;
  const bool half_line = std::isinf(m.a);
  const Convexity cls = m.spec.convexity();
  r.convexity = std::string(to_string(cls));

  if (half_line) {
    const bool confined = validate_confinement(m.spec, m.a);
    if (!confined) {
      r.checks.push_back({"confinement", CheckStatus::not_run, 0.0, 0.0, "hypothesis liminf V = inf at -inf fails; member skipped"});
      return r;
    }
    r.checks.push_back(flag_check("confinement", true));
  }

  const Domain probe = resolve_domain(m.spec, m.a, m.t, opts.n_interior, opts.solver);
  const std::size_t n = nodes_for_width(opts.n_interior, probe.width());
  r.a_eff = probe.a_eff;
  r.n_interior = n;

  const double lo = probe.a_eff;
  const Convexity sampled = classify_convexity(m.spec, lo, std::max(m.t, m.sweep_max), 401);
  r.checks.push_back(flag_check("convexity_tag_consistent", sampled == cls, 0.0,
                                "sampled " + std::string(to_string(sampled))));

  const GroundState gs = solve_ground_state(m.spec, probe, n, opts.solver);
  double umin = gs.u[1];
  for (std::size_t i = 1; i + 1 < gs.u.size(); ++i) umin = std::min(umin, gs.u[i]);
  r.checks.push_back(flag_check("u_positive_interior", umin > 0.0, umin));
  r.checks.push_back(bound_check("norm_error", std::abs(gs.quad_norm - 1.0), tol.norm));
  r.checks.push_back(bound_check("eigen_residual", gs.residual, opts.solver.tol_res * (1.0 + std::abs(gs.lambda))));
  r.checks.push_back(bound_check("rayleigh_vs_lambda", std::abs(rayleigh_energy(gs, m.spec) - gs.lambda),
                                 opts.solver.tol_res * (1.0 + std::abs(gs.lambda))));
  r.checks.push_back(flag_check("lowest_eigenvalue_sturm",
                                sturm_count(discretize(m.spec, probe, n), gs.lambda - 1e-9 * (1.0 + std::abs(gs.lambda))) == 0));
  if (auto oc = oracle_check(m, probe, n, opts.solver, tol.oracle_lambda * widen, widen)) r.checks.push_back(*oc);

  const Sensitivity s = compute_sensitivity(gs, m.spec, opts.solver, opts.sensitivity);
  r.checks.push_back(flag_check("lambda_dot_negative", s.lambda_dot_flux < 0.0, s.lambda_dot_flux));
  r.checks.push_back(bound_check("flux_vs_moment_formula", relative(s.lambda_dot_integral, s.lambda_dot_flux), tol.match * widen));
  const double fd1_tol = std::max(tol.fd_first * widen * std::abs(s.lambda_dot_flux), 10.0 * 1e-6 * probe.width() * probe.width());
  r.checks.push_back(bound_check("lambda_dot_vs_fd", std::abs(s.lambda_dot_flux - s.lambda_dot_fd), fd1_tol));
  const double fd2_tol = std::max(tol.fd_second * widen * std::abs(s.lambda_ddot), 1e-4 * widen * std::abs(s.lambda));
  r.checks.push_back(bound_check("lambda_ddot_vs_fd", std::abs(s.lambda_ddot - s.lambda_ddot_fd), fd2_tol));
  r.checks.push_back(bound_check("orthogonality", s.orth_residual, tol.orth));
  r.checks.push_back(flag_check("single_sign_change", s.sign_changes == 1, s.sign_changes));
  r.checks.push_back(flag_check("nodal_point_interior", gs.domain.a_eff < s.t0 && s.t0 < gs.domain.t, s.t0));
  r.checks.push_back(bound_check("u_dot_endpoint_datum", std::abs(s.u_dot.back() + gs.flux_t), 0.0));
  if (!half_line) {
    r.checks.push_back(flag_check("flux_a_positive", gs.flux_a > 0.0, gs.flux_a));
    r.checks.push_back(flag_check("u_dot_slope_at_a_nonpositive", s.u_dot_x_a <= 0.0, s.u_dot_x_a));
  }

  const bool affine = cls == Convexity::affine;
  if (cls == Convexity::convex) {
    r.checks.push_back(flag_check("lambda_ddot_positive", s.lambda_ddot > 0.0, s.lambda_ddot));
  } else if (affine && half_line) {
    r.checks.push_back(bound_check("lambda_ddot_vanishes", std::abs(s.lambda_ddot), tol.ddot_affine * widen));
  } else if (affine) {
    r.checks.push_back(flag_check("lambda_ddot_nonnegative", s.lambda_ddot >= 0.0, s.lambda_ddot));
  } else if (cls == Convexity::concave && half_line) {
    r.checks.push_back(flag_check("lambda_ddot_negative", s.lambda_ddot < 0.0, s.lambda_ddot));
  } else {
    r.checks.push_back(gated("lambda_ddot_sign", s.lambda_ddot, "hypothesis a = -inf absent"));
  }

  // Sweeps: warm-started (reported) and cold-started, compared sample by sample.
  SweepOptions sopt;
  sopt.solver = opts.solver;
  sopt.tol_thm_factor = opts.tol_thm_factor;
  const Domain sweep_probe = resolve_domain(m.spec, m.a, m.sweep_min, opts.n_interior, opts.solver);
  const std::size_t sweep_n = nodes_for_width(opts.n_interior, m.sweep_max - sweep_probe.a_eff);
  const SweepResult warm = sweep(m.spec, m.a, m.sweep_min, m.sweep_max, opts.sweep_points, sweep_n, sopt);
  sopt.warm_start = false;
  const SweepResult cold = sweep(m.spec, m.a, m.sweep_min, m.sweep_max, opts.sweep_points, sweep_n, sopt);
  double diff = 0.0;
  double lmax = 0.0;
  for (std::size_t i = 0; i < warm.lambdas.size(); ++i) {
    diff = std::max(diff, std::abs(warm.lambdas[i] - cold.lambdas[i]));
    lmax = std::max(lmax, std::abs(warm.lambdas[i]));
  }
  r.checks.push_back(bound_check("sweep_warm_vs_cold", diff, tol.warm_cold * (1.0 + lmax)));
  const TheoremVerdict& v = warm.verdict;
  r.checks.push_back(flag_check("sweep_monotone_decreasing", v.monotone_decreasing));
  if (v.expect_convex) {
    r.checks.push_back(bound_check("sweep_convex_in_t", std::max(-v.min_second_diff, 0.0), v.tol_thm));
  } else {
    r.checks.push_back(gated("sweep_convex_in_t", v.min_second_diff, "not implied for this class/domain"));
  }
  if (v.expect_concave) {
    r.checks.push_back(bound_check("sweep_concave_in_t", std::max(v.max_second_diff, 0.0), v.tol_thm));
  } else {
    r.checks.push_back(gated("sweep_concave_in_t", v.max_second_diff,
                             cls == Convexity::concave ? "hypothesis a = -inf absent" : "not implied for this class/domain"));
  }
  if (v.expect_convex || v.expect_concave) {
    double dmax = 0.0;
    for (double d : warm.lambda_dots) dmax = std::max(dmax, std::abs(d));
    const double chord_tol = v.tol_thm * warm.dt() + tol.match * widen * dmax;
    r.checks.push_back(flag_check("sweep_chord_tangent", chord_tangent_consistent(warm, v.expect_convex, chord_tol) &&
                                                           (!v.expect_concave || chord_tangent_consistent(warm, false, chord_tol))));
  }
  // Strictness is reported, never asserted.
  if (cls == Convexity::convex) {
    r.checks.push_back(gated("sweep_strictly_convex_observed", v.min_second_diff, v.strictly_convex_observed ? "yes" : "no"));
  } else if (cls == Convexity::concave && half_line) {
    r.checks.push_back(gated("sweep_strictly_concave_observed", v.max_second_diff, v.strictly_concave_observed ? "yes" : "no"));
  }
  return r;
}

}  // namespace detail

/// lambda(a + eps) * eps^2 against pi^2 at eps = 1e-2 for V = 0 and V = x^2, a = 0.
inline std::vector<Check> blowup_checks(const VerifyOptions& opts, double widen) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const std::vector<double> eps = {1e-1, 3e-2, 1e-2};
  std::vector<Check> out;
  const std::pair<const char*, PotentialSpec> cases[] = {{"free", PotentialSpec::affine(0.0, 0.0)},
                                                         {"quadratic", PotentialSpec::quadratic(0.0, 0.0, 1.0)}};
  for (const auto& [name, spec] : cases) {
    const auto profile = blowup_profile(spec, 0.0, eps, opts.n_interior, opts.solver);
    out.push_back(detail::bound_check(std::string("blowup_rate_") + name, detail::relative(profile.back(), pi2),
                                      opts.tol.blowup * widen, "lambda(a+eps)*eps^2 vs pi^2 at eps=1e-2"));
    bool increasing = true;
    double prev = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const double lam = profile[i] / (eps[i] * eps[i]);
      if (i > 0 && !(lam > prev)) increasing = false;
      prev = lam;
    }
    out.push_back(detail::flag_check(std::string("blowup_monotone_") + name, increasing));
  }
  return out;
}

inline VerifyReport run_verify_battery(const VerifyOptions& opts) {
  VerifyReport report;
  report.n_interior = opts.n_interior;
  const double ratio = static_cast<double>(kReferenceN + 1) / static_cast<double>(opts.n_interior + 1);
  report.widen = std::max(1.0, ratio * ratio);

  std::vector<BatteryMember> members = default_battery();
  members.insert(members.end(), opts.extra_members.begin(), opts.extra_members.end());
  report.members.resize(members.size());
  parallel_for(members.size(), opts.threads, [&](std::size_t i) {
    try {
      report.members[i] = detail::run_member(members[i], opts, report.widen);
    } catch (const Error& e) {
      MemberReport& r = report.members[i];
      r.name = members[i].name;
      r.potential = members[i].spec.label();
      r.a = members[i].a;
      r.t = members[i].t;
      r.checks.push_back({"solver", CheckStatus::fail, 0.0, 0.0, e.what()});
    }
  });
  report.global = blowup_checks(opts, report.widen);
  return report;
}

inline std::string render_report(const VerifyReport& report) {
  std::ostringstream os;
  os << "eigenshift verification report\n";
  os << "N = " << report.n_interior << "\n";
  if (report.widen > 1.0) {
    os << "note: N below " << kReferenceN << "; discretization-limited tolerances widened by factor "
       << format_shortest(report.widen) << "\n";
  }
  auto line = [&os](const Check& c) {
    os << "  [" << to_string(c.status) << "] " << c.name << " measured=" << format_shortest(c.measured);
    if (c.tolerance != 0.0) os << " tol=" << format_shortest(c.tolerance);
    if (!c.note.empty()) os << " (" << c.note << ")";
    os << "\n";
  };
  for (const auto& m : report.members) {
    os << "\n" << m.name << ": " << m.potential << " a=" << format_shortest(m.a) << " t=" << format_shortest(m.t)
       << " class=" << m.convexity;
    if (m.n_interior > 0) os << " a_eff=" << format_shortest(m.a_eff) << " N=" << m.n_interior;
    os << "\n";
    for (const auto& c : m.checks) line(c);
  }
  os << "\nblow-up rate\n";
  for (const auto& c : report.global) line(c);
  os << "\n" << (report.all_passed() ? "ALL ASSERTED CHECKS PASSED" : "SOME CHECKS FAILED") << "\n";
  return os.str();
}

inline nlohmann::json report_json(const VerifyReport& report) {
  using nlohmann::json;
  auto check_json = [](const Check& c) {
    return json{{"name", c.name}, {"status", std::string(to_string(c.status))}, {"measured", c.measured},
                {"tolerance", c.tolerance}, {"note", c.note}};
  };
  json members = json::array();
  for (const auto& m : report.members) {
    json checks = json::array();
    for (const auto& c : m.checks) checks.push_back(check_json(c));
    members.push_back(json{{"name", m.name}, {"potential", m.potential}, {"convexity", m.convexity},
                           {"a", format_shortest(m.a)}, {"t", m.t}, {"a_eff", m.a_eff}, {"N", m.n_interior},
                           {"checks", checks}});
  }
  json global = json::array();
  for (const auto& c : report.global) global.push_back(check_json(c));
  return json{{"N", report.n_interior}, {"widen", report.widen}, {"members", members}, {"blowup", global},
              {"passed", report.all_passed()}};
}

}  // namespace eigenshift
