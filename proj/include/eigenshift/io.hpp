#pragma once

// CSV / JSON / plot-data writers. Reals go out as 17-digit scientific in CSV
// and plot files, shortest round-trip in JSON.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "format.hpp"
#include "ground_state.hpp"
#include "sensitivity.hpp"
#include "sweep.hpp"

namespace eigenshift::io {

using json = nlohmann::json;

inline void write_ground_state_csv(std::ostream& os, const GroundState& gs) {
  os << "x,u\n";
  for (std::size_t i = 0; i < gs.u.size(); ++i) {
    os << format_sci17(gs.grid.x(i)) << ',' << format_sci17(gs.u[i]) << '\n';
  }
}

inline json ground_state_json(const GroundState& gs) {
  return json{{"lambda", gs.lambda},  {"flux_a", gs.flux_a}, {"flux_t", gs.flux_t},
              {"residual", gs.residual}, {"N", gs.grid.interior}, {"a_eff", gs.domain.a_eff},
              {"t", gs.domain.t}};
}

inline void write_u_dot_csv(std::ostream& os, const Grid& grid, std::span<const double> u_dot) {
  os << "x,u_dot\n";
  for (std::size_t i = 0; i < u_dot.size(); ++i) {
    os << format_sci17(grid.x(i)) << ',' << format_sci17(u_dot[i]) << '\n';
  }
}

inline json sensitivity_json(const Sensitivity& s) {
  return json{{"t", s.t},
              {"lambda", s.lambda},
              {"lambda_dot_flux", s.lambda_dot_flux},
              {"lambda_dot_integral", s.lambda_dot_integral},
              {"lambda_ddot", s.lambda_ddot},
              {"lambda_dot_fd", s.lambda_dot_fd},
              {"lambda_ddot_fd", s.lambda_ddot_fd},
              {"t0", s.t0},
              {"orth_residual", s.orth_residual}};
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& sw) {
  os << "t,lambda,lambda_dot,second_diff\n";
  for (std::size_t i = 0; i < sw.ts.size(); ++i) {
    os << format_sci17(sw.ts[i]) << ',' << format_sci17(sw.lambdas[i]) << ',' << format_sci17(sw.lambda_dots[i]) << ','
       << format_sci17(sw.second_diffs[i]) << '\n';
  }
}

inline json verdict_json(const TheoremVerdict& v) {
  return json{{"monotone_decreasing", v.monotone_decreasing},
              {"convex_in_t", v.convex_in_t},
              {"concave_in_t", v.concave_in_t},
              {"expect_convex", v.expect_convex},
              {"expect_concave", v.expect_concave},
              {"strictly_convex_observed", v.strictly_convex_observed},
              {"strictly_concave_observed", v.strictly_concave_observed},
              {"tol_thm", v.tol_thm},
              {"min_second_diff", v.min_second_diff},
              {"max_second_diff", v.max_second_diff},
              {"passed", v.passed()}};
}

/// Whitespace-separated two-column data, one point per line.
inline void write_plot(std::ostream& os, std::span<const double> xs, std::span<const double> ys) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << format_sci17(xs[i]) << ' ' << format_sci17(ys[i]) << '\n';
  }
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  return os;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  auto os = open_output(path);
  os << j.dump(2) << '\n';
}

}  // namespace eigenshift::io
