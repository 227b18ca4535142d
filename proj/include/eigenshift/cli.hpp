#pragma once

// Command-line front end: configuration parsing and the four run modes.
// Exit codes: 0 success, 1 numerical failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "errors.hpp"
#include "format.hpp"
#include "ground_state.hpp"
#include "io.hpp"
#include "potential.hpp"
#include "sensitivity.hpp"
#include "sweep.hpp"
#include "verify.hpp"

namespace eigenshift::cli {

enum class Mode { solve, sensitivity, sweep, verify };

struct TRange {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct Tolerances {
  std::optional<double> norm, res, trunc, sign, match, orth, thm;
};

struct RunConfig {
  Mode mode = Mode::solve;
  std::string potential;  // canonical label, empty when absent
  double a = 0.0;
  std::optional<double> t;
  std::optional<TRange> t_range;
  std::size_t n_interior = 4001;
  double h_t = 0.0;
  Tolerances tol;
  std::filesystem::path out_dir = ".";
  std::set<std::string> formats = {"csv", "json"};
  unsigned threads = 1;
};

namespace detail {

inline const std::vector<std::string>& value_keys() {
  static const std::vector<std::string> keys = {
      "potential", "a",       "t",         "t-range",   "N",         "h-t",       "tol-norm", "tol-res",
      "tol-trunc", "tol-sign", "tol-match", "tol-orth", "tol-thm",   "out-dir",   "format",   "threads"};
  return keys;
}

inline Mode parse_mode(const std::string& text) {
  if (text == "solve") return Mode::solve;
  if (text == "sensitivity") return Mode::sensitivity;
  if (text == "sweep") return Mode::sweep;
  if (text == "verify") return Mode::verify;
  throw UsageError("unknown mode '" + text + "' (expected solve, sensitivity, sweep or verify)");
}

inline double require_real(const std::string& key, const std::string& text) {
  const auto v = parse_real(text);
  if (!v) throw UsageError("malformed value '" + text + "' for --" + key);
  return *v;
}

inline double require_positive(const std::string& key, const std::string& text) {
  const double v = require_real(key, text);
  if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("--" + key + " must be positive, got '" + text + "'");
  return v;
}

inline TRange parse_t_range(const std::string& text) {
  const auto first = text.find(':');
  const auto second = first == std::string::npos ? std::string::npos : text.find(':', first + 1);
  if (second == std::string::npos) throw UsageError("malformed --t-range '" + text + "' (expected min:max:count)");
  const auto lo = parse_real(std::string_view(text).substr(0, first));
  const auto hi = parse_real(std::string_view(text).substr(first + 1, second - first - 1));
  const auto n = parse_integer(std::string_view(text).substr(second + 1));
  if (!lo || !hi || !n || !std::isfinite(*lo) || !std::isfinite(*hi)) {
    throw UsageError("malformed --t-range '" + text + "' (expected min:max:count)");
  }
  if (!(*lo < *hi)) throw UsageError("--t-range '" + text + "': t_min must be below t_max");
  if (*n < 5) throw UsageError("--t-range '" + text + "': count must be at least 5");
  return {*lo, *hi, static_cast<std::size_t>(*n)};
}

// Joins "--key value" into "--key=value" so values such as "-inf" or
// "-1:2:31" are never mistaken for flags.
inline std::vector<std::string> glue_values(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& arg = args[i];
    const bool takes_value = arg.rfind("--", 0) == 0 && arg.find('=') == std::string::npos &&
                             (arg == "--config" ||
                              std::find(value_keys().begin(), value_keys().end(), arg.substr(2)) != value_keys().end());
    if (takes_value && i + 1 < args.size()) {
      out.push_back(arg + "=" + args[i + 1]);
      ++i;
    } else {
      out.push_back(arg);
    }
  }
  return out;
}

inline std::string json_scalar(const std::string& key, const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number()) return format_shortest(value.get<double>());
  if (key == "format" && value.is_array()) {
    std::string joined;
    for (const auto& item : value) {
      if (!item.is_string()) throw UsageError("config key 'format' must list strings");
      joined += (joined.empty() ? "" : ",") + item.get<std::string>();
    }
    return joined;
  }
  throw UsageError("config key '" + key + "' must be a string or number");
}

inline RunConfig build(Mode mode, const std::map<std::string, std::string>& raw) {
  RunConfig cfg;
  cfg.mode = mode;
  if (const char* env = std::getenv("EIGENSHIFT_OUT_DIR"); env != nullptr && *env != '\0') cfg.out_dir = env;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };

  if (const auto* v = get("t-range")) cfg.t_range = parse_t_range(*v);
  if (const auto* v = get("a")) {
    cfg.a = require_real("a", *v);
    if (std::isinf(cfg.a) && cfg.a > 0) throw UsageError("--a cannot be +inf");
  }
  if (const auto* v = get("t")) {
    cfg.t = require_real("t", *v);
    if (!std::isfinite(*cfg.t)) throw UsageError("--t must be finite");
  }
  if (const auto* v = get("N")) {
    const auto n = parse_integer(*v);
    if (!n || *n < static_cast<long long>(kMinInterior)) throw UsageError("--N must be an integer >= 16, got '" + *v + "'");
    cfg.n_interior = static_cast<std::size_t>(*n);
  }
  if (const auto* v = get("h-t")) cfg.h_t = require_positive("h-t", *v);
  if (const auto* v = get("tol-norm")) cfg.tol.norm = require_positive("tol-norm", *v);
  if (const auto* v = get("tol-res")) cfg.tol.res = require_positive("tol-res", *v);
  if (const auto* v = get("tol-trunc")) cfg.tol.trunc = require_positive("tol-trunc", *v);
  if (const auto* v = get("tol-sign")) cfg.tol.sign = require_positive("tol-sign", *v);
  if (const auto* v = get("tol-match")) cfg.tol.match = require_positive("tol-match", *v);
  if (const auto* v = get("tol-orth")) cfg.tol.orth = require_positive("tol-orth", *v);
  if (const auto* v = get("tol-thm")) cfg.tol.thm = require_positive("tol-thm", *v);
  if (const auto* v = get("out-dir")) {
    if (v->empty()) throw UsageError("--out-dir must not be empty");
    cfg.out_dir = *v;
  }
  if (const auto* v = get("format")) {
    cfg.formats.clear();
    std::string_view rest = *v;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = std::string(trim(rest.substr(0, comma)));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      if (item != "csv" && item != "json" && item != "plot") throw UsageError("unknown format '" + item + "'");
      cfg.formats.insert(item);
    }
  }
  if (const auto* v = get("threads")) {
    const auto n = parse_integer(*v);
    if (!n || *n < 1) throw UsageError("--threads must be a positive integer, got '" + *v + "'");
    cfg.threads = static_cast<unsigned>(*n);
  }
  if (const auto* v = get("potential")) cfg.potential = parse_potential(*v).label();

  const bool needs_potential = mode != Mode::verify;
  if (needs_potential && cfg.potential.empty()) throw UsageError("--potential is required for this mode");
  if ((mode == Mode::solve || mode == Mode::sensitivity) && !cfg.t) throw UsageError("--t is required for this mode");
  if (mode == Mode::sweep && !cfg.t_range) throw UsageError("--t-range is required for sweep");
  if (cfg.t && !(cfg.a < *cfg.t)) throw UsageError("need a < t");
  if (cfg.t_range && !(cfg.a < cfg.t_range->min)) throw UsageError("need a < t_min");
  if (mode == Mode::verify && !cfg.potential.empty() && !cfg.t) throw UsageError("--t is required with --potential in verify");
  return cfg;
}

}  // namespace detail

/// Parses ["mode", flags...]. Flags override keys of the optional flat JSON
/// --config file; unknown flags or keys raise UsageError.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  if (args.empty()) throw UsageError("missing mode (solve, sensitivity, sweep or verify)");
  std::optional<Mode> mode;
  std::vector<std::string> rest(args.begin(), args.end());
  if (!rest.empty() && rest.front().rfind("-", 0) != 0) {
    mode = detail::parse_mode(rest.front());
    rest.erase(rest.begin());
  }

  CLI::App app{"eigenshift"};
  app.allow_extras(false);
  std::map<std::string, std::string> values;
  std::string config_path;
  app.add_option("--config", config_path, "flat JSON file of flag values");
  for (const auto& key : detail::value_keys()) app.add_option("--" + key, values[key]);
  try {
    auto glued = detail::glue_values(rest);
    std::reverse(glued.begin(), glued.end());
    app.parse(glued);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  std::map<std::string, std::string> raw;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot read config file '" + config_path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file '" + config_path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a flat JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "mode") {
        if (!mode) mode = detail::parse_mode(detail::json_scalar(key, value));
        continue;
      }
      if (std::find(detail::value_keys().begin(), detail::value_keys().end(), key) == detail::value_keys().end()) {
        throw UsageError("unknown config key '" + key + "'");
      }
      raw[key] = detail::json_scalar(key, value);
    }
  }
  for (const auto& key : detail::value_keys()) {
    if (app.get_option("--" + key)->count() > 0) raw[key] = values[key];
  }
  if (!mode) throw UsageError("missing mode (solve, sensitivity, sweep or verify)");
  return detail::build(*mode, raw);
}

namespace detail {

inline SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  if (cfg.tol.norm) o.tol_norm = *cfg.tol.norm;
  if (cfg.tol.res) o.tol_res = *cfg.tol.res;
  if (cfg.tol.trunc) o.tol_trunc = *cfg.tol.trunc;
  return o;
}

inline SensitivityOptions sensitivity_options(const RunConfig& cfg) {
  SensitivityOptions o;
  if (cfg.tol.sign) o.tol_sign = *cfg.tol.sign;
  o.h_t = cfg.h_t;
  o.threads = cfg.threads;
  return o;
}

inline bool wants(const RunConfig& cfg, const char* format) { return cfg.formats.count(format) > 0; }

template <typename Writer>
void emit(const std::filesystem::path& path, Writer&& writer) {
  auto os = io::open_output(path);
  writer(os);
}

inline void write_ground_state(const RunConfig& cfg, const GroundState& gs) {
  if (wants(cfg, "csv")) emit(cfg.out_dir / "ground_state.csv", [&](std::ostream& os) { io::write_ground_state_csv(os, gs); });
  if (wants(cfg, "json")) io::write_json(cfg.out_dir / "ground_state.json", io::ground_state_json(gs));
  if (wants(cfg, "plot")) {
    std::vector<double> xs(gs.u.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = gs.grid.x(i);
    emit(cfg.out_dir / "ground_state.dat", [&](std::ostream& os) { io::write_plot(os, xs, gs.u); });
  }
}

inline int run_solve(const RunConfig& cfg, std::ostream& out) {
  const PotentialSpec spec = parse_potential(cfg.potential);
  const GroundState gs = solve_ground_state(spec, cfg.a, *cfg.t, cfg.n_interior, solver_options(cfg));
  write_ground_state(cfg, gs);
  out << "lambda = " << format_shortest(gs.lambda) << "\n";
  out << "flux_a = " << format_shortest(gs.flux_a) << "  flux_t = " << format_shortest(gs.flux_t) << "\n";
  out << "a_eff = " << format_shortest(gs.domain.a_eff) << "  residual = " << format_shortest(gs.residual) << "\n";
  return 0;
}

inline int run_sensitivity(const RunConfig& cfg, std::ostream& out) {
  const PotentialSpec spec = parse_potential(cfg.potential);
  const SolverOptions sopt = solver_options(cfg);
  const GroundState gs = solve_ground_state(spec, cfg.a, *cfg.t, cfg.n_interior, sopt);
  const Sensitivity s = compute_sensitivity(gs, spec, sopt, sensitivity_options(cfg));
  write_ground_state(cfg, gs);
  if (wants(cfg, "json")) io::write_json(cfg.out_dir / "sensitivity.json", io::sensitivity_json(s));
  if (wants(cfg, "csv")) emit(cfg.out_dir / "u_dot.csv", [&](std::ostream& os) { io::write_u_dot_csv(os, gs.grid, s.u_dot); });
  if (wants(cfg, "plot")) {
    std::vector<double> xs(s.u_dot.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = gs.grid.x(i);
    emit(cfg.out_dir / "u_dot.dat", [&](std::ostream& os) { io::write_plot(os, xs, s.u_dot); });
  }
  out << "lambda = " << format_shortest(s.lambda) << "\n";
  out << "lambda_dot (flux) = " << format_shortest(s.lambda_dot_flux)
      << "  (moment) = " << format_shortest(s.lambda_dot_integral) << "  (fd) = " << format_shortest(s.lambda_dot_fd) << "\n";
  out << "lambda_ddot = " << format_shortest(s.lambda_ddot) << "  (fd) = " << format_shortest(s.lambda_ddot_fd) << "\n";
  out << "t0 = " << format_shortest(s.t0) << "  orth_residual = " << format_shortest(s.orth_residual) << "\n";
  return 0;
}

inline int run_sweep(const RunConfig& cfg, std::ostream& out) {
  const PotentialSpec spec = parse_potential(cfg.potential);
  SweepOptions opt;
  opt.solver = solver_options(cfg);
  opt.threads = cfg.threads;
  if (cfg.tol.thm) opt.tol_thm_factor = *cfg.tol.thm;
  const TRange r = *cfg.t_range;
  const SweepResult sw = sweep(spec, cfg.a, r.min, r.max, r.count, cfg.n_interior, opt);
  if (wants(cfg, "csv")) emit(cfg.out_dir / "sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, sw); });
  if (wants(cfg, "json")) io::write_json(cfg.out_dir / "verdict.json", io::verdict_json(sw.verdict));
  if (wants(cfg, "plot")) {
    emit(cfg.out_dir / "sweep_lambda.dat", [&](std::ostream& os) { io::write_plot(os, sw.ts, sw.lambdas); });
    emit(cfg.out_dir / "sweep_lambda_dot.dat", [&](std::ostream& os) { io::write_plot(os, sw.ts, sw.lambda_dots); });
  }
  const auto& v = sw.verdict;
  out << "monotone_decreasing = " << v.monotone_decreasing << "  convex_in_t = " << v.convex_in_t
      << "  concave_in_t = " << v.concave_in_t << "  tol_thm = " << format_shortest(v.tol_thm) << "\n";
  return v.passed() ? 0 : 1;
}

inline int run_verify(const RunConfig& cfg, std::ostream& out) {
  VerifyOptions opt;
  opt.n_interior = cfg.n_interior;
  opt.threads = cfg.threads;
  opt.solver = solver_options(cfg);
  opt.sensitivity = sensitivity_options(cfg);
  opt.sensitivity.threads = 1;
  if (cfg.tol.match) opt.tol.match = *cfg.tol.match;
  if (cfg.tol.orth) opt.tol.orth = *cfg.tol.orth;
  if (cfg.tol.norm) opt.tol.norm = *cfg.tol.norm;
  if (cfg.tol.thm) opt.tol_thm_factor = *cfg.tol.thm;
  if (!cfg.potential.empty()) {
    const PotentialSpec spec = parse_potential(cfg.potential);
    BatteryMember m{"custom", spec, cfg.a, *cfg.t, *cfg.t, *cfg.t + 1.0};
    if (cfg.t_range) {
      m.sweep_min = cfg.t_range->min;
      m.sweep_max = cfg.t_range->max;
      opt.sweep_points = cfg.t_range->count;
    }
    opt.extra_members.push_back(m);
  }
  const VerifyReport report = run_verify_battery(opt);
  const std::string text = render_report(report);
  emit(cfg.out_dir / "verify_report.txt", [&](std::ostream& os) { os << text; });
  if (wants(cfg, "json")) io::write_json(cfg.out_dir / "verify_report.json", report_json(report));
  out << text;
  return report.all_passed() ? 0 : 1;
}

}  // namespace detail

inline int run(const RunConfig& cfg, std::ostream& out) {
  switch (cfg.mode) {
    case Mode::solve: return detail::run_solve(cfg, out);
    case Mode::sensitivity: return detail::run_sensitivity(cfg, out);
    case Mode::sweep: return detail::run_sweep(cfg, out);
    case Mode::verify: return detail::run_verify(cfg, out);
  }
  return 2;
}

/// Full CLI entry: parse, run, map errors to exit codes.
inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (!args.empty() && (args.front() == "--help" || args.front() == "-h" || args.front() == "help")) {
    out << "usage: eigenshift <solve|sensitivity|sweep|verify> [--potential family:k=v,...] [--a A|-inf]\n"
           "       [--t T] [--t-range min:max:count] [--N n] [--h-t h] [--tol-norm|res|trunc|sign|match|orth|thm x]\n"
           "       [--out-dir dir] [--format csv,json,plot] [--threads n] [--config file.json]\n";
    return 0;
  }
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }
  try {
    return run(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace eigenshift::cli
