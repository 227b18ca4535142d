#pragma once

// Potential families V(x) with derivatives, convexity classification and the
// confinement test needed for half-line problems.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "format.hpp"

namespace eigenshift {

enum class Family { affine, quadratic, abs_shift, exp_growth, neg_quadratic, neg_abs, tabulated };

enum class Convexity { convex, concave, affine, indeterminate };

inline std::string_view to_string(Convexity c) {
  switch (c) {
    case Convexity::convex: return "convex";
    case Convexity::concave: return "concave";
    case Convexity::affine: return "affine";
    case Convexity::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

/// Sampled potential, linearly interpolated between strictly increasing abscissae.
struct Table {
  std::vector<double> x;
  std::vector<double> v;
};

namespace detail {

struct FamilyInfo {
  Family family;
  std::string_view name;
  std::vector<std::string_view> keys;
  std::vector<double> defaults;
};

inline const std::vector<FamilyInfo>& family_table() {
  static const std::vector<FamilyInfo> table = {
      {Family::affine, "affine", {"c0", "c1"}, {0.0, 0.0}},
      {Family::quadratic, "quadratic", {"c0", "c1", "c2"}, {0.0, 0.0, 0.0}},
      {Family::abs_shift, "abs_shift", {"c0", "scale", "shift"}, {0.0, 1.0, 0.0}},
      {Family::exp_growth, "exp_growth", {"c0", "c1", "amp", "rate"}, {0.0, 0.0, 1.0, 1.0}},
      {Family::neg_quadratic, "neg_quadratic", {"c0", "c1", "scale"}, {0.0, 0.0, 1.0}},
      {Family::neg_abs, "neg_abs", {"c0", "c1", "scale", "shift"}, {0.0, 0.0, 1.0, 0.0}},
      {Family::tabulated, "tabulated", {"file"}, {}},
  };
  return table;
}

inline const FamilyInfo& family_info(Family f) {
  for (const auto& info : family_table()) {
    if (info.family == f) return info;
  }
  throw DomainError("unknown potential family");
}

inline Convexity convexity_from_slopes(std::span<const double> x, std::span<const double> v) {
  double vmax = 0.0;
  for (double value : v) vmax = std::max(vmax, std::abs(value));
  double min_dx = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) min_dx = std::min(min_dx, x[i] - x[i - 1]);
  const double tol = 1e-10 * (1.0 + vmax) / min_dx;
  bool convex = true;
  bool concave = true;
  for (std::size_t i = 2; i < x.size(); ++i) {
    const double left = (v[i - 1] - v[i - 2]) / (x[i - 1] - x[i - 2]);
    const double right = (v[i] - v[i - 1]) / (x[i] - x[i - 1]);
    const double jump = right - left;
    if (jump < -tol) convex = false;
    if (jump > tol) concave = false;
  }
  if (convex && concave) return Convexity::affine;
  if (convex) return Convexity::convex;
  if (concave) return Convexity::concave;
  return Convexity::indeterminate;
}

}  // namespace detail

/// An immutable potential: family tag, coefficients in the family's key
/// order, declared convexity and a canonical label.
class PotentialSpec {
 public:
  static PotentialSpec affine(double c0, double c1) {
    return PotentialSpec(Family::affine, {c0, c1});
  }
  static PotentialSpec quadratic(double c0, double c1, double c2) {
    return PotentialSpec(Family::quadratic, {c0, c1, c2});
  }
  static PotentialSpec abs_shift(double shift, double scale = 1.0, double c0 = 0.0) {
    return PotentialSpec(Family::abs_shift, {c0, scale, shift});
  }
  static PotentialSpec exp_growth(double amp, double rate, double c0 = 0.0, double c1 = 0.0) {
    return PotentialSpec(Family::exp_growth, {c0, c1, amp, rate});
  }
  static PotentialSpec neg_quadratic(double scale, double c0 = 0.0, double c1 = 0.0) {
    return PotentialSpec(Family::neg_quadratic, {c0, c1, scale});
  }
  static PotentialSpec neg_abs(double shift, double scale = 1.0, double c0 = 0.0, double c1 = 0.0) {
    return PotentialSpec(Family::neg_abs, {c0, c1, scale, shift});
  }
  static PotentialSpec tabulated(Table table, std::string source) {
    return PotentialSpec(std::move(table), std::move(source));
  }

  /// Builds a spec from coefficients listed in the family's key order.
  static PotentialSpec from_params(Family family, std::vector<double> params) {
    return PotentialSpec(family, std::move(params));
  }

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  Convexity convexity() const { return convexity_; }
  const std::string& label() const { return label_; }
  const Table* table() const { return table_.get(); }

  double param(std::size_t i) const { return params_.at(i); }

 private:
  PotentialSpec(Family family, std::vector<double> params) : family_(family), params_(std::move(params)) {
    const auto& info = detail::family_info(family_);
    if (family_ == Family::tabulated) throw DomainError("tabulated potentials need a table");
    if (params_.size() != info.keys.size()) throw DomainError("wrong number of parameters for " + std::string(info.name));
    for (double p : params_) {
      if (!std::isfinite(p)) throw DomainError("potential parameters must be finite");
    }
    convexity_ = declared_convexity();
    label_ = std::string(info.name) + ":";
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (i) label_ += ",";
      label_ += std::string(info.keys[i]) + "=" + format_shortest(params_[i]);
    }
  }

  PotentialSpec(Table table, std::string source) : family_(Family::tabulated) {
    if (table.x.size() < 2 || table.x.size() != table.v.size()) {
      throw DomainError("tabulated potential needs at least two (x,V) rows");
    }
    for (std::size_t i = 0; i < table.x.size(); ++i) {
      if (!std::isfinite(table.x[i]) || !std::isfinite(table.v[i])) throw DomainError("tabulated potential has non-finite entries");
      if (i > 0 && !(table.x[i] > table.x[i - 1])) throw DomainError("tabulated abscissae must be strictly increasing");
    }
    convexity_ = detail::convexity_from_slopes(table.x, table.v);
    label_ = "tabulated:file=" + source;
    table_ = std::make_shared<const Table>(std::move(table));
  }

  Convexity declared_convexity() const {
    const auto& p = params_;
    switch (family_) {
      case Family::affine: return Convexity::affine;
      case Family::quadratic:
        return p[2] > 0 ? Convexity::convex : (p[2] < 0 ? Convexity::concave : Convexity::affine);
      case Family::abs_shift:
        if (p[1] < 0) throw DomainError("abs_shift requires scale >= 0 (use neg_abs)");
        return p[1] > 0 ? Convexity::convex : Convexity::affine;
      case Family::exp_growth:
        if (p[2] == 0.0 || p[3] == 0.0) return Convexity::affine;
        return p[2] > 0 ? Convexity::convex : Convexity::concave;
      case Family::neg_quadratic:
        if (!(p[2] > 0)) throw DomainError("neg_quadratic requires scale > 0");
        return Convexity::concave;
      case Family::neg_abs:
        if (!(p[2] > 0)) throw DomainError("neg_abs requires scale > 0");
        return Convexity::concave;
      case Family::tabulated: break;
    }
    return Convexity::indeterminate;
  }

  Family family_;
  std::vector<double> params_;
  Convexity convexity_ = Convexity::indeterminate;
  std::string label_;
  std::shared_ptr<const Table> table_;
};

namespace detail {

// Index s of the segment [x_s, x_{s+1}] owning x under the left-limit
// convention: an interior table node belongs to the segment on its left.
inline std::size_t table_segment(const Table& t, double x) {
  if (!(x >= t.x.front() && x <= t.x.back())) {
    throw RangeError("x = " + format_shortest(x) + " outside tabulated range [" + format_shortest(t.x.front()) + ", " +
                     format_shortest(t.x.back()) + "]");
  }
  const auto k = static_cast<std::size_t>(std::lower_bound(t.x.begin(), t.x.end(), x) - t.x.begin());
  return k == 0 ? 0 : k - 1;
}

}  // namespace detail

inline double eval_V(const PotentialSpec& spec, double x) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case Family::affine: return p[0] + p[1] * x;
    case Family::quadratic: return p[0] + x * (p[1] + x * p[2]);
    case Family::abs_shift: return p[0] + p[1] * std::abs(x - p[2]);
    case Family::exp_growth: return p[0] + p[1] * x + p[2] * std::exp(p[3] * x);
    case Family::neg_quadratic: return p[0] + p[1] * x - p[2] * x * x;
    case Family::neg_abs: return p[0] + p[1] * x - p[2] * std::abs(x - p[3]);
    case Family::tabulated: {
      const Table& t = *spec.table();
      const std::size_t s = detail::table_segment(t, x);
      const double w = (x - t.x[s]) / (t.x[s + 1] - t.x[s]);
      return (1.0 - w) * t.v[s] + w * t.v[s + 1];
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// V'(x). At kinks the left derivative is returned.
inline double eval_Vprime(const PotentialSpec& spec, double x) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case Family::affine: return p[1];
    case Family::quadratic: return p[1] + 2.0 * p[2] * x;
    case Family::abs_shift: return x <= p[2] ? -p[1] : p[1];
    case Family::exp_growth: return p[1] + p[2] * p[3] * std::exp(p[3] * x);
    case Family::neg_quadratic: return p[1] - 2.0 * p[2] * x;
    case Family::neg_abs: return x <= p[3] ? p[1] + p[2] : p[1] - p[2];
    case Family::tabulated: {
      const Table& t = *spec.table();
      const std::size_t s = detail::table_segment(t, x);
      return (t.v[s + 1] - t.v[s]) / (t.x[s + 1] - t.x[s]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Points where V' jumps, sorted.
inline std::vector<double> breakpoints(const PotentialSpec& spec) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case Family::abs_shift:
      if (p[1] != 0.0) return {p[2]};
      return {};
    case Family::neg_abs: return {p[3]};
    case Family::tabulated: {
      const Table& t = *spec.table();
      return {t.x.begin() + 1, t.x.end() - 1};
    }
    default: return {};
  }
}

/// Tolerance on sampled second differences: 1e-10 * (1 + max|V| on the probe range).
inline Convexity classify_convexity(const PotentialSpec& spec, double lo, double hi, int n_probe) {
  if (n_probe < 3) throw DomainError("classify_convexity needs n_probe >= 3");
  if (!(lo < hi)) throw DomainError("classify_convexity needs lo < hi");
  if (spec.family() == Family::tabulated) {
    const Table& t = *spec.table();
    return detail::convexity_from_slopes(t.x, t.v);
  }
  std::vector<double> v(static_cast<std::size_t>(n_probe));
  double vmax = 0.0;
  for (int j = 0; j < n_probe; ++j) {
    const double x = lo + (hi - lo) * j / (n_probe - 1);
    v[static_cast<std::size_t>(j)] = eval_V(spec, x);
    vmax = std::max(vmax, std::abs(v[static_cast<std::size_t>(j)]));
  }
  const double tol = 1e-10 * (1.0 + vmax);
  bool convex = true;
  bool concave = true;
  for (std::size_t j = 1; j + 1 < v.size(); ++j) {
    const double d2 = v[j - 1] - 2.0 * v[j] + v[j + 1];
    if (d2 < -tol) convex = false;
    if (d2 > tol) concave = false;
  }
  if (convex && concave) return Convexity::affine;
  if (convex) return Convexity::convex;
  if (concave) return Convexity::concave;
  return Convexity::indeterminate;
}

/// True when a is finite, or when a = -inf and V grows without bound to the
/// left: V(-2^k) must increase for k = 10..30 and end above 1e6.
inline bool validate_confinement(const PotentialSpec& spec, double a) {
  if (std::isfinite(a)) return true;
  if (!(a < 0)) return false;
  if (spec.family() == Family::tabulated) return false;
  constexpr int kMaxDoublings = 30;
  constexpr int kMonotoneFrom = 10;
  constexpr double kBound = 1e6;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kMaxDoublings; ++k) {
    const double v = eval_V(spec, -std::ldexp(1.0, k));
    if (std::isnan(v)) return false;
    if (k >= kMonotoneFrom && !(v > prev)) return false;
    if (v == std::numeric_limits<double>::infinity()) return true;
    prev = v;
  }
  return prev > kBound;
}

/// Reads a CSV with header "x,V" and strictly increasing x.
inline Table load_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RangeError("cannot open potential table '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "x,V") {
    throw RangeError("potential table '" + path + "' must start with header \"x,V\"");
  }
  Table table;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) throw RangeError(path + ":" + std::to_string(row) + ": expected x,V");
    const auto x = parse_real(body.substr(0, comma));
    const auto v = parse_real(body.substr(comma + 1));
    if (!x || !v) throw RangeError(path + ":" + std::to_string(row) + ": malformed number");
    table.x.push_back(*x);
    table.v.push_back(*v);
  }
  return table;
}

/// Parses "family:key=value,key=value". Missing keys take family defaults;
/// unknown keys and malformed values throw UsageError naming the token.
inline PotentialSpec parse_potential(std::string_view text) {
  text = trim(text);
  const auto colon = text.find(':');
  const auto name = trim(text.substr(0, colon));
  const detail::FamilyInfo* info = nullptr;
  for (const auto& candidate : detail::family_table()) {
    if (candidate.name == name) info = &candidate;
  }
  if (info == nullptr) throw UsageError("unknown potential family '" + std::string(name) + "'");

  std::vector<double> params = info->defaults;
  std::string file;
  std::vector<bool> seen(info->keys.size(), false);
  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  while (!trim(rest).empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw UsageError("malformed potential parameter '" + std::string(item) + "'");
    const auto key = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    const auto it = std::find(info->keys.begin(), info->keys.end(), key);
    if (it == info->keys.end()) {
      throw UsageError("unknown key '" + std::string(key) + "' for potential family '" + std::string(info->name) + "'");
    }
    const auto idx = static_cast<std::size_t>(it - info->keys.begin());
    if (seen[idx]) throw UsageError("duplicate potential key '" + std::string(key) + "'");
    seen[idx] = true;
    if (info->family == Family::tabulated) {
      file = std::string(value);
      continue;
    }
    const auto parsed = parse_real(value);
    if (!parsed || !std::isfinite(*parsed)) throw UsageError("malformed value '" + std::string(value) + "' for key '" + std::string(key) + "'");
    params[idx] = *parsed;
  }

  try {
    if (info->family == Family::tabulated) {
      if (file.empty()) throw UsageError("tabulated potential requires file=path");
      return PotentialSpec::tabulated(load_table_csv(file), file);
    }
    return PotentialSpec::from_params(info->family, std::move(params));
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(std::string("invalid potential '") + std::string(text) + "': " + e.what());
  }
}

}  // namespace eigenshift
