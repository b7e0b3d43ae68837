#include "polycal/scenario.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "polycal/kernel.hpp"
#include "polycal/scalar_field.hpp"

namespace polycal {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

const char* const kExactKeys[] = {
    "problem.n",          "problem.m",           "problem.gamma",
    "problem.source",     "problem.mode",        "problem.allow_invalid",
    "quadrature.rel_tol", "quadrature.max_level", "quadrature.tail_eps",
    "verify.points",      "verify.times",        "verify.initial_times",
    "verify.h_x",         "verify.h_t",          "verify.residual_rel_tol",
    "solve.points",       "solve.times",
    "fd.length",          "fd.nodes",            "fd.dt",
    "fd.t_final",         "compare.far",         "compare.orders",
    "kernel.gamma",       "kernel.x",            "kernel.t",
    "kernel.samples",     "kernel.s_max",        "output.dir",
};

bool known_key(const std::string& key) {
  for (const char* k : kExactKeys)
    if (key == k) return true;
  if (key.starts_with("problem.phi.")) {
    const std::string suffix = key.substr(12);
    return !suffix.empty() &&
           std::all_of(suffix.begin(), suffix.end(),
                       [](unsigned char c) { return std::isdigit(c); });
  }
  if (key.starts_with("verify.tolerance.")) {
    const std::string name = key.substr(17);
    for (const std::string& known : property_names())
      if (known == name) return true;
  }
  return false;
}

std::uint64_t fnv1a_bytes(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string output_path(const std::string& dir, const char* name) {
  if (dir.empty()) return name;
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path + " for writing");
  const std::size_t wrote = std::fwrite(text.data(), 1, text.size(), f);
  const int rc = std::fclose(f);
  if (wrote != text.size() || rc != 0) throw std::runtime_error("short write to " + path);
}

const char* mode_name(SolveMode mode) {
  switch (mode) {
    case SolveMode::homogeneous: return "homogeneous";
    case SolveMode::inhomogeneous: return "inhomogeneous";
    case SolveMode::combined: return "combined";
  }
  return "unknown";
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, int line, const std::string& message)
    : std::runtime_error(origin + ":" + std::to_string(line) + ": " + message), line_(line) {}

ScenarioConfig ScenarioConfig::defaults() { return parse("", "<defaults>"); }

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw ConfigError(path, 0, "cannot open config file");
  std::string text;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
  std::fclose(f);
  return parse(std::move(text), path);
}

ScenarioConfig ScenarioConfig::parse(std::string text, std::string origin) {
  ScenarioConfig cfg;
  cfg.origin_ = std::move(origin);
  cfg.content_ = std::move(text);

  std::istringstream in(cfg.content_);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const std::size_t hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(cfg.origin_, line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(cfg.origin_, line_no, "missing key before '='");
    if (value.empty()) throw ConfigError(cfg.origin_, line_no, "missing value for '" + key + "'");
    if (!known_key(key)) throw ConfigError(cfg.origin_, line_no, "unrecognized key '" + key + "'");
    if (const auto it = cfg.entries_.find(key); it != cfg.entries_.end())
      throw ConfigError(cfg.origin_, line_no,
                        "duplicate key '" + key + "' (first on line " +
                            std::to_string(it->second.line) + ")");
    cfg.entries_[key] = Entry{value, line_no};
  }
  return cfg;
}

bool ScenarioConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string ScenarioConfig::hash_string() const {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a_bytes(content_)));
  return buf;
}

const ScenarioConfig::Entry* ScenarioConfig::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

int ScenarioConfig::block_line(const std::string& prefix) const {
  int best = 0;
  for (const auto& [key, entry] : entries_)
    if (key.starts_with(prefix) && (best == 0 || entry.line < best)) best = entry.line;
  return best == 0 ? 1 : best;
}

const ScenarioConfig::Entry& ScenarioConfig::require(const std::string& key,
                                                     const std::string& block) const {
  if (const Entry* e = find(key)) return *e;
  throw ConfigError(origin_, block_line(block + "."),
                    block + " block is missing required key '" + key + "'");
}

ConfigError ScenarioConfig::at(const std::string& key, const std::string& message) const {
  if (const Entry* e = find(key)) return ConfigError(origin_, e->line, message);
  const std::size_t dot = key.find('.');
  return ConfigError(origin_, block_line(key.substr(0, dot + 1)), message);
}

namespace {

double parse_number(const std::string& origin, const ScenarioConfig::Entry& entry,
                    const std::string& key, const std::string& token) {
  const std::string text = trim(token);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
    throw ConfigError(origin, entry.line,
                      "expected a number for '" + key + "', got '" + text + "'");
  return v;
}

int parse_int(const std::string& origin, const ScenarioConfig::Entry& entry,
              const std::string& key) {
  const double v = parse_number(origin, entry, key, entry.value);
  const double r = std::nearbyint(v);
  if (std::abs(v - r) > 1e-9 || std::abs(r) > 1e9)
    throw ConfigError(origin, entry.line, "expected an integer for '" + key + "'");
  return static_cast<int>(r);
}

}  // namespace

double ScenarioConfig::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  return e == nullptr ? fallback : parse_number(origin_, *e, key, e->value);
}

int ScenarioConfig::get_int(const std::string& key, int fallback) const {
  const Entry* e = find(key);
  return e == nullptr ? fallback : parse_int(origin_, *e, key);
}

std::vector<double> ScenarioConfig::get_numbers(const std::string& key) const {
  const Entry* e = find(key);
  std::vector<double> out;
  if (e == nullptr) return out;
  for (const std::string& token : split_ws(e->value))
    out.push_back(parse_number(origin_, *e, key, token));
  if (out.empty()) throw ConfigError(origin_, e->line, "'" + key + "' lists no values");
  return out;
}

namespace {

ScalarField parse_axis_factor(const std::string& origin, const ScenarioConfig::Entry& entry,
                              const std::string& key, const std::string& spec) {
  const std::vector<std::string> tokens = split_ws(spec);
  if (tokens.empty()) throw ConfigError(origin, entry.line, key + ": empty axis factor");
  const std::string& id = tokens[0];
  const auto arg = [&](std::size_t i) {
    return parse_number(origin, entry, key, tokens[i]);
  };
  if (id == "constant") {
    if (tokens.size() != 2)
      throw ConfigError(origin, entry.line, key + ": constant takes one parameter");
    return make_gauss_poly_1d({arg(1)}, 0.0);
  }
  if (id == "gaussian") {
    if (tokens.size() != 2)
      throw ConfigError(origin, entry.line, key + ": gaussian takes one parameter");
    const double a = arg(1);
    if (a < 0.0)
      throw ConfigError(origin, entry.line, key + ": gaussian rate must be >= 0");
    return make_gauss_poly_1d({1.0}, a);
  }
  if (id == "monomial") {
    if (tokens.size() != 2)
      throw ConfigError(origin, entry.line, key + ": monomial takes one parameter");
    const double b = arg(1);
    const int beta = static_cast<int>(std::nearbyint(b));
    if (std::abs(b - beta) > 1e-12 || beta < 0 || beta > 8)
      throw ConfigError(origin, entry.line, key + ": monomial exponent must be an integer in [0, 8]");
    std::vector<double> coeffs(static_cast<std::size_t>(beta) + 1, 0.0);
    coeffs.back() = 1.0;
    return make_gauss_poly_1d(coeffs, 0.0);
  }
  if (id == "gauss_poly") {
    if (tokens.size() < 3)
      throw ConfigError(origin, entry.line,
                        key + ": gauss_poly needs a rate and at least one coefficient");
    const double a = arg(1);
    if (a < 0.0)
      throw ConfigError(origin, entry.line, key + ": gauss_poly rate must be >= 0");
    std::vector<double> coeffs;
    for (std::size_t i = 2; i < tokens.size(); ++i) coeffs.push_back(arg(i));
    return make_gauss_poly_1d(coeffs, a);
  }
  throw ConfigError(origin, entry.line,
                    key + ": unknown field id '" + id +
                        "' (expected constant, gaussian, monomial, or gauss_poly)");
}

ScalarField parse_field(const std::string& origin, const ScenarioConfig::Entry& entry,
                        const std::string& key, int n) {
  const std::vector<std::string> specs = split_on(entry.value, '|');
  if (static_cast<int>(specs.size()) != n)
    throw ConfigError(origin, entry.line,
                      key + ": expected " + std::to_string(n) +
                          " axis factor(s) separated by '|', got " +
                          std::to_string(specs.size()));
  std::vector<ScalarField> axes;
  axes.reserve(specs.size());
  for (const std::string& spec : specs)
    axes.push_back(parse_axis_factor(origin, entry, key, spec));
  if (n == 1) return axes[0];
  return make_product(std::move(axes));
}

SourceFn parse_source(const std::string& origin, const ScenarioConfig::Entry& entry, int n) {
  const std::vector<std::string> tokens = split_ws(entry.value);
  const std::string& id = tokens.empty() ? entry.value : tokens[0];
  const auto arg = [&](std::size_t i) {
    return parse_number(origin, entry, "problem.source", tokens[i]);
  };
  if (id == "constant") {
    if (tokens.size() != 2)
      throw ConfigError(origin, entry.line, "problem.source: constant takes one parameter");
    const double c = arg(1);
    return [c](std::span<const double>, double) { return c; };
  }
  if (id == "monomial" || id == "monomial_decay") {
    if (n != 1)
      throw ConfigError(origin, entry.line,
                        "problem.source: '" + id + "' needs problem.n = 1");
    const std::size_t want = id == "monomial" ? 2 : 3;
    if (tokens.size() != want)
      throw ConfigError(origin, entry.line,
                        "problem.source: '" + id + "' takes " + std::to_string(want - 1) +
                            " parameter(s)");
    const double b = arg(1);
    const int beta = static_cast<int>(std::nearbyint(b));
    if (std::abs(b - beta) > 1e-12 || beta < 0 || beta > 8)
      throw ConfigError(origin, entry.line,
                        "problem.source: exponent must be an integer in [0, 8]");
    const double rate = want == 3 ? arg(2) : 0.0;
    return [beta, rate](std::span<const double> x, double t) {
      return ipow(x[0] * x[0], beta) * std::exp(-rate * t);
    };
  }
  throw ConfigError(origin, entry.line,
                    "problem.source: unknown source id '" + id +
                        "' (expected constant, monomial, or monomial_decay)");
}

}  // namespace

ProblemSpec ScenarioConfig::make_problem() const {
  const int n = get_int("problem.n", 1);
  if (n < 1 || n > 3)
    throw ConfigError(origin_, find("problem.n") ? find("problem.n")->line : block_line("problem."),
                      "problem.n must be 1, 2, or 3");
  const int m = get_int("problem.m", 1);
  if (m < 1 || m > 3)
    throw ConfigError(origin_, find("problem.m") ? find("problem.m")->line : block_line("problem."),
                      "problem.m must be 1, 2, or 3");

  const Entry& gamma_entry = require("problem.gamma", "problem");
  const std::vector<double> gamma = get_numbers("problem.gamma");
  if (static_cast<int>(gamma.size()) != n)
    throw ConfigError(origin_, gamma_entry.line,
                      "problem.gamma needs exactly " + std::to_string(n) + " value(s), got " +
                          std::to_string(gamma.size()));
  for (double g : gamma)
    if (!(std::abs(g) < 0.5))
      throw ConfigError(origin_, gamma_entry.line,
                        "problem.gamma entries must lie strictly inside (-1/2, 1/2)");

  std::vector<ScalarField> phis;
  phis.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const std::string key = "problem.phi." + std::to_string(j);
    const Entry* e = find(key);
    phis.push_back(e ? parse_field(origin_, *e, key, n) : make_constant(n, 0.0));
  }
  for (const auto& [key, e] : entries_)
    if (key.starts_with("problem.phi.")) {
      const int j = std::atoi(key.c_str() + 12);
      if (j >= m)
        throw ConfigError(origin_, e.line,
                          "'" + key + "' needs problem.m > " + std::to_string(j));
    }

  SourceFn source;
  if (const Entry* se = find("problem.source")) source = parse_source(origin_, *se, n);

  try {
    return ProblemSpec(n, m, GammaVec(gamma, true), std::move(phis), std::move(source));
  } catch (const std::exception& e) {
    throw ConfigError(origin_, block_line("problem."), e.what());
  }
}

SolveMode ScenarioConfig::solve_mode() const {
  const Entry* e = find("problem.mode");
  const bool has_source = find("problem.source") != nullptr;
  const std::string value = e ? e->value : (has_source ? "combined" : "homogeneous");
  SolveMode mode;
  if (value == "homogeneous") {
    mode = SolveMode::homogeneous;
  } else if (value == "inhomogeneous") {
    mode = SolveMode::inhomogeneous;
  } else if (value == "combined") {
    mode = SolveMode::combined;
  } else {
    throw ConfigError(origin_, e->line,
                      "problem.mode must be homogeneous, inhomogeneous, or combined");
  }
  if (mode != SolveMode::homogeneous && !has_source)
    throw ConfigError(origin_, e ? e->line : block_line("problem."),
                      "problem.mode '" + value + "' needs problem.source");
  return mode;
}

bool ScenarioConfig::allow_invalid_data() const {
  const Entry* e = find("problem.allow_invalid");
  if (e == nullptr) return false;
  if (e->value == "true") return true;
  if (e->value == "false") return false;
  throw ConfigError(origin_, e->line, "problem.allow_invalid must be true or false");
}

QuadSpec ScenarioConfig::make_quadrature() const {
  QuadSpec spec = QuadSpec::tail_rule(get_double("quadrature.rel_tol", 1e-9),
                                      get_int("quadrature.max_level", 10),
                                      get_double("quadrature.tail_eps", 1e-12));
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError(origin_, block_line("quadrature."), e.what());
  }
  return spec;
}

namespace {

std::vector<std::vector<double>> parse_point_list(const std::string& origin,
                                                  const ScenarioConfig::Entry& entry,
                                                  const std::string& key, int n,
                                                  bool positive) {
  std::vector<std::vector<double>> points;
  for (const std::string& token : split_ws(entry.value)) {
    const std::vector<std::string> coords = split_on(token, ',');
    if (static_cast<int>(coords.size()) != n)
      throw ConfigError(origin, entry.line,
                        key + ": point '" + token + "' needs " + std::to_string(n) +
                            " comma-separated coordinate(s)");
    std::vector<double> pt;
    for (const std::string& c : coords) {
      const double v = parse_number(origin, entry, key, c);
      if (v < 0.0 || (positive && v == 0.0))
        throw ConfigError(origin, entry.line,
                          key + ": coordinates must be " + (positive ? "> 0" : ">= 0"));
      pt.push_back(v);
    }
    points.push_back(std::move(pt));
  }
  if (points.empty()) throw ConfigError(origin, entry.line, key + ": lists no points");
  return points;
}

std::vector<std::vector<double>> default_points(int n, bool positive) {
  std::vector<double> axis;
  if (positive)
    axis = {0.4, 0.9, 1.6, 2.4};
  else
    axis = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<std::vector<double>> points;
  for (double x : axis) points.push_back(std::vector<double>(static_cast<std::size_t>(n), x));
  if (positive && n > 1)
    for (auto& pt : points)
      for (int j = 1; j < n; ++j) pt[static_cast<std::size_t>(j)] *= 0.8;
  return points;
}

}  // namespace

ProbeSpec ScenarioConfig::make_probes(int n) const {
  ProbeSpec probes;
  if (const Entry* e = find("verify.points"))
    probes.points = parse_point_list(origin_, *e, "verify.points", n, /*positive=*/true);
  else
    probes.points = default_points(n, /*positive=*/true);

  if (const Entry* e = find("verify.times")) {
    probes.times = get_numbers("verify.times");
    for (double t : probes.times)
      if (t <= 0.0) throw ConfigError(origin_, e->line, "verify.times entries must be > 0");
  } else {
    probes.times = {0.3, 0.8, 1.5};
  }

  if (const Entry* e = find("verify.initial_times")) {
    probes.initial_times = get_numbers("verify.initial_times");
    for (double t : probes.initial_times)
      if (t <= 0.0)
        throw ConfigError(origin_, e->line, "verify.initial_times entries must be > 0");
  }
  if (const Entry* e = find("verify.h_x")) {
    probes.h_x = parse_number(origin_, *e, "verify.h_x", e->value);
    if (probes.h_x <= 0.0) throw ConfigError(origin_, e->line, "verify.h_x must be > 0");
  }
  if (const Entry* e = find("verify.h_t")) {
    probes.h_t = parse_number(origin_, *e, "verify.h_t", e->value);
    if (probes.h_t <= 0.0) throw ConfigError(origin_, e->line, "verify.h_t must be > 0");
  }
  if (const Entry* e = find("verify.residual_rel_tol")) {
    probes.residual_rel_tol = parse_number(origin_, *e, "verify.residual_rel_tol", e->value);
    if (probes.residual_rel_tol <= 0.0 || probes.residual_rel_tol >= 1.0)
      throw ConfigError(origin_, e->line, "verify.residual_rel_tol must lie in (0, 1)");
  }
  return probes;
}

Grid1D ScenarioConfig::make_grid() const {
  try {
    return Grid1D(get_double("fd.length", 10.0), get_int("fd.nodes", 2048),
                  get_double("fd.dt", 1e-4), get_double("fd.t_final", 0.5));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(origin_, block_line("fd."), e.what());
  }
}

std::vector<std::vector<double>> ScenarioConfig::solve_points(int n) const {
  if (const Entry* e = find("solve.points"))
    return parse_point_list(origin_, *e, "solve.points", n, /*positive=*/false);
  return default_points(n, /*positive=*/false);
}

std::vector<double> ScenarioConfig::solve_times() const {
  if (const Entry* e = find("solve.times")) {
    const std::vector<double> times = get_numbers("solve.times");
    for (double t : times)
      if (t < 0.0) throw ConfigError(origin_, e->line, "solve.times entries must be >= 0");
    return times;
  }
  return {0.25, 0.5, 0.75, 1.0};
}

std::map<std::string, double> ScenarioConfig::tolerance_overrides() const {
  std::map<std::string, double> out;
  for (const auto& [key, e] : entries_)
    if (key.starts_with("verify.tolerance.")) {
      const double v = parse_number(origin_, e, key, e.value);
      if (v <= 0.0) throw ConfigError(origin_, e.line, "'" + key + "' must be > 0");
      out[key.substr(17)] = v;
    }
  return out;
}

std::string ScenarioConfig::out_dir() const {
  const Entry* e = find("output.dir");
  return e == nullptr ? "" : e->value;
}

std::string ScenarioConfig::compare_far() const {
  const Entry* e = find("compare.far");
  if (e == nullptr) return "zero";
  if (e->value == "zero" || e->value == "exact") return e->value;
  throw ConfigError(origin_, e->line, "compare.far must be zero or exact");
}

bool ScenarioConfig::compare_orders() const {
  const Entry* e = find("compare.orders");
  if (e == nullptr) return true;
  if (e->value == "true") return true;
  if (e->value == "false") return false;
  throw ConfigError(origin_, e->line, "compare.orders must be true or false");
}

double ScenarioConfig::kernel_gamma() const {
  const double g = get_double("kernel.gamma", 0.25);
  if (!(std::abs(g) < 0.5)) {
    const Entry* e = find("kernel.gamma");
    throw ConfigError(origin_, e ? e->line : block_line("kernel."),
                      "kernel.gamma must lie strictly inside (-1/2, 1/2)");
  }
  return g;
}

double ScenarioConfig::kernel_x() const {
  const double x = get_double("kernel.x", 1.0);
  if (x < 0.0) {
    const Entry* e = find("kernel.x");
    throw ConfigError(origin_, e ? e->line : block_line("kernel."), "kernel.x must be >= 0");
  }
  return x;
}

double ScenarioConfig::kernel_t() const {
  const double t = get_double("kernel.t", 0.5);
  if (t <= 0.0) {
    const Entry* e = find("kernel.t");
    throw ConfigError(origin_, e ? e->line : block_line("kernel."), "kernel.t must be > 0");
  }
  return t;
}

int ScenarioConfig::kernel_samples() const {
  const int samples = get_int("kernel.samples", 200);
  if (samples < 2 || samples > 100000) {
    const Entry* e = find("kernel.samples");
    throw ConfigError(origin_, e ? e->line : block_line("kernel."),
                      "kernel.samples must lie in [2, 100000]");
  }
  return samples;
}

double ScenarioConfig::kernel_s_max() const {
  const double s = get_double("kernel.s_max", 0.0);
  if (s < 0.0) {
    const Entry* e = find("kernel.s_max");
    throw ConfigError(origin_, e ? e->line : block_line("kernel."), "kernel.s_max must be >= 0");
  }
  return s;
}

std::string ScenarioConfig::describe_problem() const {
  std::string s = "n=" + std::to_string(get_int("problem.n", 1)) +
                  " m=" + std::to_string(get_int("problem.m", 1));
  if (const Entry* e = find("problem.gamma")) s += " gamma=[" + e->value + "]";
  s += std::string(" mode=") + mode_name(solve_mode());
  const int m = get_int("problem.m", 1);
  for (int j = 0; j < m; ++j) {
    const Entry* e = find("problem.phi." + std::to_string(j));
    s += " phi" + std::to_string(j) + "='" + (e ? e->value : "zero") + "'";
  }
  if (const Entry* e = find("problem.source")) s += " source='" + e->value + "'";
  return s;
}

// --- report helpers -----------------------------------------------------------

std::string suite_report_text(const SuiteReport& report, const SuiteOptions& options,
                              const std::string& config_hash) {
  ordered_json j;
  j["schema_version"] = 1;
  j["command"] = "verify";
  j["config_hash"] = config_hash;
  j["filter"] = options.filter;
  j["jobs"] = options.jobs;
  if (options.seed)
    j["seed"] = *options.seed;
  else
    j["seed"] = nullptr;
  j["summary"] = ordered_json{{"total", report.results.size()}, {"failed", report.failed}};
  ordered_json results = ordered_json::array();
  for (const PropertyResult& r : report.results) {
    ordered_json row;
    row["name"] = r.name;
    row["pass"] = r.pass;
    row["measured"] = r.measured;
    row["tolerance"] = r.tolerance;
    row["detail"] = r.detail;
    results.push_back(std::move(row));
  }
  j["results"] = std::move(results);
  return j.dump(2) + "\n";
}

// --- subcommand drivers ---------------------------------------------------------

int run_solve(const ScenarioConfig& config, const std::string& out_dir) {
  ProblemSpec problem = config.make_problem();
  const int n = problem.n;
  const SolveMode mode = config.solve_mode();
  const QuadSpec quad = config.make_quadrature();
  const bool allow = config.allow_invalid_data();
  const std::string describe = config.describe_problem();
  const auto points = config.solve_points(n);
  const auto times = config.solve_times();

  const std::uint64_t eval0 = quadrature_evaluations();
  const auto t0 = std::chrono::steady_clock::now();
  const SolutionEvaluator u = [&] {
    switch (mode) {
      case SolveMode::inhomogeneous:
        return solve_inhomogeneous(std::move(problem), quad);
      case SolveMode::combined:
        return solve_full(std::move(problem), quad, allow);
      case SolveMode::homogeneous:
      default:
        return solve_homogeneous(std::move(problem), quad, allow);
    }
  }();

  std::string csv;
  for (int j = 0; j < n; ++j) csv += "x_" + std::to_string(j + 1) + ",";
  csv += "t,u\n";
  double umin = std::numeric_limits<double>::infinity();
  double umax = -umin;
  for (double t : times)
    for (const auto& pt : points) {
      const double v = u.value(pt, t);
      umin = std::min(umin, v);
      umax = std::max(umax, v);
      for (double c : pt) csv += fmt17(c) + ",";
      csv += fmt17(t) + "," + fmt17(v) + "\n";
    }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string csv_path = output_path(out_dir, "solve.csv");
  write_text_file(csv_path, csv);

  ordered_json j;
  j["schema_version"] = 1;
  j["command"] = "solve";
  j["config_hash"] = config.hash_string();
  j["problem"] = describe;
  j["grid"] = ordered_json{{"points", points.size()},
                           {"times", times.size()},
                           {"rows", points.size() * times.size()}};
  j["range"] = ordered_json{{"min", umin}, {"max", umax}};
  j["quadrature"] = ordered_json{{"rel_tol", quad.rel_tol},
                                 {"evaluations", quadrature_evaluations() - eval0}};
  j["outputs"] = ordered_json{{"csv", "solve.csv"}};
  j["timing"] = ordered_json{{"wall_seconds", seconds}};
  write_text_file(output_path(out_dir, "solve.json"), j.dump(2) + "\n");

  std::printf("solve: %zu rows -> %s\n", points.size() * times.size(), csv_path.c_str());
  return 0;
}

int run_verify(const ScenarioConfig& config, SuiteOptions options, const std::string& out_dir) {
  for (const auto& [name, tol] : config.tolerance_overrides()) options.tolerances[name] = tol;
  const SuiteReport report = run_property_suite(options);

  ordered_json j = ordered_json::parse(suite_report_text(report, options, config.hash_string()));
  // run-cost statistics live outside the deterministic report body
  j["timing"] = ordered_json{{"wall_seconds", report.seconds},
                             {"quadrature_evaluations", report.evaluations}};
  const std::string path = output_path(out_dir, "verify.json");
  write_text_file(path, j.dump(2) + "\n");

  for (const PropertyResult& r : report.results)
    if (!r.pass)
      std::printf("FAIL %-28s measured %.3e tolerance %.1e %s\n", r.name.c_str(), r.measured,
                  r.tolerance, r.detail.c_str());
  std::printf("verify: %zu properties, %d failed -> %s\n", report.results.size(), report.failed,
              path.c_str());
  return report.failed == 0 ? 0 : 1;
}

int run_compare(const ScenarioConfig& config, const std::string& out_dir) {
  ProblemSpec problem = config.make_problem();
  if (problem.n != 1) throw config.at("problem.n", "compare needs a one-axis problem");
  const SolveMode mode = config.solve_mode();
  const QuadSpec quad = config.make_quadrature();
  const bool allow = config.allow_invalid_data();
  const std::string describe = config.describe_problem();
  const Grid1D grid = config.make_grid();
  const std::string far = config.compare_far();

  const std::uint64_t eval0 = quadrature_evaluations();
  const auto t0 = std::chrono::steady_clock::now();
  ProblemSpec fd_problem = problem;
  const SolutionEvaluator u = [&] {
    switch (mode) {
      case SolveMode::inhomogeneous:
        return solve_inhomogeneous(std::move(problem), quad);
      case SolveMode::combined:
        return solve_full(std::move(problem), quad, allow);
      case SolveMode::homogeneous:
      default:
        return solve_homogeneous(std::move(problem), quad, allow);
    }
  }();

  FarValue far_u;
  if (far == "exact") {
    if (fd_problem.m != 1) throw config.at("compare.far", "compare.far = exact supports m = 1 only");
    far_u = [&u, L = grid.length](double t) {
      const std::array<double, 1> pt{L};
      return u.value(pt, t);
    };
  }
  const FDSolution fd = fd_solve(fd_problem, grid, far_u, {});

  const double limit = 0.6 * grid.length;
  const std::size_t stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(0.6 * static_cast<double>(fd.x.size()) / 64.0));
  std::string csv = "x,reference,oracle,gap\n";
  double max_gap = 0.0, sum_sq = 0.0;
  std::size_t samples = 0;
  for (std::size_t i = 0; i < fd.x.size() && fd.x[i] <= limit; i += stride) {
    const std::array<double, 1> pt{fd.x[i]};
    const double ref = u.value(pt, grid.t_final);
    const double gap = fd.final_frame[i] - ref;
    csv += fmt17(fd.x[i]) + "," + fmt17(ref) + "," + fmt17(fd.final_frame[i]) + "," +
           fmt17(gap) + "\n";
    max_gap = std::max(max_gap, std::abs(gap));
    sum_sq += gap * gap;
    ++samples;
  }
  const double rms = samples == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(samples));

  bool have_order = false;
  double order = 0.0;
  if (config.compare_orders()) {
    const int nodes = grid.nodes;
    const int steps = grid.steps();
    if (nodes % 4 != 0 || nodes / 4 < 64 || steps % 4 != 0)
      throw config.at("fd.nodes",
                      "compare.orders needs fd.nodes divisible by 4 (>= 256) and "
                      "fd.t_final divisible by 4 * fd.dt");
    const std::vector<Grid1D> grids{
        Grid1D(grid.length, nodes / 4, grid.dt * 4.0, grid.t_final),
        Grid1D(grid.length, nodes / 2, grid.dt * 2.0, grid.t_final),
        Grid1D(grid.length, nodes, grid.dt, grid.t_final)};
    const ConvergenceStudy study =
        convergence_study(fd_problem, grids, quad, 0.3, 0.0, far_u, {});
    order = study.observed_order;
    have_order = true;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string csv_path = output_path(out_dir, "compare.csv");
  write_text_file(csv_path, csv);

  ordered_json j;
  j["schema_version"] = 1;
  j["command"] = "compare";
  j["config_hash"] = config.hash_string();
  j["problem"] = describe;
  j["grid"] = ordered_json{{"length", grid.length},
                           {"nodes", fd.x.size()},
                           {"dt", grid.dt},
                           {"t_final", grid.t_final},
                           {"far", far}};
  j["gap"] = ordered_json{{"max", max_gap}, {"rms", rms}, {"samples", samples}};
  if (have_order)
    j["order"] = order;
  else
    j["order"] = nullptr;
  j["quadrature"] = ordered_json{{"evaluations", quadrature_evaluations() - eval0}};
  j["outputs"] = ordered_json{{"csv", "compare.csv"}};
  j["timing"] = ordered_json{{"wall_seconds", seconds}};
  write_text_file(output_path(out_dir, "compare.json"), j.dump(2) + "\n");

  std::printf("compare: max gap %.3e, rms %.3e over %zu samples -> %s\n", max_gap, rms, samples,
              csv_path.c_str());
  return 0;
}

int run_kernel(const ScenarioConfig& config, const std::string& out_dir) {
  const double g = config.kernel_gamma();
  const double x = config.kernel_x();
  const double t = config.kernel_t();
  const int samples = config.kernel_samples();
  double s_max = config.kernel_s_max();
  if (s_max == 0.0) s_max = x + std::sqrt(t) * (1.2 * std::sqrt(4.0 * std::log(1e12)) + 10.0);

  const auto t0 = std::chrono::steady_clock::now();
  std::string csv = "s,weight\n";
  for (int i = 0; i <= samples; ++i) {
    const double s = s_max * static_cast<double>(i) / static_cast<double>(samples);
    csv += fmt17(s) + "," + fmt17(weight(g, x, s, t)) + "\n";
  }
  const double mass = integrate_gaussian_tail([g, x, t](double s) { return weight(g, x, s, t); },
                                              t, x, QuadSpec::tail_rule(1e-12, 12, 1e-13),
                                              2.0 * g + 1.0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string csv_path = output_path(out_dir, "kernel.csv");
  write_text_file(csv_path, csv);

  ordered_json j;
  j["schema_version"] = 1;
  j["command"] = "kernel";
  j["config_hash"] = config.hash_string();
  j["weight"] = ordered_json{{"gamma", g}, {"x", x}, {"t", t}};
  j["table"] = ordered_json{{"samples", samples + 1}, {"s_max", s_max}};
  j["mass"] = mass;
  j["outputs"] = ordered_json{{"csv", "kernel.csv"}};
  j["timing"] = ordered_json{{"wall_seconds", seconds}};
  write_text_file(output_path(out_dir, "kernel.json"), j.dump(2) + "\n");

  std::printf("kernel: mass %.12f, %d samples -> %s\n", mass, samples + 1, csv_path.c_str());
  return 0;
}

}  // namespace polycal
