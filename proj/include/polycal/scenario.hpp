#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "polycal/bessel_diffop.hpp"
#include "polycal/fd_oracle.hpp"
#include "polycal/numerics.hpp"
#include "polycal/properties.hpp"
#include "polycal/solver.hpp"

namespace polycal {

/// Parse or validation failure anchored to a config line. what() is already
/// formatted as "<origin>:<line>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& origin, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

/// Scenario description parsed from a key-tree text file: one
/// "dotted.key = value" per line, '#' starts a comment. Values stay strings
/// until a typed accessor pulls them out, so every diagnostic can point at
/// the offending line. Unrecognized and duplicate keys are parse errors.
class ScenarioConfig {
 public:
  /// Empty config; every accessor falls back to its documented default.
  static ScenarioConfig defaults();
  static ScenarioConfig load(const std::string& path);
  static ScenarioConfig parse(std::string text, std::string origin);

  bool has(const std::string& key) const;
  /// FNV-1a over the raw config bytes, as 16 hex digits.
  std::string hash_string() const;

  // Typed views of the blocks. All throw ConfigError on malformed entries.
  ProblemSpec make_problem() const;
  SolveMode solve_mode() const;
  bool allow_invalid_data() const;
  QuadSpec make_quadrature() const;
  ProbeSpec make_probes(int n) const;
  Grid1D make_grid() const;
  std::vector<std::vector<double>> solve_points(int n) const;
  std::vector<double> solve_times() const;
  /// verify.tolerance.<property> entries; names are validated against the
  /// registered property list.
  std::map<std::string, double> tolerance_overrides() const;
  std::string out_dir() const;  // output.dir, or "" when unset

  // compare block
  std::string compare_far() const;     // "zero" (default) or "exact"
  bool compare_orders() const;         // joint halving study, default on

  // kernel block
  double kernel_gamma() const;
  double kernel_x() const;
  double kernel_t() const;
  int kernel_samples() const;
  double kernel_s_max() const;  // 0 selects the automatic tail cutoff

  /// One-line catalog summary for reports.
  std::string describe_problem() const;

  /// Builds a diagnostic anchored at the key's line (or its block's first
  /// line when the key is absent), for constraint checks done by callers.
  ConfigError at(const std::string& key, const std::string& message) const;

  struct Entry {
    std::string value;
    int line = 0;
  };

 private:
  const Entry* find(const std::string& key) const;
  const Entry& require(const std::string& key, const std::string& block) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_numbers(const std::string& key) const;
  int block_line(const std::string& prefix) const;

  std::string origin_;
  std::string content_;
  std::map<std::string, Entry> entries_;
};

/// Serialized verification report without the timing block, so two runs of
/// the same scenario compare byte for byte. The CLI appends timing before
/// writing the file.
std::string suite_report_text(const SuiteReport& report, const SuiteOptions& options,
                              const std::string& config_hash);

// Subcommand drivers. Each writes its artifacts under out_dir (created on
// demand; "" means the working directory) and returns the process exit
// code: 0 on success, 1 when verify reports failed properties. Config
// problems throw ConfigError; numerical failures escape as other
// exceptions and the CLI maps them to exit code 3.
int run_solve(const ScenarioConfig& config, const std::string& out_dir);
int run_verify(const ScenarioConfig& config, SuiteOptions options, const std::string& out_dir);
int run_compare(const ScenarioConfig& config, const std::string& out_dir);
int run_kernel(const ScenarioConfig& config, const std::string& out_dir);

}  // namespace polycal
