#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polycal {

/// Outcome of one named identity check. `measured` is the scalar the
/// tolerance applies to (a max residual, a max relative error, or a
/// distance from a target exponent); `detail` is a short human note.
struct PropertyResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct SuiteOptions {
  std::string filter = "*";                 ///< glob over property names
  int jobs = 1;                             ///< worker threads, >= 1
  std::optional<std::uint64_t> seed;        ///< jitters probe grids when set
  std::map<std::string, double> tolerances; ///< per-name overrides
};

struct SuiteReport {
  std::vector<PropertyResult> results;  // table order, filtered
  int failed = 0;
  std::uint64_t evaluations = 0;  // quadrature samples spent by the run
  double seconds = 0.0;
};

/// `*` matches any run, `?` any single character, everything else literal.
bool glob_match(const std::string& pattern, const std::string& name);

/// Names of every registered property, in execution order.
std::vector<std::string> property_names();

/// Runs the registered identity checks whose names match the filter.
/// Results are independent of `jobs` and, for a fixed seed, of the
/// execution order; a property that throws is reported as failed with the
/// exception text in `detail`.
SuiteReport run_property_suite(const SuiteOptions& options);

}  // namespace polycal
