// Fast invariant suites behind `qet check`.
#pragma once

#include <string>
#include <vector>

namespace qet {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed;
  double value;           ///< measured statistic
  std::string criterion;  ///< what the statistic must satisfy, e.g. "< 1e-10"
};

/// lattice, observables, propagator, measurement, perturbation.
const std::vector<std::string>& check_suite_names();

/// Runs the named suites ("all" expands to every suite). Throws
/// std::invalid_argument for an unknown name.
std::vector<CheckResult> run_checks(const std::vector<std::string>& suites);

}  // namespace qet
