#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lamegap/sweep.hpp"

namespace lamegap {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  bool slow = false;  // extends every sweep one decade
  int workers = 1;
};

inline constexpr int kCriterionCount = 11;

/// Named experiment configurations behind the sweep criteria; usable as
/// templates for `lamegap sweep`. Throws InvalidArgument for unknown names.
ExperimentConfig builtin_config(const std::string& name);
std::vector<std::string> builtin_config_names();

/// Runs one criterion (1-based id). Exceptions become a failing result.
CriterionResult run_criterion(int id, const AcceptanceOptions& options = {});

/// Runs the listed criteria (all when empty), writing one line per result to `log` if given.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            std::span<const int> ids = {},
                                            std::ostream* log = nullptr);

/// "PASS  3 fem patch test and rigid modes: <detail> (1.2 s)".
std::string format_result(const CriterionResult& r);

}  // namespace lamegap
