#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ctlqr/parallel.hpp"

namespace ctlqr::acceptance {

struct CriterionResult {
  std::string id;
  std::string title;
  bool passed = false;
  std::string detail;
};

struct Options {
  Execution execution = Execution::kParallel;
  /// Progress lines go here when non-null.
  std::ostream* log = nullptr;
};

/// Runs criteria A1-A9 at their fixed tolerances.
std::vector<CriterionResult> run_all(const Options& options = {});

/// Prints one "PASS|FAIL <id> <title>: <detail>" line per criterion and
/// returns true when every criterion passed.
bool report(const std::vector<CriterionResult>& results, std::ostream& out);

/// OLS slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> values);

}  // namespace ctlqr::acceptance
