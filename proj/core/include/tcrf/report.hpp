#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace tcrf {

/// Outcome of an iterative fit.
struct FitReport {
  std::string method;
  double final_objective = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;
  bool converged = false;
  std::string message;
};

/// Key/value block, a blank line, then one objective value per line.
void write_fit_report(std::ostream& os, const FitReport& r);
void write_fit_report(const std::string& path, const FitReport& r);

}  // namespace tcrf
