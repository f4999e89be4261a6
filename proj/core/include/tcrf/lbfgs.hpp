#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "tcrf/report.hpp"

namespace tcrf {

/// Returns f(x) and writes ∇f(x) into `grad` (already sized like x).
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct LbfgsOptions {
  std::size_t memory = 10;
  double grad_tol = 1e-5;  // on the infinity norm
  std::size_t max_iters = 1000;
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_evals = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  FitReport report;
};

/// Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.
/// A failed line search clears the memory and retries along steepest
/// descent once; a second consecutive failure stops the run unconverged.
/// Throws NumericError on a non-finite objective or gradient.
LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& opts = {});

}  // namespace tcrf
