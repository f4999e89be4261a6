#include "tcrf/report.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "tcrf/errors.hpp"

namespace tcrf {

void write_fit_report(std::ostream& os, const FitReport& r) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "method: " << r.method << "\n";
  os << "final_objective: " << num(r.final_objective) << "\n";
  os << "iterations: " << r.iterations << "\n";
  os << "converged: " << (r.converged ? "true" : "false") << "\n";
  if (!r.message.empty()) os << "message: " << r.message << "\n";
  os << "\n";
  for (double v : r.objective_trace) os << num(v) << "\n";
}

void write_fit_report(const std::string& path, const FitReport& r) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write fit report " + path);
  write_fit_report(os, r);
}

}  // namespace tcrf
