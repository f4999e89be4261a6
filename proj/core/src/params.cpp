#include "tcrf/params.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tcrf/errors.hpp"
#include "tcrf/parser.hpp"
#include "tcrf/program.hpp"

namespace tcrf {

std::string to_string(ParamMode m) { return m == ParamMode::Weight ? "weight" : "probability"; }

const ParameterTable::Entry* ParameterTable::find(const Term& sw) const {
  auto it = entries_.find(sw);
  return it == entries_.end() ? nullptr : &it->second;
}

void ParameterTable::set(const Term& sw, std::vector<Term> outcomes, std::vector<double> values) {
  if (!sw.ground()) throw std::invalid_argument("parameter switch must be ground: " + to_string(sw));
  if (outcomes.size() != values.size())
    throw std::invalid_argument("outcome/value length mismatch for " + to_string(sw));
  entries_[sw] = Entry{std::move(outcomes), std::move(values)};
}

void ParameterTable::set_value(const Term& sw, const std::vector<Term>& outcomes, const Term& outcome, double v) {
  auto it = entries_.find(sw);
  if (it == entries_.end()) {
    it = entries_.emplace(sw, Entry{outcomes, std::vector<double>(outcomes.size(), default_value(outcomes.size()))})
             .first;
  }
  auto& e = it->second;
  for (std::size_t i = 0; i < e.outcomes.size(); ++i)
    if (e.outcomes[i] == outcome) {
      e.values[i] = v;
      return;
    }
  throw std::invalid_argument("outcome " + to_string(outcome) + " not declared for " + to_string(sw));
}

double ParameterTable::value(const Term& sw, const std::vector<Term>& outcomes, std::size_t index) const {
  const Entry* e = find(sw);
  if (e) {
    // Fast path: aligned with the declaration.
    if (index < e->outcomes.size() && e->outcomes[index] == outcomes[index]) return e->values[index];
    for (std::size_t i = 0; i < e->outcomes.size(); ++i)
      if (e->outcomes[i] == outcomes[index]) return e->values[i];
  }
  return default_value(outcomes.size());
}

double ParameterTable::log_weight(const Term& sw, const std::vector<Term>& outcomes, std::size_t index) const {
  double v = value(sw, outcomes, index);
  if (mode_ == ParamMode::Weight) {
    if (!std::isfinite(v)) throw NumericError("non-finite weight for " + to_string(sw));
    return v;
  }
  if (!(v >= 0.0) || !std::isfinite(v)) throw NumericError("invalid probability for " + to_string(sw));
  return std::log(v);
}

void ParameterTable::validate(double tol) const {
  for (const auto& [sw, e] : entries_) {
    double sum = 0.0;
    for (double v : e.values) {
      if (!std::isfinite(v)) throw NumericError("non-finite parameter for " + to_string(sw));
      if (mode_ == ParamMode::Probability && v < 0.0) throw NumericError("negative probability for " + to_string(sw));
      sum += v;
    }
    if (mode_ == ParamMode::Probability && std::abs(sum - 1.0) > tol)
      throw NumericError("probabilities of " + to_string(sw) + " sum to " + std::to_string(sum));
  }
}

ParameterTable ParameterTable::weights_from_probabilities(const ParameterTable& theta) {
  if (theta.mode() != ParamMode::Probability) throw std::invalid_argument("expected a probability table");
  ParameterTable out(ParamMode::Weight);
  for (const auto& [sw, e] : theta.entries_) {
    std::vector<double> lam;
    for (double v : e.values) lam.push_back(std::log(v));
    out.entries_[sw] = Entry{e.outcomes, std::move(lam)};
  }
  return out;
}

ParameterTable ParameterTable::defaults_for(const Program& program, ParamMode mode) {
  ParameterTable t(mode);
  for (const auto& d : program.switch_decls())
    if (d.pattern.ground())
      t.set(d.pattern, d.outcomes, std::vector<double>(d.outcomes.size(), t.default_value(d.outcomes.size())));
  return t;
}

void ParameterTable::save(std::ostream& os) const {
  os << "mode: " << to_string(mode_) << "\n";
  char buf[64];
  for (const auto& [sw, e] : entries_) {
    std::string s = to_string(sw);
    for (std::size_t i = 0; i < e.outcomes.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", e.values[i]);
      os << s << '\t' << to_string(e.outcomes[i]) << '\t' << buf << "\n";
    }
  }
}

void ParameterTable::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write parameter file " + path);
  save(os);
}

ParameterTable ParameterTable::load(std::istream& is) {
  std::string line;
  int lineno = 0;
  ParamMode mode;
  for (;;) {
    if (!std::getline(is, line)) throw DataError("parameter file: missing mode header");
    ++lineno;
    if (!line.empty()) break;
  }
  if (line == "mode: probability")
    mode = ParamMode::Probability;
  else if (line == "mode: weight")
    mode = ParamMode::Weight;
  else
    throw DataError("parameter file: bad header '" + line + "'");

  ParameterTable t(mode);
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw DataError("parameter file line " + std::to_string(lineno) + ": expected 3 fields");
    Term sw = parse_term(line.substr(0, t1)).term;
    Term outcome = parse_term(line.substr(t1 + 1, t2 - t1 - 1)).term;
    std::string num = line.substr(t2 + 1);
    char* end = nullptr;
    double v = std::strtod(num.c_str(), &end);
    if (end == num.c_str() || *end != '\0')
      throw DataError("parameter file line " + std::to_string(lineno) + ": bad number '" + num + "'");
    auto& e = t.entries_[sw];
    e.outcomes.push_back(outcome);
    e.values.push_back(v);
  }
  return t;
}

ParameterTable ParameterTable::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open parameter file " + path);
  return load(is);
}

}  // namespace tcrf
