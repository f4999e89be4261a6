#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tcrf/term.hpp"

namespace tcrf {

class Program;

enum class ParamMode { Probability, Weight };

std::string to_string(ParamMode m);

/// Per-ground-switch parameters aligned with the switch's declared outcomes.
///
/// Probability mode stores θ (each vector sums to one); weight mode stores
/// λ, with η = exp(λ) only ever used in log space.
class ParameterTable {
 public:
  struct Entry {
    std::vector<Term> outcomes;
    std::vector<double> values;
  };
  using Map = std::map<Term, Entry, TermLess>;

  explicit ParameterTable(ParamMode mode = ParamMode::Weight) : mode_(mode) {}

  ParamMode mode() const { return mode_; }
  const Map& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  const Entry* find(const Term& sw) const;
  void set(const Term& sw, std::vector<Term> outcomes, std::vector<double> values);
  /// Sets one value, creating the entry from `outcomes` (filled with defaults) if absent.
  void set_value(const Term& sw, const std::vector<Term>& outcomes, const Term& outcome, double v);

  /// Value for an outcome, falling back to the mode's default (λ = 0 or
  /// uniform θ) when the switch or the outcome has no entry.
  double value(const Term& sw, const std::vector<Term>& outcomes, std::size_t index) const;

  /// log θ or λ for an outcome, defaults as in value().
  double log_weight(const Term& sw, const std::vector<Term>& outcomes, std::size_t index) const;

  double default_value(std::size_t num_outcomes) const {
    return mode_ == ParamMode::Weight ? 0.0 : 1.0 / double(num_outcomes);
  }

  /// Throws NumericError on non-finite values, negative probabilities or
  /// probability vectors not summing to one within `tol`.
  void validate(double tol = 1e-12) const;

  /// λ = ln θ for every entry of a probability table.
  static ParameterTable weights_from_probabilities(const ParameterTable& theta);

  /// Uniform (probability) or zero (weight) entries for every ground
  /// switch declared in `program` without variables.
  static ParameterTable defaults_for(const Program& program, ParamMode mode);

  void save(std::ostream& os) const;
  void save(const std::string& path) const;
  static ParameterTable load(std::istream& is);
  static ParameterTable load(const std::string& path);

 private:
  ParamMode mode_;
  Map entries_;
};

}  // namespace tcrf
