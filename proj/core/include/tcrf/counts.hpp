#pragma once

#include <map>
#include <string>
#include <utility>

#include "tcrf/term.hpp"

namespace tcrf {

/// Sparse map (switch, outcome) -> real.
///
/// Holds explanation counts, expected counts and gradients alike. Entries are
/// kept in standard term order so iteration and printing are deterministic.
class CountVector {
 public:
  using Key = std::pair<Term, Term>;

  struct KeyLess {
    bool operator()(const Key& a, const Key& b) const {
      int c = compare(a.first, b.first);
      return c != 0 ? c < 0 : compare(a.second, b.second) < 0;
    }
  };

  using Map = std::map<Key, double, KeyLess>;

  void add(const Term& sw, const Term& outcome, double x) { map_[{sw, outcome}] += x; }
  void set(const Term& sw, const Term& outcome, double x) { map_[{sw, outcome}] = x; }
  double get(const Term& sw, const Term& outcome) const {
    auto it = map_.find({sw, outcome});
    return it == map_.end() ? 0.0 : it->second;
  }

  /// Removes entries whose value is exactly zero.
  void prune_zeros();

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const Map& entries() const { return map_; }
  Map::const_iterator begin() const { return map_.begin(); }
  Map::const_iterator end() const { return map_.end(); }

  /// Sum of all values.
  double total() const;

  friend bool operator==(const CountVector& a, const CountVector& b) { return a.map_ == b.map_; }
  friend bool operator<(const CountVector& a, const CountVector& b);

 private:
  Map map_;
};

/// `{msw(i,v)*k, ...}` rendering for reports and tests.
std::string to_string(const CountVector& c);

}  // namespace tcrf
