#include "tcrf/counts.hpp"

#include <algorithm>
#include <sstream>

namespace tcrf {

void CountVector::prune_zeros() {
  std::erase_if(map_, [](const auto& kv) { return kv.second == 0.0; });
}

double CountVector::total() const {
  double s = 0.0;
  for (const auto& [k, v] : map_) s += v;
  return s;
}

bool operator<(const CountVector& a, const CountVector& b) {
  CountVector::KeyLess less;
  return std::lexicographical_compare(a.map_.begin(), a.map_.end(), b.map_.begin(), b.map_.end(),
                                      [&](const auto& x, const auto& y) {
                                        if (less(x.first, y.first)) return true;
                                        if (less(y.first, x.first)) return false;
                                        return x.second < y.second;
                                      });
}

std::string to_string(const CountVector& c) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [k, v] : c) {
    if (!first) os << ", ";
    first = false;
    os << "msw(" << to_string(k.first) << "," << to_string(k.second) << ")";
    if (v != 1.0) os << "*" << v;
  }
  os << "}";
  return os.str();
}

}  // namespace tcrf
