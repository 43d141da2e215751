#pragma once

#include <algorithm>
#include <ostream>

namespace perfsim {

/// Closed enclosure [lo, hi] of a quantity only computable up to a truncation.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double x) { return {x, x}; }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool is_point() const { return lo == hi; }
  bool contains(double x, double slack = 0.0) const { return lo - slack <= x && x <= hi + slack; }
  bool overlaps(const Interval& o, double slack = 0.0) const { return lo - slack <= o.hi && o.lo <= hi + slack; }

  friend Interval operator+(Interval a, double x) { return {a.lo + x, a.hi + x}; }
  friend Interval operator+(Interval a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
  friend Interval operator-(Interval a, double x) { return {a.lo - x, a.hi - x}; }

  friend std::ostream& operator<<(std::ostream& os, const Interval& i) {
    return os << '[' << i.lo << ", " << i.hi << ']';
  }
};

}  // namespace perfsim
