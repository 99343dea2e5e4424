#pragma once

#include <cmath>
#include <concepts>
#include <limits>

#include "zsgame/errors.hpp"

namespace zsg {

/// Solves g(x) = target for a strictly increasing g on a bracket [lo, hi]
/// with g(lo) <= target <= g(hi). Bisects until the bracket's relative width
/// drops below rel_tol or no representable midpoint remains.
template <std::invocable<double> G>
double bisect_increasing(G&& g, double target, double lo, double hi, double rel_tol = 1e-15) {
  if (!(lo <= hi)) throw DomainError("bisect_increasing: empty bracket");
  for (int iter = 0; iter < 4096; ++iter) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= rel_tol * std::abs(hi)) break;
  }
  // Return whichever end lands closer to the target.
  return std::abs(g(lo) - target) <= std::abs(g(hi) - target) ? lo : hi;
}

/// Inverts an increasing g with g(x) <= x on (0, inf): the root of
/// g(x) = target lies at or above target, so the bracket starts at
/// [target, 2 target] and doubles its upper end until it straddles the root.
template <std::invocable<double> G>
double invert_increasing_below_identity(G&& g, double target, double rel_tol = 1e-15) {
  if (!(target > 0.0) || !std::isfinite(target)) {
    throw DomainError("inversion target must be positive and finite");
  }
  double lo = target;
  double hi = 2.0 * target;
  while (g(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw DomainError("inversion bracket overflowed");
  }
  return bisect_increasing(g, target, lo, hi, rel_tol);
}

}  // namespace zsg
