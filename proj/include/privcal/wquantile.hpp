#pragma once

#include <vector>

#include "privcal/core.hpp"

namespace privcal {

struct WeightedAtom {
  double value = 0.0;
  double mass = 0.0;  // >= 0
};

/// Discrete distribution of finite atoms plus a point mass at infinity.
struct WeightedDistribution {
  std::vector<WeightedAtom> atoms;
  double inf_mass = 0.0;
};

/// Smallest atom value whose normalized cumulative mass reaches `level`
/// (ties merged first); Infinite when only the infinity mass reaches it.
/// Cumulative sums get an absolute slack of 1e-12 so a boundary atom is not
/// lost to rounding.
Threshold weighted_quantile(double level, const WeightedDistribution& dist);

/// Same contract as weighted_quantile, computed by an exhaustive scan over
/// candidate values with freshly recomputed sums. Kept as a separate code
/// path for verification.
Threshold weighted_quantile_oracle(double level, const WeightedDistribution& dist);

/// The ceil((n+1)(1-alpha))-th smallest score; Infinite when that rank
/// exceeds n.
Threshold cp_quantile(const std::vector<double>& scores, double alpha);

}  // namespace privcal
