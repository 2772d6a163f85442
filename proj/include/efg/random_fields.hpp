#pragma once

// Seeded random smooth coefficient functions built from the primitive set, used for
// randomized oracle suites and scans.

#include <random>
#include <vector>

#include "efg/expr.hpp"

namespace efg {

// offset + sum of `terms` oscillating pieces in random linear combinations of `vars`;
// the pieces are bounded by `amplitude` in total, so |result - offset| <= amplitude.
Expr random_smooth(std::mt19937_64& rng, const std::vector<int>& vars, double offset, double amplitude,
                   int terms = 3);

// Like random_smooth but with a guaranteed sign: sign * (base + bounded wiggle), base in [1, 2].
Expr random_signed(std::mt19937_64& rng, const std::vector<int>& vars, int sign, double wiggle = 0.3);

// Strictly monotone in u[var]: slope * u[var] + bounded terms whose derivative along var
// stays below half the slope in magnitude.
Expr random_monotone(std::mt19937_64& rng, const std::vector<int>& vars, int var, double slope);

}  // namespace efg
