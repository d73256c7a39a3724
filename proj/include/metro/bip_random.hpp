#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "metro/bip_solver.hpp"

namespace metro {

struct RandomBipOptions {
  std::size_t min_vars = 1;
  std::size_t max_vars = 8;
  std::size_t max_constraints = 8;
  int coefficient_range = 9;  // integers in [-range, range]
  double slack_row_probability = 0.3;
  double planted_probability = 0.85;  // share built to be feasible
};

// Seeded random instance with integer data. Most instances are feasible by
// construction. Some carry a goal-programming row (one under- and one
// over-slack) so that slack resolution is exercised.
BipProblem random_bip(std::mt19937_64& rng, const RandomBipOptions& options);

}  // namespace metro
