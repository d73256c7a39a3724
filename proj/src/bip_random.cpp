#include "metro/bip_random.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace metro {

BipProblem random_bip(std::mt19937_64& rng, const RandomBipOptions& options) {
  if (options.min_vars > options.max_vars) {
    throw std::invalid_argument("min_vars exceeds max_vars");
  }
  std::uniform_int_distribution<std::size_t> var_count(options.min_vars,
                                                       options.max_vars);
  std::uniform_int_distribution<std::size_t> row_count(
      0, options.max_constraints);
  std::uniform_int_distribution<int> coeff(-options.coefficient_range,
                                           options.coefficient_range);
  std::uniform_int_distribution<int> relation(0, 2);
  std::bernoulli_distribution slack_row(options.slack_row_probability);

  BipProblem p;
  p.num_vars = var_count(rng);
  const std::size_t rows = row_count(rng);
  const bool with_slacks = rows > 0 && slack_row(rng);
  p.num_slacks = with_slacks ? 2 : 0;
  const std::size_t width = p.num_vars + p.num_slacks;

  p.objective.assign(width, 0.0);
  for (std::size_t i = 0; i < p.num_vars; ++i) p.objective[i] = coeff(rng);

  // Most instances are built around a hidden assignment that satisfies every
  // row; the rest draw right-hand sides freely and are often infeasible.
  const bool planted = std::bernoulli_distribution(options.planted_probability)(rng);
  std::bernoulli_distribution bit(0.5);
  std::vector<int> hidden(p.num_vars);
  for (int& h : hidden) h = bit(rng) ? 1 : 0;
  std::uniform_int_distribution<int> margin(0, options.coefficient_range / 2);

  for (std::size_t r = 0; r < rows; ++r) {
    Constraint c;
    c.coefficients.assign(width, 0.0);
    double positive_mass = 0.0, at_hidden = 0.0;
    for (std::size_t i = 0; i < p.num_vars; ++i) {
      c.coefficients[i] = coeff(rng);
      positive_mass += std::max(0.0, c.coefficients[i]);
      at_hidden += c.coefficients[i] * hidden[i];
    }
    c.relation = static_cast<Relation>(relation(rng));
    if (planted) {
      switch (c.relation) {
        case Relation::kLessEqual: c.rhs = at_hidden + margin(rng); break;
        case Relation::kGreaterEqual: c.rhs = at_hidden - margin(rng); break;
        case Relation::kEqual: c.rhs = at_hidden; break;
      }
    } else {
      std::uniform_int_distribution<int> rhs(
          -options.coefficient_range,
          static_cast<int>(positive_mass) + options.coefficient_range / 2);
      c.rhs = rhs(rng);
    }
    p.constraints.push_back(std::move(c));
  }

  if (with_slacks) {
    Constraint& goal = p.constraints.front();
    goal.relation = Relation::kEqual;
    goal.coefficients[p.num_vars] = 1.0;       // under-target slack
    goal.coefficients[p.num_vars + 1] = -1.0;  // over-target slack
    std::uniform_int_distribution<int> penalty(1, options.coefficient_range);
    p.objective[p.num_vars + 1] = penalty(rng);
  }
  return p;
}

}  // namespace metro
