#pragma once

// 0-1 linear programs solved by implicit enumeration.
//
// Variables 0..num_vars-1 are binary. Variables num_vars..num_vars+num_slacks-1
// are continuous, nonnegative slacks; each slack appears in exactly one
// equality row. For a fixed binary assignment the slacks of a row are resolved
// in closed form (cheapest slack that closes the row's gap), so the search only
// branches over the binary part.
//
// An equality row may additionally carry an `AssignmentTerm`, a function of the
// full binary assignment that is added to the row's linear left-hand side. It
// is evaluated only at complete assignments; this is how piecewise terms that
// depend on the whole decision enter a row without being linearized.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace metro {

inline constexpr double kFeasibilityTol = 1e-9;

class MalformedProblem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Relation { kLessEqual, kEqual, kGreaterEqual };

const char* relation_symbol(Relation relation);

using Assignment = std::vector<std::uint8_t>;
using AssignmentTerm = std::function<double(std::span<const std::uint8_t>)>;

struct Constraint {
  std::vector<double> coefficients;  // num_vars + num_slacks
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
  AssignmentTerm term;  // optional; equality rows only
  std::string name;
};

struct BipProblem {
  std::size_t num_vars = 0;
  std::size_t num_slacks = 0;
  std::vector<double> objective;  // num_vars + num_slacks, minimized
  std::vector<Constraint> constraints;
  std::vector<std::string> var_names;  // optional, for dumps

  // Throws MalformedProblem on any structural defect.
  void validate() const;
};

enum class SolveStatus { kOptimal, kInfeasible };

struct BipSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  Assignment assignment;
  std::vector<double> slack_values;
  double objective_value = 0.0;
  std::size_t nodes_explored = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

// Depth-first branch-and-bound. Among ties (objectives within kFeasibilityTol)
// returns the assignment whose sorted list of set variables is
// lexicographically smallest: [1,0] before [0,1], [0,1,0] before [0,1,1].
BipSolution solve(const BipProblem& problem);

inline constexpr std::size_t kExhaustiveVarLimit = 20;

// Brute-force reference over all 2^n assignments; refuses n > 20.
BipSolution solve_exhaustive(const BipProblem& problem);

// Evaluates a complete assignment: resolves slacks and checks every row.
// Returns nullopt when infeasible.
struct Evaluation {
  double objective = 0.0;
  std::vector<double> slacks;
};
std::optional<Evaluation> evaluate_assignment(const BipProblem& problem,
                                              std::span<const std::uint8_t> x);

// Plain-text LP-like listing, one row per line.
void dump_problem(const BipProblem& problem, std::ostream& os);
std::string dump_problem(const BipProblem& problem);

}  // namespace metro
