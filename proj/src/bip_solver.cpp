#include "metro/bip_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace metro {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RowSlacks {
  std::vector<std::size_t> columns;  // absolute column indices
  bool has_positive = false;
  bool has_negative = false;
};

std::vector<RowSlacks> collect_row_slacks(const BipProblem& p) {
  std::vector<RowSlacks> rows(p.constraints.size());
  for (std::size_t r = 0; r < p.constraints.size(); ++r) {
    const auto& c = p.constraints[r];
    for (std::size_t s = 0; s < p.num_slacks; ++s) {
      const double a = c.coefficients[p.num_vars + s];
      if (a == 0.0) continue;
      rows[r].columns.push_back(p.num_vars + s);
      (a > 0.0 ? rows[r].has_positive : rows[r].has_negative) = true;
    }
  }
  return rows;
}

double linear_lhs(const Constraint& c, std::span<const std::uint8_t> x) {
  double lhs = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) lhs += c.coefficients[i];
  }
  return lhs;
}

// Minimum-cost slack values closing `gap` for one equality row. Returns false
// if the row cannot be satisfied.
bool resolve_slacks(const BipProblem& p, const Constraint& c,
                    const RowSlacks& row, double gap,
                    std::vector<double>& slack_values, double& cost) {
  std::size_t best = 0;
  double best_cost = kInf;
  bool found = false;
  for (std::size_t col : row.columns) {
    const double a = c.coefficients[col];
    if (a * gap <= 0.0) continue;
    const double value = gap / a;
    const double candidate = p.objective[col] * value;
    if (!found || candidate < best_cost) {
      found = true;
      best = col;
      best_cost = candidate;
    }
  }
  if (!found) return std::abs(gap) <= kFeasibilityTol;
  const double value = gap / c.coefficients[best];
  slack_values[best - p.num_vars] = value;
  cost += p.objective[best] * value;
  return true;
}

std::vector<std::size_t> support(const Assignment& x) {
  std::vector<std::size_t> ones;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) ones.push_back(i);
  }
  return ones;
}

// Orders assignments by the sorted list of their set variables, so ties favour
// setting earlier variables and setting no more variables than needed.
bool is_lex_less(const Assignment& a, const Assignment& b) {
  const auto sa = support(a), sb = support(b);
  return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(),
                                      sb.end());
}

// Keeps every complete assignment within tolerance of the best objective seen
// so far; the final answer is the smallest survivor under is_lex_less. This
// makes the result independent of visiting order.
class TieTracker {
 public:
  double best() const { return best_; }

  void offer(const Assignment& x, const Evaluation& eval) {
    if (eval.objective < best_) {
      best_ = eval.objective;
      std::erase_if(kept_, [&](const Entry& e) {
        return e.eval.objective > best_ + kFeasibilityTol;
      });
    }
    if (eval.objective <= best_ + kFeasibilityTol) kept_.push_back({x, eval});
  }

  BipSolution finish(std::size_t nodes) const {
    BipSolution sol;
    sol.nodes_explored = nodes;
    const Entry* pick = nullptr;
    for (const auto& e : kept_) {
      if (e.eval.objective > best_ + kFeasibilityTol) continue;
      if (pick == nullptr || is_lex_less(e.x, pick->x)) pick = &e;
    }
    if (pick == nullptr) {
      sol.status = SolveStatus::kInfeasible;
      return sol;
    }
    sol.status = SolveStatus::kOptimal;
    sol.assignment = pick->x;
    sol.slack_values = pick->eval.slacks;
    sol.objective_value = pick->eval.objective;
    return sol;
  }

 private:
  struct Entry {
    Assignment x;
    Evaluation eval;
  };
  double best_ = kInf;
  std::vector<Entry> kept_;
};

class BranchAndBound {
 public:
  explicit BranchAndBound(const BipProblem& p)
      : p_(p), rows_(collect_row_slacks(p)), x_(p.num_vars, 0),
        fixed_(p.num_vars, 0) {
    order_.resize(p.num_vars);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) {
                       return std::abs(p.objective[a]) >
                              std::abs(p.objective[b]);
                     });
    // Remaining negative objective mass after depth d.
    tail_negative_.assign(p.num_vars + 1, 0.0);
    for (std::size_t d = p.num_vars; d-- > 0;) {
      tail_negative_[d] =
          tail_negative_[d + 1] + std::min(0.0, p.objective[order_[d]]);
    }
    slack_floor_ = 0.0;
    for (std::size_t s = 0; s < p.num_slacks; ++s) {
      if (p.objective[p.num_vars + s] < 0.0) slack_floor_ = -kInf;
    }
  }

  BipSolution run() {
    descend(0, 0.0);
    return tracker_.finish(nodes_);
  }

 private:
  void descend(std::size_t depth, double partial) {
    ++nodes_;
    if (partial + tail_negative_[depth] + slack_floor_ >
        tracker_.best() + kFeasibilityTol) {
      return;
    }
    if (!rows_still_satisfiable()) return;
    if (depth == p_.num_vars) {
      if (auto eval = evaluate_assignment(p_, x_)) tracker_.offer(x_, *eval);
      return;
    }
    const std::size_t var = order_[depth];
    const double c = p_.objective[var];
    const std::uint8_t first = c < 0.0 ? 1 : 0;
    fixed_[var] = 1;
    for (std::uint8_t value : {first, static_cast<std::uint8_t>(1 - first)}) {
      x_[var] = value;
      descend(depth + 1, partial + (value ? c : 0.0));
    }
    x_[var] = 0;
    fixed_[var] = 0;
  }

  // Balas-style test: can each linear row still be met by some completion?
  bool rows_still_satisfiable() const {
    for (std::size_t r = 0; r < p_.constraints.size(); ++r) {
      const auto& c = p_.constraints[r];
      if (c.term) continue;
      double lo = 0.0, hi = 0.0;
      for (std::size_t i = 0; i < p_.num_vars; ++i) {
        const double a = c.coefficients[i];
        if (fixed_[i]) {
          if (x_[i]) lo += a, hi += a;
        } else {
          lo += std::min(0.0, a);
          hi += std::max(0.0, a);
        }
      }
      bool need_le = false, need_ge = false;
      switch (c.relation) {
        case Relation::kLessEqual: need_le = true; break;
        case Relation::kGreaterEqual: need_ge = true; break;
        case Relation::kEqual:
          // A positive slack absorbs lhs < rhs, a negative one lhs > rhs.
          need_le = !rows_[r].has_negative;
          need_ge = !rows_[r].has_positive;
          break;
      }
      if (need_le && lo > c.rhs + kFeasibilityTol) return false;
      if (need_ge && hi < c.rhs - kFeasibilityTol) return false;
    }
    return true;
  }

  const BipProblem& p_;
  std::vector<RowSlacks> rows_;
  Assignment x_;
  std::vector<std::uint8_t> fixed_;
  std::vector<std::size_t> order_;
  std::vector<double> tail_negative_;
  double slack_floor_ = 0.0;
  TieTracker tracker_;
  std::size_t nodes_ = 0;
};

}  // namespace

const char* relation_symbol(Relation relation) {
  switch (relation) {
    case Relation::kLessEqual: return "<=";
    case Relation::kEqual: return "=";
    case Relation::kGreaterEqual: return ">=";
  }
  return "?";
}

void BipProblem::validate() const {
  const std::size_t width = num_vars + num_slacks;
  if (objective.size() != width) {
    throw MalformedProblem("objective has " + std::to_string(objective.size()) +
                           " coefficients, expected " + std::to_string(width));
  }
  if (!var_names.empty() && var_names.size() != num_vars) {
    throw MalformedProblem("var_names length does not match num_vars");
  }
  for (double v : objective) {
    if (!std::isfinite(v)) throw MalformedProblem("non-finite objective");
  }
  std::vector<int> slack_rows(num_slacks, 0);
  for (std::size_t r = 0; r < constraints.size(); ++r) {
    const auto& c = constraints[r];
    const std::string label = "constraint " + std::to_string(r);
    if (c.coefficients.size() != width) {
      throw MalformedProblem(label + " has " +
                             std::to_string(c.coefficients.size()) +
                             " coefficients, expected " +
                             std::to_string(width));
    }
    for (double v : c.coefficients) {
      if (!std::isfinite(v)) throw MalformedProblem(label + " non-finite");
    }
    if (!std::isfinite(c.rhs)) throw MalformedProblem(label + " non-finite");
    if (c.term && c.relation != Relation::kEqual) {
      throw MalformedProblem(label + " carries a term but is not an equality");
    }
    for (std::size_t s = 0; s < num_slacks; ++s) {
      if (c.coefficients[num_vars + s] == 0.0) continue;
      if (c.relation != Relation::kEqual) {
        throw MalformedProblem(label + " uses a slack but is not an equality");
      }
      ++slack_rows[s];
    }
    // Opposite-signed slacks whose combined cost is negative are unbounded.
    for (std::size_t s = 0; s < num_slacks; ++s) {
      const double a = c.coefficients[num_vars + s];
      if (a == 0.0) continue;
      for (std::size_t q = s + 1; q < num_slacks; ++q) {
        const double b = c.coefficients[num_vars + q];
        if (b == 0.0 || (a > 0.0) == (b > 0.0)) continue;
        if (objective[num_vars + s] / std::abs(a) +
                objective[num_vars + q] / std::abs(b) <
            0.0) {
          throw MalformedProblem(label + " has an unbounded slack pair");
        }
      }
    }
  }
  for (std::size_t s = 0; s < num_slacks; ++s) {
    if (slack_rows[s] != 1) {
      throw MalformedProblem("slack " + std::to_string(s) + " appears in " +
                             std::to_string(slack_rows[s]) +
                             " rows, expected exactly one");
    }
  }
}

std::optional<Evaluation> evaluate_assignment(
    const BipProblem& p, std::span<const std::uint8_t> x) {
  Evaluation eval;
  eval.slacks.assign(p.num_slacks, 0.0);
  double slack_cost = 0.0;
  const auto rows = collect_row_slacks(p);
  for (std::size_t r = 0; r < p.constraints.size(); ++r) {
    const auto& c = p.constraints[r];
    double lhs = linear_lhs(c, x);
    if (c.term) lhs += c.term(x);
    switch (c.relation) {
      case Relation::kLessEqual:
        if (lhs > c.rhs + kFeasibilityTol) return std::nullopt;
        break;
      case Relation::kGreaterEqual:
        if (lhs < c.rhs - kFeasibilityTol) return std::nullopt;
        break;
      case Relation::kEqual:
        if (!resolve_slacks(p, c, rows[r], c.rhs - lhs, eval.slacks,
                            slack_cost)) {
          return std::nullopt;
        }
        break;
    }
  }
  double objective = 0.0;
  for (std::size_t i = 0; i < p.num_vars; ++i) {
    if (x[i]) objective += p.objective[i];
  }
  eval.objective = objective + slack_cost;
  return eval;
}

BipSolution solve(const BipProblem& problem) {
  problem.validate();
  return BranchAndBound(problem).run();
}

BipSolution solve_exhaustive(const BipProblem& problem) {
  problem.validate();
  const std::size_t n = problem.num_vars;
  if (n > kExhaustiveVarLimit) {
    throw std::length_error("exhaustive enumeration refuses " +
                            std::to_string(n) + " variables (limit " +
                            std::to_string(kExhaustiveVarLimit) + ")");
  }
  TieTracker tracker;
  Assignment x(n, 0);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<std::uint8_t>((mask >> (n - 1 - i)) & 1U);
    }
    if (auto eval = evaluate_assignment(problem, x)) tracker.offer(x, *eval);
  }
  return tracker.finish(static_cast<std::size_t>(total));
}

void dump_problem(const BipProblem& p, std::ostream& os) {
  auto name = [&](std::size_t col) {
    if (col < p.num_vars) {
      return p.var_names.empty() ? "x" + std::to_string(col)
                                 : p.var_names[col];
    }
    return "s" + std::to_string(col - p.num_vars);
  };
  auto row = [&](const std::vector<double>& coeffs) {
    std::ostringstream line;
    line.precision(17);
    bool any = false;
    for (std::size_t col = 0; col < coeffs.size(); ++col) {
      if (coeffs[col] == 0.0) continue;
      line << (coeffs[col] < 0.0 ? " - " : (any ? " + " : " "))
           << std::abs(coeffs[col]) << " " << name(col);
      any = true;
    }
    if (!any) line << " 0";
    return line.str();
  };
  os << "vars " << p.num_vars << " binary, " << p.num_slacks
     << " continuous slack\n";
  os << "minimize" << row(p.objective) << "\n";
  os << "subject to\n";
  for (std::size_t r = 0; r < p.constraints.size(); ++r) {
    const auto& c = p.constraints[r];
    std::ostringstream rhs;
    rhs.precision(17);
    rhs << c.rhs;
    os << "  " << (c.name.empty() ? "c" + std::to_string(r) : c.name) << ":"
       << row(c.coefficients) << (c.term ? " + term(x)" : "") << " "
       << relation_symbol(c.relation) << " " << rhs.str() << "\n";
  }
  os << "end\n";
}

std::string dump_problem(const BipProblem& problem) {
  std::ostringstream os;
  dump_problem(problem, os);
  return os.str();
}

}  // namespace metro
