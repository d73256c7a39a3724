#include "metro/scheduler.hpp"

#include <cmath>
#include <sstream>

namespace metro {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<double> departure_powers(const ScheduleInstance& instance) {
  std::vector<double> p;
  p.reserve(instance.waiting.size());
  for (const auto& w : instance.waiting) p.push_back(w.departure_power_kW);
  return p;
}

double closing_per_tick(const WaitingTrain& w, const SchedulerParams& params) {
  return params.dt_s * w.progress_rate;
}

DepartureDecision to_decision(const ScheduleInstance& instance,
                              const BipSolution& sol) {
  DepartureDecision d;
  for (std::size_t j = 0; j < instance.waiting.size(); ++j) {
    d.authorizations[instance.waiting[j].train_id] = sol.assignment[j];
  }
  d.total_power_kW = total_power(instance.running_powers_kW,
                                 departure_powers(instance), sol.assignment);
  d.underage_kW = sol.slack_values[0];
  d.overage_kW = sol.slack_values[1];
  d.objective_value = sol.objective_value;
  return d;
}

[[noreturn]] void raise_fault(const ScheduleInstance& instance,
                              const SchedulerParams& params) {
  std::vector<std::string> offending;
  for (const auto& w : instance.waiting) {
    const bool may_depart = headways_hold(w, 1, params);
    const bool may_hold = headways_hold(w, 0, params);
    if (!may_depart && !may_hold) {
      offending.push_back("lead[" + std::to_string(w.train_id) + "]");
      offending.push_back("follow[" + std::to_string(w.train_id) + "]");
    }
  }
  std::ostringstream msg;
  msg << "no departure decision satisfies the headway constraints at t="
      << instance.t_i_s << "s";
  if (!offending.empty()) {
    msg << " (";
    for (std::size_t i = 0; i < offending.size(); ++i) {
      msg << (i ? ", " : "") << offending[i];
    }
    msg << ")";
  }
  throw SchedulingFault(std::move(offending), msg.str());
}

DepartureDecision decide_with(
    const ScheduleInstance& instance, const SchedulerParams& params,
    BipSolution (*solver)(const BipProblem&)) {
  const BipProblem problem = build_problem(instance, params);
  const BipSolution sol = solver(problem);
  if (!sol.optimal()) raise_fault(instance, params);
  return to_decision(instance, sol);
}

}  // namespace

void SchedulerParams::validate() const {
  require(w1 > 0.0, "scheduler.w1 must be positive");
  require(w2 > 0.0, "scheduler.w2 must be positive");
  require(gamma1_value >= 0.0, "scheduler.gamma1 must be non-negative");
  require(gamma2_per_new_train >= 0.0,
          "scheduler.gamma2_per_new_train must be non-negative");
  require(p_threshold_kW > 0.0, "scheduler.p_threshold_kW must be positive");
  require(h_min_s > 0.0, "h_min_s must be positive");
  require(dt_s > 0.0, "dt_s must be positive");
}

void ScheduleInstance::validate() const {
  for (const auto& w : waiting) {
    require(w.departure_power_kW > 0.0,
            "waiting train " + std::to_string(w.train_id) +
                " needs a positive departure power estimate");
    require(w.headway_lead_s >= 0.0 && w.headway_follow_s >= 0.0,
            "waiting train " + std::to_string(w.train_id) +
                " has a negative headway");
    require(w.progress_rate > 0.0,
            "waiting train " + std::to_string(w.train_id) +
                " needs a positive progress rate");
  }
  require(newly_available_count >= 0, "newly_available_count is negative");
}

int DepartureDecision::authorized_count() const {
  int n = 0;
  for (const auto& [id, k] : authorizations) n += k;
  return n;
}

PowerBalance power_balance(std::span<const double> running_powers_kW,
                           std::span<const double> candidate_powers_kW,
                           std::span<const std::uint8_t> k) {
  if (candidate_powers_kW.size() != k.size()) {
    throw std::invalid_argument("candidate powers and k differ in length");
  }
  double net = 0.0, regenerated = 0.0, traction = 0.0;
  for (double p : running_powers_kW) {
    net += p;
    if (p < 0.0) regenerated -= p;
    else traction += p;
  }
  double demand = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    if (k[j]) demand += candidate_powers_kW[j];
  }
  PowerBalance b;
  b.regenerated_kW = regenerated;
  b.departure_demand_kW = demand;
  b.total_kW = regenerated <= demand ? net + demand : traction;
  return b;
}

double total_power(std::span<const double> running_powers_kW,
                   std::span<const double> candidate_powers_kW,
                   std::span<const std::uint8_t> k) {
  return power_balance(running_powers_kW, candidate_powers_kW, k).total_kW;
}

double departure_bonus(const ScheduleInstance& instance,
                       const SchedulerParams& params) {
  double net_running = 0.0;
  for (double p : instance.running_powers_kW) net_running += p;
  const double gamma1 = net_running < 0.0 ? params.gamma1_value : 0.0;
  const double gamma2 =
      params.gamma2_per_new_train * instance.newly_available_count;
  return params.w2 + gamma1 + gamma2;
}

bool headways_hold(const WaitingTrain& w, int k,
                   const SchedulerParams& params) {
  const double step = closing_per_tick(w, params);
  const bool lead_ok = std::isinf(w.headway_lead_s) ||
                       w.headway_lead_s - k * step >= params.h_min_s;
  const bool follow_ok = std::isinf(w.headway_follow_s) ||
                         w.headway_follow_s - (1 - k) * step >= params.h_min_s;
  return lead_ok && follow_ok;
}

BipProblem build_problem(const ScheduleInstance& instance,
                         const SchedulerParams& params) {
  params.validate();
  instance.validate();

  const std::size_t m = instance.waiting.size();
  BipProblem p;
  p.num_vars = m;
  p.num_slacks = 2;
  const std::size_t width = m + 2;
  const std::size_t d_minus = m, d_plus = m + 1;

  p.objective.assign(width, 0.0);
  const double bonus = departure_bonus(instance, params);
  for (std::size_t j = 0; j < m; ++j) p.objective[j] = -bonus;
  p.objective[d_plus] = params.w1;

  for (std::size_t j = 0; j < m; ++j) {
    const auto& w = instance.waiting[j];
    p.var_names.push_back("k" + std::to_string(w.train_id));
    const double step = closing_per_tick(w, params);
    if (!std::isinf(w.headway_lead_s)) {
      // h1 - k*dt*v >= h_min
      Constraint c;
      c.coefficients.assign(width, 0.0);
      c.coefficients[j] = step;
      c.relation = Relation::kLessEqual;
      c.rhs = w.headway_lead_s - params.h_min_s;
      c.name = "lead[" + std::to_string(w.train_id) + "]";
      p.constraints.push_back(std::move(c));
    }
    if (!std::isinf(w.headway_follow_s)) {
      if (w.headway_follow_s < params.h_min_s) {
        throw SafetyInfeasibility(
            w.train_id, "train " + std::to_string(w.train_id) +
                            " has its follower " +
                            std::to_string(w.headway_follow_s) +
                            "s behind, inside the minimum headway");
      }
      // h2 - (1-k)*dt*v >= h_min
      Constraint c;
      c.coefficients.assign(width, 0.0);
      c.coefficients[j] = step;
      c.relation = Relation::kGreaterEqual;
      c.rhs = step + params.h_min_s - w.headway_follow_s;
      c.name = "follow[" + std::to_string(w.train_id) + "]";
      p.constraints.push_back(std::move(c));
    }
  }

  Constraint power;
  power.coefficients.assign(width, 0.0);
  power.coefficients[d_minus] = 1.0;
  power.coefficients[d_plus] = -1.0;
  power.relation = Relation::kEqual;
  power.rhs = params.p_threshold_kW;
  power.name = "power";
  power.term = [running = instance.running_powers_kW,
                candidates = departure_powers(instance)](
                   std::span<const std::uint8_t> x) {
    return total_power(running, candidates, x);
  };
  p.constraints.push_back(std::move(power));
  return p;
}

DepartureDecision decide(const ScheduleInstance& instance,
                         const SchedulerParams& params) {
  return decide_with(instance, params, &solve);
}

DepartureDecision decide_exhaustive(const ScheduleInstance& instance,
                                    const SchedulerParams& params) {
  return decide_with(instance, params, &solve_exhaustive);
}

double total_delay(const ScheduleInstance& instance,
                   const DepartureDecision& decision,
                   const SchedulerParams& params) {
  double delay = 0.0;
  for (const auto& w : instance.waiting) {
    const auto it = decision.authorizations.find(w.train_id);
    if (it == decision.authorizations.end()) {
      throw std::invalid_argument("decision does not cover train " +
                                  std::to_string(w.train_id));
    }
    delay += instance.t_i_s - w.scheduled_departure_s +
             (1 - it->second) * params.dt_s;
  }
  return delay;
}

}  // namespace metro
