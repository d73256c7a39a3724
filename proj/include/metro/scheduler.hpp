#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metro/bip_solver.hpp"

namespace metro {

using TrainId = int;

struct SchedulerParams {
  double w1 = 3.0;                    // weight on threshold overage d+
  double w2 = 5.0;                    // weight on departures
  double gamma1_value = 20.0;         // regeneration bonus
  double gamma2_per_new_train = 1.0;  // bonus per newly available train
  double p_threshold_kW = 125e3;
  double h_min_s = 180.0;
  double dt_s = 10.0;

  void validate() const;
  bool operator==(const SchedulerParams&) const = default;
};

inline constexpr double kNoNeighbor = std::numeric_limits<double>::infinity();

struct WaitingTrain {
  TrainId train_id = 0;
  double headway_lead_s = kNoNeighbor;    // to the vehicle ahead
  double headway_follow_s = kNoNeighbor;  // to the vehicle behind
  double departure_power_kW = 0.0;
  double scheduled_departure_s = 0.0;
  double progress_rate = 1.0;

  bool operator==(const WaitingTrain&) const = default;
};

struct ScheduleInstance {
  double t_i_s = 0.0;
  // Every vehicle in the substation range; waiting trains contribute 0.
  std::vector<double> running_powers_kW;
  std::vector<WaitingTrain> waiting;
  int newly_available_count = 0;

  void validate() const;
  bool operator==(const ScheduleInstance&) const = default;
};

struct DepartureDecision {
  std::map<TrainId, int> authorizations;
  double total_power_kW = 0.0;
  double overage_kW = 0.0;   // d+
  double underage_kW = 0.0;  // d-
  double objective_value = 0.0;

  int authorized_count() const;
};

// Build-time safety failure: holding a train would let its follower close
// below the minimum headway and departing cannot help either.
class SafetyInfeasibility : public std::runtime_error {
 public:
  SafetyInfeasibility(TrainId train, const std::string& what)
      : std::runtime_error(what), train_(train) {}
  TrainId train() const { return train_; }

 private:
  TrainId train_;
};

// The solver found no assignment meeting every headway row.
class SchedulingFault : public std::runtime_error {
 public:
  SchedulingFault(std::vector<std::string> offending, const std::string& what)
      : std::runtime_error(what), offending_(std::move(offending)) {}
  const std::vector<std::string>& offending_constraints() const {
    return offending_;
  }

 private:
  std::vector<std::string> offending_;
};

// Regenerated magnitude R and authorized departure demand D of a tick.
struct PowerBalance {
  double regenerated_kW = 0.0;
  double departure_demand_kW = 0.0;
  double total_kW = 0.0;
};

PowerBalance power_balance(std::span<const double> running_powers_kW,
                           std::span<const double> candidate_powers_kW,
                           std::span<const std::uint8_t> k);

// Substation total: if regeneration does not exceed the authorized demand,
// everything nets; otherwise departures are fully supplied by regeneration,
// the surplus is lost, and only the traction draws remain.
double total_power(std::span<const double> running_powers_kW,
                   std::span<const double> candidate_powers_kW,
                   std::span<const std::uint8_t> k);

// Variables 0..m-1 are k_j in `instance.waiting` order; slack 0 is d-, slack 1
// is d+.
BipProblem build_problem(const ScheduleInstance& instance,
                         const SchedulerParams& params);

// Objective bonus per authorized departure (w2 + gamma1 + gamma2).
double departure_bonus(const ScheduleInstance& instance,
                       const SchedulerParams& params);

DepartureDecision decide(const ScheduleInstance& instance,
                         const SchedulerParams& params);

// Reference decision by exhaustive enumeration of the same problem.
DepartureDecision decide_exhaustive(const ScheduleInstance& instance,
                                    const SchedulerParams& params);

double total_delay(const ScheduleInstance& instance,
                   const DepartureDecision& decision,
                   const SchedulerParams& params);

// True when `k` meets both headway rows for `train`.
bool headways_hold(const WaitingTrain& train, int k,
                   const SchedulerParams& params);

}  // namespace metro
