#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "metro/dynamics.hpp"
#include "metro/scheduler.hpp"

namespace metro {

enum class Policy { kFixedTimetable, kPReS };
enum class ProfileMode { kFixedProfile, kPhysics };

const char* policy_name(Policy policy);
const char* profile_mode_name(ProfileMode mode);

// Invalid scenario value; `key()` is the dotted config path of the offender.
class ScenarioError : public std::invalid_argument {
 public:
  ScenarioError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// A run that cannot continue safely, e.g. a held train whose follower would
// close below the minimum headway.
class SimulationAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::vector<std::string> stations{"A", "B", "C", "D"};
  std::vector<double> up_segment_times_s{180, 120, 150};
  std::vector<double> down_segment_times_s{150, 120, 180};
  double out_of_range_time_s = 1080;
  double dispatch_headway_s = 360;
  double min_headway_s = 180;
  double dwell_time_s = 60;
  double tick_s = 10;
  double sim_duration_s = 20000;
  std::vector<double> per_train_profile_kW{10e3, 8e3, 8e3, 2e3, 2e3,  3e3, 2e3,
                                           2e3,  2e3, 0.0, -6e3, -8e3, -4e3};
  ProfileMode profile_mode = ProfileMode::kFixedProfile;
  SchedulerParams scheduler_params;
  Policy policy = Policy::kPReS;
  std::uint64_t rng_seed = 0;
  std::optional<double> reporting_threshold_kW;  // defaults to P_th

  // Used only in physics mode. Empty segment lists get flat, straight
  // geometry sized from the segment times.
  TrainSpec train = TrainSpec::default_metro();
  DutyCycleOptions duty_cycle;
  std::vector<TrackSegment> up_segments;
  std::vector<TrackSegment> down_segments;

  // Throws ScenarioError naming the offending key.
  void validate() const;
  double reporting_threshold() const {
    return reporting_threshold_kW.value_or(scheduler_params.p_threshold_kW);
  }
  bool operator==(const Scenario&) const = default;
};

// Every field except the policy, printed at full precision. Two traces are
// comparable when their fingerprints match.
std::string scenario_fingerprint(const Scenario& scenario);

// Resamples a template to segment_time_s / tick_s samples by nearest-sample
// lookup on normalized time.
PowerProfile scale_profile(const PowerProfile& profile, double segment_time_s,
                           double tick_s);

struct Leg {
  std::string from;
  std::string to;
  double travel_s = 0.0;
  bool in_range = true;  // false for the excursion outside the substation
  double start_progress_s = 0.0;
  PowerProfile profile;  // one sample per tick; empty when out of range
};

// Journey: up legs, the out-of-range excursion, then down legs.
struct Route {
  std::vector<Leg> legs;
  std::size_t up_leg_count = 0;
};

Route build_route(const Scenario& scenario);

// Scheduled departure from each leg's origin plus the scheduled completion.
struct Timetable {
  std::vector<double> departures_s;
  double completion_s = 0.0;
};

Timetable make_timetable(const Route& route, double launch_s,
                         double dwell_time_s);

enum class Direction { kUp, kDown };

struct AtStation {
  std::size_t next_leg = 0;
  double ready_s = 0.0;  // dwell requirement complete
};
struct OnSegment {
  std::size_t leg = 0;
  std::size_t elapsed_ticks = 0;
};
struct OutOfRange {
  std::size_t leg = 0;
  double remaining_s = 0.0;
};
struct Done {
  double completed_s = 0.0;
};
using Phase = std::variant<AtStation, OnSegment, OutOfRange, Done>;

struct TrainRun {
  TrainId train_id = 0;
  Phase phase;
  double launch_s = 0.0;
  std::vector<double> scheduled_departures_s;
  std::vector<double> actual_departures_s;
  double scheduled_completion_s = 0.0;
  double route_position_s = 0.0;  // nominal travel seconds from origin
  bool departed_origin = false;

  bool done() const { return std::holds_alternative<Done>(phase); }
  Direction direction(const Route& route) const;
};

struct TrainTickSample {
  TrainId train_id = 0;
  double power_kW = 0.0;
  double progress_s = 0.0;
  bool on_line = false;  // departed the origin and not yet finished

  bool operator==(const TrainTickSample&) const = default;
};

struct TickRecord {
  double time_s = 0.0;
  double total_power_kW = 0.0;
  double regenerated_kW = 0.0;       // R
  double departure_demand_kW = 0.0;  // D
  int waiting_count = 0;
  int authorized_count = 0;
  int newly_available_count = 0;
  double d_plus_kW = 0.0;
  double d_minus_kW = 0.0;
  std::vector<TrainTickSample> trains;
  // Decision problem of the tick and its authorization vector (instance
  // order); empty instance when no train waited.
  ScheduleInstance instance;
  std::vector<std::uint8_t> authorizations;
  std::optional<double> objective_value;  // PReS only
};

struct TrainSummary {
  TrainId train_id = 0;
  double launch_s = 0.0;
  std::optional<double> complete_s;
  double scheduled_completion_s = 0.0;
  std::vector<double> scheduled_departures_s;
  std::vector<double> actual_departures_s;

  std::optional<double> travel_s() const {
    if (!complete_s) return std::nullopt;
    return *complete_s - launch_s;
  }
};

struct SimTrace {
  Policy policy = Policy::kFixedTimetable;
  double tick_s = 0.0;
  double sim_duration_s = 0.0;
  double p_threshold_kW = 0.0;
  double h_min_s = 0.0;
  std::string scenario_fingerprint;
  std::vector<TickRecord> ticks;
  std::vector<TrainSummary> trains;
  std::vector<std::string> faults;

  int launch_count() const { return static_cast<int>(trains.size()); }
  int completed_count() const;
};

// One scenario run, advanced a tick at a time.
class Simulator {
 public:
  explicit Simulator(Scenario scenario);

  bool finished() const { return tick_index_ >= tick_count_; }
  double time_s() const;
  void step();
  SimTrace run_to_end();

  const std::vector<TrainRun>& trains() const { return trains_; }
  const SimTrace& trace() const { return trace_; }
  const Route& route() const { return route_; }

 private:
  struct Candidate {
    std::size_t index;  // into trains_
    WaitingTrain waiting;
    bool newly_available;
  };

  void process_arrivals(double t);
  void launch_if_due(double t);
  std::vector<Candidate> collect_candidates(double t) const;
  void depart(std::size_t index, double t);
  void advance();
  std::optional<std::size_t> leader_of(std::size_t index) const;
  std::optional<std::size_t> follower_of(std::size_t index) const;
  void record_fault_and_abort(const std::string& what);
  void finalize_trace();

  Scenario scenario_;
  SchedulerParams params_;
  Route route_;
  std::vector<TrainRun> trains_;
  SimTrace trace_;
  std::size_t tick_index_ = 0;
  std::size_t tick_count_ = 0;
  double next_launch_s_ = 0.0;
};

SimTrace run(const Scenario& scenario);

// Smallest headway between adjacent on-line trains at a tick; nullopt when
// fewer than two trains are on the line.
std::optional<double> min_adjacent_headway(const TickRecord& tick);

}  // namespace metro
