#include "metro/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <sstream>

namespace metro {
namespace {

constexpr double kTimeTol = 1e-9;

bool is_multiple(double value, double step) {
  const double ratio = value / step;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio);
}

std::size_t ticks_in(double span_s, double tick_s) {
  return static_cast<std::size_t>(std::llround(span_s / tick_s));
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ScenarioError(key, what);
}

void check_times(const std::vector<double>& times, const std::string& key,
                 double tick_s) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::string item = key + "[" + std::to_string(i) + "]";
    check(times[i] > 0.0, item, "must be positive");
    check(is_multiple(times[i], tick_s), item,
          "must be a multiple of scenario.tick_s");
  }
}

TrackSegment default_segment(double travel_s) {
  TrackSegment seg;
  seg.length_m = 12.0 * travel_s;
  seg.nominal_travel_time_s = travel_s;
  return seg;
}

PowerProfile leg_profile(const Scenario& s, const TrackSegment* segment,
                         double travel_s) {
  if (s.profile_mode == ProfileMode::kFixedProfile) {
    return scale_profile({s.tick_s, s.per_train_profile_kW}, travel_s,
                         s.tick_s);
  }
  const TrackSegment seg = segment ? *segment : default_segment(travel_s);
  return scale_profile(
      generate_segment_profile(s.train, seg, s.tick_s, s.duty_cycle), travel_s,
      s.tick_s);
}

}  // namespace

const char* policy_name(Policy policy) {
  return policy == Policy::kPReS ? "pres" : "fixed";
}

const char* profile_mode_name(ProfileMode mode) {
  return mode == ProfileMode::kPhysics ? "physics" : "fixed_profile";
}

void Scenario::validate() const {
  check(tick_s > 0.0, "scenario.tick_s", "must be positive");
  check(stations.size() >= 2, "scenario.stations",
        "needs at least two stations");
  check(up_segment_times_s.size() == stations.size() - 1,
        "scenario.up_segment_times_s", "needs one time per station gap");
  check(down_segment_times_s.size() == stations.size() - 1,
        "scenario.down_segment_times_s", "needs one time per station gap");
  check_times(up_segment_times_s, "scenario.up_segment_times_s", tick_s);
  check_times(down_segment_times_s, "scenario.down_segment_times_s", tick_s);
  check(out_of_range_time_s > 0.0, "scenario.out_of_range_time_s",
        "must be positive");
  check(is_multiple(out_of_range_time_s, tick_s), "scenario.out_of_range_time_s",
        "must be a multiple of scenario.tick_s");
  check(dispatch_headway_s > 0.0, "scenario.dispatch_headway_s",
        "must be positive");
  check(min_headway_s > 0.0, "scenario.min_headway_s", "must be positive");
  check(dispatch_headway_s >= min_headway_s, "scenario.dispatch_headway_s",
        "must be at least scenario.min_headway_s");
  check(dwell_time_s >= tick_s, "scenario.dwell_time_s",
        "must be at least scenario.tick_s");
  check(sim_duration_s > 0.0, "scenario.sim_duration_s", "must be positive");

  check(!per_train_profile_kW.empty(), "scenario.per_train_profile_kW",
        "must not be empty");
  bool seen_nonpositive = false;
  for (double p : per_train_profile_kW) {
    check(std::isfinite(p), "scenario.per_train_profile_kW",
          "must be finite");
    if (p < 0.0) seen_nonpositive = true;
    check(!(seen_nonpositive && p > 0.0), "scenario.per_train_profile_kW",
          "must be a nonnegative prefix followed by a nonpositive suffix");
  }
  check(per_train_profile_kW.front() > 0.0, "scenario.per_train_profile_kW",
        "first sample (the departure estimate) must be positive");

  try {
    scheduler_params.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("scheduler", e.what());
  }
  check(scheduler_params.h_min_s == min_headway_s, "scheduler.h_min_s",
        "must equal scenario.min_headway_s");
  check(scheduler_params.dt_s == tick_s, "scheduler.dt_s",
        "must equal scenario.tick_s");
  if (reporting_threshold_kW) {
    check(*reporting_threshold_kW >= 0.0, "scenario.reporting_threshold_kW",
          "must be non-negative");
  }

  if (profile_mode == ProfileMode::kPhysics) {
    try {
      train.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("train", e.what());
    }
    try {
      duty_cycle.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("train", e.what());
    }
    auto check_segments = [&](const std::vector<TrackSegment>& segs,
                              const std::vector<double>& times,
                              const std::string& key) {
      if (segs.empty()) return;
      check(segs.size() == times.size(), key,
            "needs one segment per station gap");
      for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string item = key + "[" + std::to_string(i) + "]";
        try {
          segs[i].validate();
        } catch (const std::invalid_argument& e) {
          throw ScenarioError(item, e.what());
        }
        check(segs[i].nominal_travel_time_s == times[i],
              item + ".nominal_travel_time_s",
              "must match the scenario segment time");
      }
    };
    check_segments(up_segments, up_segment_times_s, "segments.up");
    check_segments(down_segments, down_segment_times_s, "segments.down");
  }
}

std::string scenario_fingerprint(const Scenario& s) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const auto& v) {
    os << "[";
    for (const auto& x : v) os << x << ",";
    os << "]";
  };
  list(s.stations);
  list(s.up_segment_times_s);
  list(s.down_segment_times_s);
  os << s.out_of_range_time_s << "|" << s.dispatch_headway_s << "|"
     << s.min_headway_s << "|" << s.dwell_time_s << "|" << s.tick_s << "|"
     << s.sim_duration_s << "|";
  list(s.per_train_profile_kW);
  const auto& p = s.scheduler_params;
  os << profile_mode_name(s.profile_mode) << "|" << p.w1 << "|" << p.w2 << "|"
     << p.gamma1_value << "|" << p.gamma2_per_new_train << "|"
     << p.p_threshold_kW << "|" << s.rng_seed;
  if (s.profile_mode == ProfileMode::kPhysics) {
    const auto& t = s.train;
    os << "|" << t.mass_tonnes << "," << t.axle_count << "," << t.car_count
       << "," << t.frontal_area_m2 << "," << t.tunnel_factor << ","
       << t.traction_envelope.base_force_N << ","
       << t.traction_envelope.base_speed_kmh << ","
       << t.braking_envelope.base_force_N << ","
       << t.braking_envelope.base_speed_kmh << "," << t.max_speed_kmh;
    const auto& d = s.duty_cycle;
    os << "|" << d.cruise_speed_fraction << "," << d.coast_exit_fraction << ","
       << d.comfort_factor << "," << d.internal_dt_s;
    for (const auto* segs : {&s.up_segments, &s.down_segments}) {
      os << "|";
      for (const auto& g : *segs) {
        os << g.length_m << "," << g.gradient_angle_rad << ","
           << g.curve_radius_m << "," << g.gauge_coefficient << ","
           << g.is_tunnel << "," << g.nominal_travel_time_s << ";";
      }
    }
  }
  return os.str();
}

PowerProfile scale_profile(const PowerProfile& profile, double segment_time_s,
                           double tick_s) {
  profile.validate();
  if (!(tick_s > 0.0)) throw std::invalid_argument("tick_s must be positive");
  if (segment_time_s < tick_s) {
    throw std::invalid_argument("segment time " +
                                std::to_string(segment_time_s) +
                                "s is shorter than one tick");
  }
  if (!is_multiple(segment_time_s, tick_s)) {
    throw std::invalid_argument("segment time must be a multiple of the tick");
  }
  const std::size_t n = ticks_in(segment_time_s, tick_s);
  const std::size_t m = profile.samples_kW.size();
  PowerProfile out;
  out.dt_s = tick_s;
  out.samples_kW.reserve(n);
  for (std::size_t tau = 0; tau < n; ++tau) {
    std::size_t src = 0;
    if (n > 1) {
      src = static_cast<std::size_t>(std::llround(
          static_cast<double>(tau) * static_cast<double>(m - 1) /
          static_cast<double>(n - 1)));
    }
    out.samples_kW.push_back(profile.samples_kW[src]);
  }
  return out;
}

Route build_route(const Scenario& s) {
  s.validate();
  Route route;
  const std::size_t gaps = s.stations.size() - 1;
  const bool physics = s.profile_mode == ProfileMode::kPhysics;
  double progress = 0.0;
  auto add = [&](Leg leg) {
    leg.start_progress_s = progress;
    progress += leg.travel_s;
    route.legs.push_back(std::move(leg));
  };
  for (std::size_t i = 0; i < gaps; ++i) {
    const double travel = s.up_segment_times_s[i];
    const TrackSegment* seg =
        physics && !s.up_segments.empty() ? &s.up_segments[i] : nullptr;
    add({s.stations[i], s.stations[i + 1], travel, true, 0.0,
         leg_profile(s, seg, travel)});
  }
  route.up_leg_count = gaps;
  add({s.stations.back(), s.stations.back(), s.out_of_range_time_s, false,
       0.0, {}});
  for (std::size_t i = 0; i < gaps; ++i) {
    const double travel = s.down_segment_times_s[i];
    const TrackSegment* seg =
        physics && !s.down_segments.empty() ? &s.down_segments[i] : nullptr;
    add({s.stations[gaps - i], s.stations[gaps - i - 1], travel, true, 0.0,
         leg_profile(s, seg, travel)});
  }
  for (const auto& leg : route.legs) {
    if (leg.in_range && !(leg.profile.samples_kW.front() > 0.0)) {
      throw ScenarioError("scenario.per_train_profile_kW",
                          "departure power estimate for " + leg.from + "->" +
                              leg.to + " is not positive");
    }
  }
  return route;
}

Timetable make_timetable(const Route& route, double launch_s,
                         double dwell_time_s) {
  Timetable tt;
  double t = launch_s;
  for (std::size_t i = 0; i < route.legs.size(); ++i) {
    tt.departures_s.push_back(t);
    t += route.legs[i].travel_s;
    if (i + 1 < route.legs.size()) t += dwell_time_s;
  }
  tt.completion_s = t;
  return tt;
}

Direction TrainRun::direction(const Route& route) const {
  const std::size_t leg = std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AtStation>) return p.next_leg;
        else if constexpr (std::is_same_v<T, Done>) return SIZE_MAX;
        else return p.leg;
      },
      phase);
  return leg <= route.up_leg_count ? Direction::kUp : Direction::kDown;
}

int SimTrace::completed_count() const {
  return static_cast<int>(std::count_if(
      trains.begin(), trains.end(),
      [](const TrainSummary& t) { return t.complete_s.has_value(); }));
}

std::optional<double> min_adjacent_headway(const TickRecord& tick) {
  std::optional<double> best;
  const TrainTickSample* prev = nullptr;
  for (const auto& s : tick.trains) {
    if (!s.on_line) continue;
    if (prev != nullptr) {
      const double gap = prev->progress_s - s.progress_s;
      if (!best || gap < *best) best = gap;
    }
    prev = &s;
  }
  return best;
}

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)),
      params_(scenario_.scheduler_params),
      route_(build_route(scenario_)) {
  tick_count_ = static_cast<std::size_t>(
                    std::floor(scenario_.sim_duration_s / scenario_.tick_s +
                               kTimeTol)) +
                1;
  trace_.policy = scenario_.policy;
  trace_.tick_s = scenario_.tick_s;
  trace_.sim_duration_s = scenario_.sim_duration_s;
  trace_.p_threshold_kW = params_.p_threshold_kW;
  trace_.h_min_s = params_.h_min_s;
  trace_.scenario_fingerprint = scenario_fingerprint(scenario_);
  trace_.ticks.reserve(tick_count_);
}

double Simulator::time_s() const {
  return static_cast<double>(tick_index_) * scenario_.tick_s;
}

void Simulator::process_arrivals(double t) {
  for (auto& train : trains_) {
    std::size_t arrived_leg = SIZE_MAX;
    if (const auto* on = std::get_if<OnSegment>(&train.phase)) {
      if (on->elapsed_ticks ==
          ticks_in(route_.legs[on->leg].travel_s, scenario_.tick_s)) {
        arrived_leg = on->leg;
      }
    } else if (const auto* out = std::get_if<OutOfRange>(&train.phase)) {
      if (out->remaining_s <= kTimeTol) arrived_leg = out->leg;
    }
    if (arrived_leg == SIZE_MAX) continue;
    const Leg& leg = route_.legs[arrived_leg];
    train.route_position_s = leg.start_progress_s + leg.travel_s;
    if (arrived_leg + 1 == route_.legs.size()) {
      train.phase = Done{t};
    } else {
      train.phase = AtStation{arrived_leg + 1, t + scenario_.dwell_time_s};
    }
  }
}

void Simulator::launch_if_due(double t) {
  if (next_launch_s_ >= scenario_.sim_duration_s - kTimeTol) return;
  if (t + kTimeTol < next_launch_s_) return;
  TrainRun train;
  train.train_id = static_cast<TrainId>(trains_.size());
  train.launch_s = t;
  train.phase = AtStation{0, t};
  const Timetable tt = make_timetable(route_, t, scenario_.dwell_time_s);
  train.scheduled_departures_s = tt.departures_s;
  train.scheduled_completion_s = tt.completion_s;
  trains_.push_back(std::move(train));
  next_launch_s_ += scenario_.dispatch_headway_s;
}

std::optional<std::size_t> Simulator::leader_of(std::size_t index) const {
  for (std::size_t i = index; i-- > 0;) {
    if (!trains_[i].done()) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Simulator::follower_of(std::size_t index) const {
  for (std::size_t i = index + 1; i < trains_.size(); ++i) {
    if (trains_[i].done()) continue;
    if (!trains_[i].departed_origin) return std::nullopt;
    return i;
  }
  return std::nullopt;
}

std::vector<Simulator::Candidate> Simulator::collect_candidates(
    double t) const {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < trains_.size(); ++i) {
    const TrainRun& train = trains_[i];
    const auto* at = std::get_if<AtStation>(&train.phase);
    if (at == nullptr) continue;
    const double scheduled = train.scheduled_departures_s[at->next_leg];
    if (t + kTimeTol < at->ready_s || t + kTimeTol < scheduled) continue;

    WaitingTrain w;
    w.train_id = train.train_id;
    w.scheduled_departure_s = scheduled;
    if (auto lead = leader_of(i)) {
      const TrainRun& leader = trains_[*lead];
      // Trains leave the origin in launch order.
      if (!leader.departed_origin) continue;
      w.headway_lead_s = leader.route_position_s - train.route_position_s;
      if (!train.departed_origin && w.headway_lead_s < params_.h_min_s) {
        continue;
      }
    }
    if (auto follow = follower_of(i)) {
      w.headway_follow_s =
          train.route_position_s - trains_[*follow].route_position_s;
    }
    const Leg& next = route_.legs[at->next_leg];
    w.departure_power_kW = next.in_range ? next.profile.samples_kW.front() : 0.0;
    const bool newly =
        std::abs(t - std::max(at->ready_s, scheduled)) <= kTimeTol;
    out.push_back({i, w, newly});
  }
  return out;
}

void Simulator::depart(std::size_t index, double t) {
  TrainRun& train = trains_[index];
  const std::size_t leg = std::get<AtStation>(train.phase).next_leg;
  train.actual_departures_s.push_back(t);
  train.departed_origin = true;
  if (route_.legs[leg].in_range) {
    train.phase = OnSegment{leg, 0};
  } else {
    train.phase = OutOfRange{leg, route_.legs[leg].travel_s};
  }
}

void Simulator::advance() {
  const double tick = scenario_.tick_s;
  for (auto& train : trains_) {
    if (auto* on = std::get_if<OnSegment>(&train.phase)) {
      ++on->elapsed_ticks;
      train.route_position_s += tick;
    } else if (auto* out = std::get_if<OutOfRange>(&train.phase)) {
      out->remaining_s -= tick;
      train.route_position_s += tick;
    }
  }
}

void Simulator::record_fault_and_abort(const std::string& what) {
  trace_.faults.push_back(what);
  finalize_trace();
  throw SimulationAborted(what);
}

void Simulator::step() {
  if (finished()) throw std::logic_error("simulation already finished");
  const double t = time_s();

  process_arrivals(t);
  launch_if_due(t);

  TickRecord rec;
  rec.time_s = t;

  // Running powers of every in-range train; station trains contribute 0.
  std::vector<double> running;
  std::vector<double> power_of(trains_.size(), 0.0);
  for (std::size_t i = 0; i < trains_.size(); ++i) {
    const TrainRun& train = trains_[i];
    if (const auto* on = std::get_if<OnSegment>(&train.phase)) {
      power_of[i] = route_.legs[on->leg].profile.samples_kW[on->elapsed_ticks];
      running.push_back(power_of[i]);
    } else if (std::holds_alternative<AtStation>(train.phase)) {
      running.push_back(0.0);
    }
  }

  const std::vector<Candidate> candidates = collect_candidates(t);
  std::vector<const Candidate*> scheduled, excursion;
  for (const auto& c : candidates) {
    (c.waiting.departure_power_kW > 0.0 ? scheduled : excursion).push_back(&c);
  }

  auto safe_or_abort = [&](const WaitingTrain& w) -> bool {
    if (headways_hold(w, 1, params_)) return true;
    if (headways_hold(w, 0, params_)) return false;
    record_fault_and_abort(
        "t=" + std::to_string(t) + "s: train " + std::to_string(w.train_id) +
        " can neither depart nor hold without breaking the minimum headway");
    return false;
  };

  std::vector<std::size_t> departing;
  for (const Candidate* c : excursion) {
    if (safe_or_abort(c->waiting)) departing.push_back(c->index);
  }

  ScheduleInstance& instance = rec.instance;
  instance.t_i_s = t;
  instance.running_powers_kW = running;
  for (const Candidate* c : scheduled) {
    instance.waiting.push_back(c->waiting);
    if (c->newly_available) ++instance.newly_available_count;
  }

  std::vector<std::uint8_t> k(scheduled.size(), 0);
  if (scenario_.policy == Policy::kFixedTimetable) {
    for (std::size_t j = 0; j < scheduled.size(); ++j) {
      k[j] = safe_or_abort(scheduled[j]->waiting) ? 1 : 0;
    }
  } else {
    DepartureDecision decision;
    try {
      decision = decide(instance, params_);
    } catch (const SafetyInfeasibility& e) {
      record_fault_and_abort("t=" + std::to_string(t) + "s: " + e.what());
    } catch (const SchedulingFault& e) {
      record_fault_and_abort(e.what());
    }
    for (std::size_t j = 0; j < scheduled.size(); ++j) {
      k[j] = static_cast<std::uint8_t>(
          decision.authorizations.at(scheduled[j]->waiting.train_id));
    }
    rec.objective_value = decision.objective_value;
  }

  std::vector<double> candidate_powers;
  for (const Candidate* c : scheduled) {
    candidate_powers.push_back(c->waiting.departure_power_kW);
  }
  const PowerBalance balance = power_balance(running, candidate_powers, k);
  rec.total_power_kW = balance.total_kW;
  rec.regenerated_kW = balance.regenerated_kW;
  rec.departure_demand_kW = balance.departure_demand_kW;
  const double gap = params_.p_threshold_kW - balance.total_kW;
  rec.d_minus_kW = gap > 0.0 ? gap : 0.0;
  rec.d_plus_kW = gap < 0.0 ? -gap : 0.0;
  rec.waiting_count = static_cast<int>(scheduled.size());
  rec.newly_available_count = instance.newly_available_count;
  for (std::size_t j = 0; j < scheduled.size(); ++j) {
    if (!k[j]) continue;
    ++rec.authorized_count;
    departing.push_back(scheduled[j]->index);
    power_of[scheduled[j]->index] = candidate_powers[j];
  }
  rec.authorizations = k;

  for (std::size_t i = 0; i < trains_.size(); ++i) {
    const TrainRun& train = trains_[i];
    if (train.done()) continue;
    rec.trains.push_back({train.train_id, power_of[i], train.route_position_s,
                          train.departed_origin});
  }

  std::sort(departing.begin(), departing.end());
  for (std::size_t index : departing) depart(index, t);
  trace_.ticks.push_back(std::move(rec));

  advance();
  ++tick_index_;
  if (finished()) finalize_trace();
}

void Simulator::finalize_trace() {
  trace_.trains.clear();
  for (const auto& train : trains_) {
    TrainSummary s;
    s.train_id = train.train_id;
    s.launch_s = train.launch_s;
    if (const auto* done = std::get_if<Done>(&train.phase)) {
      s.complete_s = done->completed_s;
    }
    s.scheduled_completion_s = train.scheduled_completion_s;
    s.scheduled_departures_s = train.scheduled_departures_s;
    s.actual_departures_s = train.actual_departures_s;
    trace_.trains.push_back(std::move(s));
  }
}

SimTrace Simulator::run_to_end() {
  while (!finished()) step();
  return trace_;
}

SimTrace run(const Scenario& scenario) {
  return Simulator(scenario).run_to_end();
}

}  // namespace metro
