#include "metro/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace metro {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_speed(double speed_kmh) {
  if (!(speed_kmh >= 0.0)) {
    throw std::domain_error("speed must be non-negative, got " +
                            std::to_string(speed_kmh));
  }
}

TrainSpec with_segment_gamma(const TrainSpec& spec,
                             const TrackSegment& segment) {
  TrainSpec local = spec;
  local.tunnel_factor = effective_tunnel_factor(spec, segment);
  return local;
}

// Speed-versus-distance-to-go curve obtained by integrating backward in time.
// Distances ascend with speed.
class BackwardCurve {
 public:
  BackwardCurve() = default;
  BackwardCurve(std::vector<double> dist, std::vector<double> speed)
      : dist_(std::move(dist)), speed_(std::move(speed)) {}

  bool empty() const { return dist_.empty(); }
  double start_distance() const { return dist_.front(); }

  // Speed limit at `distance_to_go`; +inf past the end of the table.
  double limit(double distance_to_go) const {
    if (dist_.empty() || distance_to_go > dist_.back()) {
      return std::numeric_limits<double>::infinity();
    }
    if (distance_to_go <= dist_.front()) return speed_.front();
    auto it = std::upper_bound(dist_.begin(), dist_.end(), distance_to_go);
    const std::size_t hi = static_cast<std::size_t>(it - dist_.begin());
    const std::size_t lo = hi - 1;
    const double span = dist_[hi] - dist_[lo];
    const double w = span > 0.0 ? (distance_to_go - dist_[lo]) / span : 0.0;
    return speed_[lo] + w * (speed_[hi] - speed_[lo]);
  }

 private:
  std::vector<double> dist_;
  std::vector<double> speed_;  // km/h
};

// Integrates backward from (start_distance, start_speed) under `decel`
// (m/s^2, positive slows the train going forward) until `stop_speed_kmh` or
// `max_distance` is reached. Returns an empty curve if decel is not positive.
template <typename Decel>
BackwardCurve integrate_backward(double start_distance, double start_speed_kmh,
                                 double stop_speed_kmh, double max_distance,
                                 double dt_s, Decel decel) {
  std::vector<double> dist{start_distance};
  std::vector<double> speed{start_speed_kmh};
  double s = start_distance;
  double v = start_speed_kmh / kKmhPerMs;
  const double v_stop = stop_speed_kmh / kKmhPerMs;
  while (v < v_stop && s < max_distance) {
    const double d = decel(v * kKmhPerMs);
    if (!(d > 0.0)) return {};
    const double v_next = std::min(v + d * dt_s, v_stop);
    s += 0.5 * (v + v_next) * dt_s;
    v = v_next;
    dist.push_back(s);
    speed.push_back(v * kKmhPerMs);
  }
  return {std::move(dist), std::move(speed)};
}

}  // namespace

ForceSpeedEnvelope ForceSpeedEnvelope::from_corner(double base_force_N,
                                                   double base_speed_kmh) {
  return {base_force_N, base_speed_kmh,
          base_force_N * (base_speed_kmh / kKmhPerMs)};
}

void ForceSpeedEnvelope::validate() const {
  require(base_force_N > 0.0, "envelope base_force_N must be positive");
  require(base_speed_kmh > 0.0, "envelope base_speed_kmh must be positive");
  require(max_power_W > 0.0, "envelope max_power_W must be positive");
  const double corner = base_force_N * (base_speed_kmh / kKmhPerMs);
  require(std::abs(corner - max_power_W) <= 1e-9 * max_power_W,
          "envelope is discontinuous at the corner speed");
}

void TrainSpec::validate() const {
  require(mass_tonnes > 0.0, "train mass_tonnes must be positive");
  require(axle_count >= 2, "train axle_count must be at least 2");
  require(car_count >= 1, "train car_count must be at least 1");
  require(frontal_area_m2 > 0.0, "train frontal_area_m2 must be positive");
  require(tunnel_factor >= 1 && tunnel_factor <= 3,
          "train tunnel_factor must be 1, 2 or 3");
  traction_envelope.validate();
  braking_envelope.validate();
  require(max_speed_kmh > 0.0 && std::isfinite(max_speed_kmh),
          "train max_speed_kmh must be positive");
}

TrainSpec TrainSpec::default_metro() {
  TrainSpec spec;
  spec.mass_tonnes = 200.0;
  spec.axle_count = 24;
  spec.car_count = 6;
  spec.frontal_area_m2 = 10.0;
  spec.tunnel_factor = 2;
  spec.traction_envelope = ForceSpeedEnvelope::from_corner(240e3, 30.0);
  spec.braking_envelope = ForceSpeedEnvelope::from_corner(200e3, 40.0);
  spec.max_speed_kmh = 80.0;
  return spec;
}

void TrackSegment::validate() const {
  require(length_m > 0.0, "segment length_m must be positive");
  require(nominal_travel_time_s > 0.0,
          "segment nominal_travel_time_s must be positive");
  require(is_straight() || curve_radius_m > 0.0,
          "segment curve_radius_m must be positive");
  require(std::abs(gradient_angle_rad) < std::numbers::pi / 2.0,
          "segment gradient_angle_rad must lie in (-pi/2, pi/2)");
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kMaxAcceleration: return "MA";
    case Stage::kCruising: return "CR";
    case Stage::kCoasting: return "CO";
    case Stage::kMaxBraking: return "MB";
  }
  return "?";
}

void MotionState::validate() const {
  require(traction_factor >= 0.0 && traction_factor <= 1.0,
          "traction_factor must lie in [0, 1]");
  require(braking_factor >= 0.0 && braking_factor <= 1.0,
          "braking_factor must lie in [0, 1]");
  require(!(traction_factor > 0.0 && braking_factor > 0.0),
          "traction and braking cannot act together");
  switch (stage) {
    case Stage::kMaxAcceleration:
    case Stage::kCruising:
      require(braking_factor == 0.0, "MA/CR stages cannot brake");
      break;
    case Stage::kCoasting:
      require(traction_factor == 0.0 && braking_factor == 0.0,
              "CO stage applies no force");
      break;
    case Stage::kMaxBraking:
      require(traction_factor == 0.0, "MB stage cannot apply traction");
      break;
  }
}

void PowerProfile::validate() const {
  require(dt_s > 0.0, "profile dt_s must be positive");
  require(!samples_kW.empty(), "profile must contain samples");
}

double davis_resistance(const TrainSpec& spec, double speed_kmh) {
  require_speed(speed_kmh);
  const double m = spec.mass_tonnes;
  const double v = speed_kmh;
  return 6.4 * m + 130.0 * spec.axle_count + 0.14 * m * v +
         spec.tunnel_factor * (0.046 + 0.065 * (spec.car_count - 1)) *
             spec.frontal_area_m2 * v * v;
}

double gradient_force(const TrainSpec& spec, const TrackSegment& segment) {
  return spec.mass_kg() * kGravity * std::sin(segment.gradient_angle_rad);
}

double curve_force(const TrainSpec& spec, const TrackSegment& segment) {
  if (segment.is_straight()) return 0.0;
  return (segment.gauge_coefficient / segment.curve_radius_m) * 1e-3 *
         spec.mass_kg() * kGravity;
}

double envelope_force(const ForceSpeedEnvelope& env, double speed_kmh) {
  require_speed(speed_kmh);
  if (speed_kmh <= env.base_speed_kmh) return env.base_force_N;
  return env.max_power_W / (speed_kmh / kKmhPerMs);
}

int effective_tunnel_factor(const TrainSpec& spec,
                            const TrackSegment& segment) {
  return segment.is_tunnel ? spec.tunnel_factor : 1;
}

ForceTerms forces_at(const TrainSpec& spec, const TrackSegment& segment,
                     const MotionState& state) {
  const TrainSpec local = with_segment_gamma(spec, segment);
  ForceTerms f;
  f.traction_N = state.traction_factor *
                 envelope_force(spec.traction_envelope, state.speed_kmh);
  f.braking_N = state.braking_factor *
                envelope_force(spec.braking_envelope, state.speed_kmh);
  f.resistance_N = davis_resistance(local, state.speed_kmh);
  f.gradient_N = gradient_force(spec, segment);
  f.curve_N = curve_force(spec, segment);
  return f;
}

MotionState integrate(const MotionState& state, const ForceTerms& forces,
                      double mass_kg, double max_speed_kmh, double dt_s) {
  require(dt_s > 0.0, "dt_s must be positive");
  const double accel = forces.net() / mass_kg;
  MotionState next = state;
  next.speed_kmh = std::clamp(state.speed_kmh + accel * dt_s * kKmhPerMs, 0.0,
                              max_speed_kmh);
  next.position_m = state.position_m + next.speed_kmh / kKmhPerMs * dt_s;
  return next;
}

MotionState step_motion(const TrainSpec& spec, const TrackSegment& segment,
                        const MotionState& state, double dt_s) {
  return integrate(state, forces_at(spec, segment, state), spec.mass_kg(),
                   spec.max_speed_kmh, dt_s);
}

double envelope_power_W(const ForceSpeedEnvelope& env, double speed_kmh) {
  require_speed(speed_kmh);
  return std::min(env.base_force_N * (speed_kmh / kKmhPerMs), env.max_power_W);
}

double traction_power_W(const MotionState& state, const TrainSpec& spec) {
  if (state.traction_factor > 0.0) {
    return state.traction_factor *
           envelope_power_W(spec.traction_envelope, state.speed_kmh);
  }
  if (state.braking_factor > 0.0) {
    return -state.braking_factor *
           envelope_power_W(spec.braking_envelope, state.speed_kmh);
  }
  return 0.0;
}

void DutyCycleOptions::validate() const {
  require(cruise_speed_fraction > 0.0 && cruise_speed_fraction <= 1.0,
          "cruise_speed_fraction must lie in (0, 1]");
  require(coast_exit_fraction > 0.0 && coast_exit_fraction <= 1.0,
          "coast_exit_fraction must lie in (0, 1]");
  require(comfort_factor > 0.0 && comfort_factor <= 1.0,
          "comfort_factor must lie in (0, 1]");
  require(internal_dt_s > 0.0, "internal_dt_s must be positive");
}

std::size_t DutyCycleRun::count(Stage stage) const {
  return static_cast<std::size_t>(
      std::count(stages.begin(), stages.end(), stage));
}

DutyCycleRun simulate_duty_cycle(const TrainSpec& spec,
                                 const TrackSegment& segment,
                                 const DutyCycleOptions& options) {
  spec.validate();
  segment.validate();
  options.validate();

  const TrainSpec local = with_segment_gamma(spec, segment);
  const double mass = spec.mass_kg();
  const double fixed_resist =
      gradient_force(spec, segment) + curve_force(spec, segment);
  const double length = segment.length_m;
  const double dt = options.internal_dt_s;
  const double alpha_max = options.comfort_factor;

  if (alpha_max * envelope_force(spec.traction_envelope, 0.0) <=
      davis_resistance(local, 0.0) + fixed_resist) {
    throw InfeasibleSegment(
        "traction at standstill does not exceed the resistance on this "
        "segment");
  }

  const double v_cruise = options.cruise_speed_fraction * spec.max_speed_kmh;
  const double v_coast_exit = options.coast_exit_fraction * v_cruise;

  auto coast_decel = [&](double v_kmh) {
    return (davis_resistance(local, v_kmh) + fixed_resist) / mass;
  };
  auto brake_decel = [&](double v_kmh) {
    return (envelope_force(spec.braking_envelope, v_kmh) +
            davis_resistance(local, v_kmh) + fixed_resist) /
           mass;
  };

  // Backward curves use a finer step than the forward run.
  const double back_dt = dt / 20.0;
  const BackwardCurve braking = integrate_backward(
      0.0, 0.0, spec.max_speed_kmh, length, back_dt, brake_decel);
  if (braking.empty()) {
    throw InfeasibleSegment("braking cannot stop the train on this segment");
  }
  const double brake_start = [&] {
    // Distance needed to brake from the coast exit speed.
    double lo = 0.0, hi = length;
    if (braking.limit(hi) < v_coast_exit) return hi;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (braking.limit(mid) < v_coast_exit ? lo : hi) = mid;
    }
    return hi;
  }();
  const BackwardCurve coasting =
      brake_start < length
          ? integrate_backward(brake_start, v_coast_exit, spec.max_speed_kmh,
                               length, back_dt, coast_decel)
          : BackwardCurve{};

  auto coast_limit = [&](double to_go) {
    if (coasting.empty() || to_go < coasting.start_distance()) {
      return std::numeric_limits<double>::infinity();
    }
    return coasting.limit(to_go);
  };

  DutyCycleRun run;
  run.dt_s = dt;
  MotionState state;
  state.stage = Stage::kMaxAcceleration;
  constexpr std::size_t kMaxSteps = 1'000'000;

  for (std::size_t step = 0;; ++step) {
    if (step >= kMaxSteps) {
      throw InfeasibleSegment("duty cycle did not terminate");
    }
    const double to_go = length - state.position_m;
    const double v = state.speed_kmh;

    if (state.stage != Stage::kMaxBraking && v >= braking.limit(to_go)) {
      state.stage = Stage::kMaxBraking;
    } else if ((state.stage == Stage::kMaxAcceleration ||
                state.stage == Stage::kCruising) &&
               v >= coast_limit(to_go)) {
      state.stage = Stage::kCoasting;
    } else if (state.stage == Stage::kMaxAcceleration && v >= v_cruise) {
      state.stage = Stage::kCruising;
    }

    if (state.stage == Stage::kMaxBraking && v <= 0.0) break;
    if (state.stage != Stage::kMaxAcceleration && v <= 0.0) {
      throw InfeasibleSegment("train stalls before reaching the station");
    }

    switch (state.stage) {
      case Stage::kMaxAcceleration:
        state.traction_factor = alpha_max;
        state.braking_factor = 0.0;
        break;
      case Stage::kCruising: {
        const double needed = davis_resistance(local, v) + fixed_resist;
        state.traction_factor = std::clamp(
            needed / envelope_force(spec.traction_envelope, v), 0.0,
            alpha_max);
        state.braking_factor = 0.0;
        break;
      }
      case Stage::kCoasting:
        state.traction_factor = 0.0;
        state.braking_factor = 0.0;
        break;
      case Stage::kMaxBraking:
        state.traction_factor = 0.0;
        state.braking_factor = 1.0;
        break;
    }

    run.power_W.push_back(traction_power_W(state, spec));
    run.stages.push_back(state.stage);
    state = step_motion(spec, segment, state, dt);
    run.peak_speed_kmh = std::max(run.peak_speed_kmh, state.speed_kmh);
  }

  run.final_position_m = state.position_m;
  run.final_speed_kmh = state.speed_kmh;
  return run;
}

PowerProfile downsample_peak(const DutyCycleRun& run, double dt_s) {
  require(dt_s > 0.0, "dt_s must be positive");
  PowerProfile out;
  out.dt_s = dt_s;
  for (std::size_t i = 0; i < run.power_W.size(); ++i) {
    const auto bucket = static_cast<std::size_t>(
        std::floor(static_cast<double>(i) * run.dt_s / dt_s + 1e-9));
    const double kw = run.power_W[i] / 1000.0;
    if (bucket >= out.samples_kW.size()) {
      out.samples_kW.resize(bucket + 1, 0.0);
      out.samples_kW[bucket] = kw;
    } else if (std::abs(kw) > std::abs(out.samples_kW[bucket])) {
      out.samples_kW[bucket] = kw;
    }
  }
  if (out.samples_kW.empty()) out.samples_kW.push_back(0.0);
  return out;
}

PowerProfile generate_segment_profile(const TrainSpec& spec,
                                      const TrackSegment& segment, double dt_s,
                                      const DutyCycleOptions& options) {
  require(dt_s > 0.0, "dt_s must be positive");
  return downsample_peak(simulate_duty_cycle(spec, segment, options), dt_s);
}

}  // namespace metro
