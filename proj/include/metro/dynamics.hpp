#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace metro {

inline constexpr double kGravity = 9.80665;  // m/s^2
inline constexpr double kKmhPerMs = 3.6;

// Raised when a segment cannot be traversed with the given rolling stock.
class InfeasibleSegment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Maximum tractive (or braking) force as a function of speed: constant up to
// the corner speed, then limited by constant power.
struct ForceSpeedEnvelope {
  double base_force_N = 0.0;
  double base_speed_kmh = 0.0;
  double max_power_W = 0.0;

  // Builds an envelope whose power cap is continuous with the corner.
  static ForceSpeedEnvelope from_corner(double base_force_N,
                                        double base_speed_kmh);

  void validate() const;
  bool operator==(const ForceSpeedEnvelope&) const = default;
};

struct TrainSpec {
  double mass_tonnes = 0.0;
  int axle_count = 0;
  int car_count = 0;
  double frontal_area_m2 = 0.0;
  int tunnel_factor = 2;  // Davis gamma applied on tunnel segments
  ForceSpeedEnvelope traction_envelope;
  ForceSpeedEnvelope braking_envelope;
  double max_speed_kmh = 0.0;

  double mass_kg() const { return 1000.0 * mass_tonnes; }
  void validate() const;
  bool operator==(const TrainSpec&) const = default;

  // A six-car metro consist used when a scenario does not describe one.
  static TrainSpec default_metro();
};

struct TrackSegment {
  static constexpr double kStraight = std::numeric_limits<double>::infinity();

  double length_m = 0.0;
  double gradient_angle_rad = 0.0;
  double curve_radius_m = kStraight;
  double gauge_coefficient = 750.0;
  bool is_tunnel = false;
  double nominal_travel_time_s = 0.0;

  bool is_straight() const { return curve_radius_m == kStraight; }
  void validate() const;
  bool operator==(const TrackSegment&) const = default;
};

enum class Stage { kMaxAcceleration, kCruising, kCoasting, kMaxBraking };

const char* stage_name(Stage stage);

struct MotionState {
  double position_m = 0.0;
  double speed_kmh = 0.0;
  Stage stage = Stage::kMaxAcceleration;
  double traction_factor = 0.0;
  double braking_factor = 0.0;

  void validate() const;
};

struct PowerProfile {
  double dt_s = 0.0;
  std::vector<double> samples_kW;  // negative = regenerative

  void validate() const;
  bool operator==(const PowerProfile&) const = default;
};

// Davis resistance to motion. Mass in tonnes and speed in km/h give Newtons.
// The Davis gamma is taken from spec.tunnel_factor as-is.
double davis_resistance(const TrainSpec& spec, double speed_kmh);

double gradient_force(const TrainSpec& spec, const TrackSegment& segment);
double curve_force(const TrainSpec& spec, const TrackSegment& segment);
double envelope_force(const ForceSpeedEnvelope& env, double speed_kmh);
// Force times speed, capped at max_power_W.
double envelope_power_W(const ForceSpeedEnvelope& env, double speed_kmh);

// Davis gamma that applies to `segment`: the train's tunnel factor inside a
// tunnel, 1 in the open.
int effective_tunnel_factor(const TrainSpec& spec, const TrackSegment& segment);

// Individual force terms acting on the train, all in Newtons. Resistances are
// positive when they oppose forward motion.
struct ForceTerms {
  double traction_N = 0.0;
  double braking_N = 0.0;
  double resistance_N = 0.0;
  double gradient_N = 0.0;
  double curve_N = 0.0;

  double net() const {
    return traction_N - braking_N - resistance_N - gradient_N - curve_N;
  }
};

ForceTerms forces_at(const TrainSpec& spec, const TrackSegment& segment,
                     const MotionState& state);

// Semi-implicit Euler: speed first, then position with the new speed. Speed
// is clamped to [0, max_speed_kmh].
MotionState integrate(const MotionState& state, const ForceTerms& forces,
                      double mass_kg, double max_speed_kmh, double dt_s);

MotionState step_motion(const TrainSpec& spec, const TrackSegment& segment,
                        const MotionState& state, double dt_s);

double traction_power_W(const MotionState& state, const TrainSpec& spec);

struct DutyCycleOptions {
  double cruise_speed_fraction = 0.9;  // of max_speed_kmh
  double coast_exit_fraction = 0.8;    // coasting ends at this share of cruise
  double comfort_factor = 1.0;         // scales alpha
  double internal_dt_s = 1.0;

  void validate() const;
  bool operator==(const DutyCycleOptions&) const = default;
};

// Fine-grained record of one MA -> CR -> CO -> MB traversal.
struct DutyCycleRun {
  double dt_s = 0.0;
  std::vector<double> power_W;  // one per internal step, start-of-step state
  std::vector<Stage> stages;
  double final_position_m = 0.0;
  double final_speed_kmh = 0.0;
  double peak_speed_kmh = 0.0;

  std::size_t count(Stage stage) const;
};

DutyCycleRun simulate_duty_cycle(const TrainSpec& spec,
                                 const TrackSegment& segment,
                                 const DutyCycleOptions& options = {});

// Groups consecutive internal samples into buckets of `dt_s` and keeps the
// sample of largest magnitude in each bucket.
PowerProfile downsample_peak(const DutyCycleRun& run, double dt_s);

PowerProfile generate_segment_profile(const TrainSpec& spec,
                                      const TrackSegment& segment, double dt_s,
                                      const DutyCycleOptions& options = {});

}  // namespace metro
