#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "metro/dynamics.hpp"
#include "dynamics_gen.hpp"
#include "test_support.hpp"

using namespace metro;

namespace {

TrainSpec reference_spec() {
  TrainSpec s;
  s.mass_tonnes = 300;
  s.axle_count = 16;
  s.car_count = 4;
  s.frontal_area_m2 = 10;
  s.tunnel_factor = 1;
  s.traction_envelope = ForceSpeedEnvelope::from_corner(200e3, 36);
  s.braking_envelope = ForceSpeedEnvelope::from_corner(150e3, 40);
  s.max_speed_kmh = 80;
  return s;
}

TrackSegment flat(double length_m) {
  TrackSegment g;
  g.length_m = length_m;
  g.nominal_travel_time_s = 120;
  return g;
}

}  // namespace

TEST_CASE("davis resistance matches hand arithmetic") {
  const TrainSpec s = reference_spec();
  CHECK(rel_close(davis_resistance(s, 0), 4000.0, 1e-9));
  CHECK(rel_close(davis_resistance(s, 72), 19517.44, 1e-9));

  TrainSpec tiny = s;
  tiny.mass_tonnes = 1;
  tiny.axle_count = 2;
  tiny.car_count = 1;
  tiny.frontal_area_m2 = 1;
  CHECK(rel_close(davis_resistance(tiny, 0), 266.4, 1e-9));
}

TEST_CASE("davis resistance rejects negative speed") {
  CHECK_THROWS_AS(davis_resistance(reference_spec(), -1.0), std::domain_error);
}

TEST_CASE("davis resistance increases with speed") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> speed(0, 120);
  for (int i = 0; i < 500; ++i) {
    const TrainSpec s = random_spec(rng);
    double a = speed(rng), b = speed(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    CHECK(davis_resistance(s, a) < davis_resistance(s, b));
  }
}

TEST_CASE("gradient and curve forces") {
  const TrainSpec s = reference_spec();
  TrackSegment g = flat(1000);
  CHECK(gradient_force(s, g) == 0.0);
  g.gradient_angle_rad = 0.01;
  CHECK(gradient_force(s, g) == doctest::Approx(29419.5).epsilon(1e-5));
  g.gradient_angle_rad = -0.01;
  CHECK(gradient_force(s, g) == doctest::Approx(-29419.5).epsilon(1e-5));

  TrackSegment c = flat(1000);
  CHECK(curve_force(s, c) == 0.0);
  c.curve_radius_m = 500;
  CHECK(curve_force(s, c) == doctest::Approx(4412.99).epsilon(1e-5));
  c.curve_radius_m = 1000;
  CHECK(curve_force(s, c) == doctest::Approx(2206.50).epsilon(1e-5));
}

TEST_CASE("tunnel factor applies only inside tunnels") {
  const TrainSpec s = TrainSpec::default_metro();
  TrackSegment g = flat(1000);
  CHECK(effective_tunnel_factor(s, g) == 1);
  g.is_tunnel = true;
  CHECK(effective_tunnel_factor(s, g) == s.tunnel_factor);
}

TEST_CASE("envelope force regions and corner continuity") {
  const auto env = ForceSpeedEnvelope::from_corner(200e3, 36);
  CHECK(envelope_force(env, 0) == 200e3);
  CHECK(envelope_force(env, 36) == 200e3);
  CHECK(rel_close(envelope_force(env, 72), 100e3, 1e-12));

  const double left = envelope_force(env, 36);
  const double right = env.max_power_W / (36 / kKmhPerMs);
  CHECK(std::abs(left - right) / left < 1e-9);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const TrainSpec s = random_spec(rng);
    const auto& e = s.traction_envelope;
    const double above = std::nextafter(e.base_speed_kmh, 1e9);
    CHECK(std::abs(envelope_force(e, e.base_speed_kmh) -
                   envelope_force(e, above)) /
              e.base_force_N <
          1e-9);
    double prev = envelope_force(e, 0);
    for (double v = 0.5; v < 150; v += 0.5) {
      const double f = envelope_force(e, v);
      CHECK(f <= prev);
      prev = f;
    }
  }
}

TEST_CASE("zero net force conserves speed") {
  MotionState st;
  st.speed_kmh = 36;
  st.stage = Stage::kCoasting;
  const MotionState next = integrate(st, ForceTerms{}, 300e3, 80, 10);
  CHECK(next.speed_kmh == 36.0);
  CHECK(next.position_m == doctest::Approx(100.0).epsilon(1e-12));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> v(0, 79), dt(0.1, 20);
  for (int i = 0; i < 200; ++i) {
    MotionState s;
    s.speed_kmh = v(rng);
    const double step = dt(rng);
    const MotionState n = integrate(s, ForceTerms{}, 200e3, 80, step);
    CHECK(n.speed_kmh == s.speed_kmh);
    CHECK(n.position_m == doctest::Approx(s.speed_kmh / 3.6 * step));
  }
}

TEST_CASE("single traction step matches hand computation") {
  const TrainSpec s = reference_spec();
  const TrackSegment g = flat(1000);
  MotionState st;
  st.speed_kmh = 18;
  st.traction_factor = 1;
  const double resist = 6.4 * 300 + 130 * 16 + 0.14 * 300 * 18 +
                        1 * (0.046 + 0.065 * 3) * 10 * 18 * 18;
  const double dv = (200e3 - resist) / 300e3 * 1.0;
  const MotionState next = step_motion(s, g, st, 1.0);
  CHECK(next.speed_kmh / 3.6 == doctest::Approx(18 / 3.6 + dv).epsilon(1e-12));
}

TEST_CASE("braking clamps at standstill") {
  const TrainSpec s = reference_spec();
  MotionState st;
  st.speed_kmh = 1;
  st.stage = Stage::kMaxBraking;
  st.braking_factor = 1;
  const MotionState next = step_motion(s, flat(1000), st, 10);
  CHECK(next.speed_kmh == 0.0);
}

TEST_CASE("speed is capped at the maximum") {
  const TrainSpec s = reference_spec();
  MotionState st;
  st.speed_kmh = 79.9;
  st.traction_factor = 1;
  CHECK(step_motion(s, flat(1000), st, 10).speed_kmh == s.max_speed_kmh);
}

TEST_CASE("traction power sign convention") {
  const TrainSpec s = reference_spec();
  MotionState co;
  co.speed_kmh = 50;
  co.stage = Stage::kCoasting;
  CHECK(traction_power_W(co, s) == 0.0);

  MotionState ma;
  ma.speed_kmh = 36;
  ma.traction_factor = 1;
  CHECK(traction_power_W(ma, s) == doctest::Approx(2.0e6));

  MotionState mb;
  mb.speed_kmh = 36;
  mb.stage = Stage::kMaxBraking;
  mb.braking_factor = 1;
  CHECK(traction_power_W(mb, s) == doctest::Approx(-1.5e6));
}

TEST_CASE("motion state validation") {
  MotionState st;
  st.traction_factor = 0.5;
  st.braking_factor = 0.5;
  CHECK_THROWS_AS(st.validate(), std::invalid_argument);
  st.braking_factor = 0;
  st.stage = Stage::kCoasting;
  CHECK_THROWS_AS(st.validate(), std::invalid_argument);
  st.stage = Stage::kCruising;
  CHECK_NOTHROW(st.validate());
}

TEST_CASE("stages follow the MA CR CO MB order") {
  const auto run =
      simulate_duty_cycle(TrainSpec::default_metro(), flat(2000));
  REQUIRE(!run.stages.empty());
  CHECK(run.stages.front() == Stage::kMaxAcceleration);
  CHECK(run.stages.back() == Stage::kMaxBraking);
  CHECK(std::is_sorted(run.stages.begin(), run.stages.end()));
  CHECK(run.final_speed_kmh == 0.0);
  CHECK(run.final_position_m == doctest::Approx(2000).epsilon(0.01));
}

TEST_CASE("doubling the length adds cruising but not acceleration") {
  const TrainSpec s = TrainSpec::default_metro();
  const auto a = simulate_duty_cycle(s, flat(2000));
  const auto b = simulate_duty_cycle(s, flat(4000));
  CHECK(b.count(Stage::kCruising) > a.count(Stage::kCruising));
  CHECK(b.count(Stage::kMaxAcceleration) == a.count(Stage::kMaxAcceleration));
}

TEST_CASE("infeasible segments are reported") {
  TrainSpec weak = TrainSpec::default_metro();
  weak.traction_envelope = ForceSpeedEnvelope::from_corner(10e3, 30);
  TrackSegment steep = flat(1000);
  steep.gradient_angle_rad = 0.05;
  CHECK_THROWS_AS(simulate_duty_cycle(weak, steep), InfeasibleSegment);
}

TEST_CASE("randomized profiles keep sign pattern and first-sample maximum") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  while (checked < 100) {
    const TrainSpec s = random_spec(rng);
    const TrackSegment g = random_segment(rng);
    const DutyCycleRun run = simulate_duty_cycle(s, g);
    const PowerProfile p = downsample_peak(run, 10.0);
    ++checked;

    CHECK(profile_sign_pattern_ok(p.samples_kW));
    const double peak =
        *std::max_element(p.samples_kW.begin(), p.samples_kW.end());
    CHECK(p.samples_kW.front() == peak);

    for (std::size_t i = 0; i < run.stages.size(); ++i) {
      switch (run.stages[i]) {
        case Stage::kMaxAcceleration:
        case Stage::kCruising: CHECK(run.power_W[i] >= 0.0); break;
        case Stage::kCoasting: CHECK(run.power_W[i] == 0.0); break;
        case Stage::kMaxBraking: CHECK(run.power_W[i] <= 0.0); break;
      }
    }

    // Gravity adds energy on a descent, so the bound holds only on level
    // track or climbs.
    if (g.gradient_angle_rad >= 0.0) {
      double traction_J = 0.0;
      for (double w : run.power_W) traction_J += std::max(w, 0.0) * run.dt_s;
      const double v_peak = run.peak_speed_kmh / kKmhPerMs;
      CHECK(traction_J >= 0.5 * s.mass_kg() * v_peak * v_peak);
    }
  }
}

TEST_CASE("generated profile for the default train") {
  const PowerProfile p =
      generate_segment_profile(TrainSpec::default_metro(), flat(1500), 10.0);
  CHECK(p.dt_s == 10.0);
  CHECK(profile_sign_pattern_ok(p.samples_kW));
  CHECK(p.samples_kW.front() ==
        *std::max_element(p.samples_kW.begin(), p.samples_kW.end()));
  CHECK(p.samples_kW.back() < 0.0);
}
