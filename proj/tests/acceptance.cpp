// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "dynamics_gen.hpp"
#include "metro/bip_random.hpp"
#include "metro/cli.hpp"
#include "test_support.hpp"

using namespace metro;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool pass,
            const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << ": "
            << title << " | " << detail << "\n";
  if (!pass) ++failures;
}

void info(const std::string& line) { std::cout << "INFO  " << line << "\n"; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

Scenario with_policy(Scenario s, Policy p) {
  s.policy = p;
  return s;
}

std::string trace_bytes(const SimTrace& t) {
  std::ostringstream os;
  write_trace_csv(t, true, os);
  write_train_summary_csv(t, os);
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void solver_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  RandomBipOptions opts;
  opts.max_vars = 12;
  opts.max_constraints = 8;
  int mismatches = 0, infeasible = 0;
  for (int i = 0; i < 1000; ++i) {
    const BipProblem p = random_bip(rng, opts);
    const BipSolution a = solve(p);
    const BipSolution b = solve_exhaustive(p);
    if (!a.optimal()) ++infeasible;
    const bool same =
        a.status == b.status &&
        (!a.optimal() || (a.assignment == b.assignment &&
                          std::abs(a.objective_value - b.objective_value) <=
                              1e-9));
    if (!same) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << "1000 instances, " << mismatches << " mismatches, " << infeasible
    << " infeasible, " << elapsed << " s";
  report(1, "solve matches exhaustive enumeration",
         mismatches == 0 && elapsed < 10.0, d.str());
}

void scheduler_oracle(const Scenario& s, const SimTrace& pres, int id,
                      const std::string& label, bool gate) {
  int decisions = 0, mismatches = 0;
  for (const auto& tick : pres.ticks) {
    if (tick.instance.waiting.empty()) continue;
    ++decisions;
    const DepartureDecision e =
        decide_exhaustive(tick.instance, s.scheduler_params);
    if (!tick.objective_value ||
        std::abs(e.objective_value - *tick.objective_value) > 1e-9) {
      ++mismatches;
    }
  }
  std::ostringstream d;
  d << label << ": " << decisions << " decisions re-solved, " << mismatches
    << " mismatches";
  if (gate) {
    report(id, "recorded decisions equal the enumeration optimum",
           mismatches == 0 && decisions > 0, d.str());
  } else {
    info(d.str());
  }
}

void safety(const Scenario& s, const SimTrace& pres) {
  int violations = 0, checked_pairs = 0;
  double closest = kNoNeighbor;
  for (const auto& tick : pres.ticks) {
    if (auto h = min_adjacent_headway(tick)) {
      ++checked_pairs;
      closest = std::min(closest, *h);
      if (*h < s.min_headway_s) ++violations;
    }
    for (std::size_t j = 0; j < tick.instance.waiting.size(); ++j) {
      if (!headways_hold(tick.instance.waiting[j], tick.authorizations[j],
                         s.scheduler_params)) {
        ++violations;
      }
    }
  }
  std::ostringstream d;
  d << violations << " violations over " << checked_pairs
    << " ticks with two or more trains on line, closest headway " << closest
    << " s";
  report(3, "headways stay at or above the minimum", violations == 0,
         d.str());
}

void peak_reduction(const SimTrace& fixed, const SimTrace& pres,
                    double elapsed) {
  // Scan every distinct fixed-trace level as a reporting threshold.
  std::set<double> levels;
  for (const auto& t : fixed.ticks) levels.insert(t.total_power_kW);
  std::vector<double> candidates{0.0};
  for (double v : levels) candidates.push_back(v);
  std::optional<double> chosen;
  std::ostringstream landscape;
  int last = -1;
  for (double thr : candidates) {
    const int n = count_exceedances(fixed, thr);
    if (n != last) {
      landscape << " >" << thr << ":" << n;
      last = n;
    }
    if (!chosen && n >= 20 && n <= 40) chosen = thr;
  }
  info("fixed-timetable exceedance count by reporting threshold (kW):" +
       landscape.str());

  std::ostringstream d;
  bool pass = false;
  if (chosen) {
    const ComparisonReport r = compare(fixed, pres, *chosen);
    pass = r.pres.exceedance_count <= r.fixed.exceedance_count &&
           r.exceedance_reduction_pct >= 50.0 && elapsed < 30.0;
    d << "threshold " << *chosen << " kW, fixed " << r.fixed.exceedance_count
      << " -> PReS " << r.pres.exceedance_count << " ("
      << r.exceedance_reduction_pct << "%)";
  } else {
    const ComparisonReport r =
        compare(fixed, pres, fixed.p_threshold_kW);
    d << "no reporting threshold puts the fixed count in [20, 40]; at P_th "
      << fixed.p_threshold_kW << " kW fixed " << r.fixed.exceedance_count
      << " -> PReS " << r.pres.exceedance_count << ", reduction "
      << r.exceedance_reduction_pct << "%, peak total "
      << r.fixed.max_total_power_kW << " kW";
  }
  d << ", both runs " << elapsed << " s";
  report(4, "peak reduction of at least 50% on the default scenario", pass,
         d.str());
}

void binding_threshold_demo() {
  Scenario s;
  s.scheduler_params.p_threshold_kW = 20000;
  const SimTrace fixed = run(with_policy(s, Policy::kFixedTimetable));
  const SimTrace pres = run(with_policy(s, Policy::kPReS));
  const ComparisonReport r = compare(fixed, pres, 20000);
  std::ostringstream d;
  d << "with P_th = reporting threshold = 20000 kW: fixed "
    << r.fixed.exceedance_count << " -> PReS " << r.pres.exceedance_count
    << " exceedances (" << r.exceedance_reduction_pct
    << "%), extra delay " << r.extra_delay_mean_s << " s ("
    << r.extra_delay_pct << "%), regen utilized " << r.fixed.regen_utilized_kWh
    << " -> " << r.pres.regen_utilized_kWh << " kWh";
  info(d.str());
  scheduler_oracle(s, pres, 2, "binding threshold", false);
}

void delay_overhead(const SimTrace& fixed, const SimTrace& pres) {
  const ComparisonReport r = compare(fixed, pres, fixed.p_threshold_kW);
  int early = 0;
  for (const auto& t : pres.trains) {
    for (std::size_t j = 0; j < t.actual_departures_s.size(); ++j) {
      if (t.actual_departures_s[j] < t.scheduled_departures_s[j]) ++early;
    }
  }
  std::ostringstream d;
  d << "fixed mean " << r.fixed.travel_time_mean_s << " s, PReS mean "
    << r.pres.travel_time_mean_s << " s (" << r.extra_delay_pct << "%), "
    << early << " early departures";
  report(5, "extra delay at most 1% and no early departures",
         r.extra_delay_pct <= 1.0 && early == 0, d.str());
}

void regen(const SimTrace& fixed, const SimTrace& pres) {
  const RegenEnergy f = regen_accounting(fixed);
  const RegenEnergy p = regen_accounting(pres);
  int inexact = 0;
  for (const SimTrace* t : {&fixed, &pres}) {
    for (const auto& tick : t->ticks) {
      const double r = tick.regenerated_kW, dd = tick.departure_demand_kW;
      if (std::min(r, dd) + std::max(0.0, r - dd) != r) ++inexact;
    }
  }
  std::ostringstream d;
  d << "utilized fixed " << f.utilized_kWh << " kWh, PReS " << p.utilized_kWh
    << " kWh; " << inexact << " ticks where utilized + wasted != regenerated";
  report(6, "PReS uses at least as much regeneration, accounting is exact",
         p.utilized_kWh >= f.utilized_kWh && inexact == 0, d.str());
}

void slack_equivalence(const Scenario& base, const SimTrace& fixed) {
  double peak = 0.0;
  for (const auto& t : fixed.ticks) peak = std::max(peak, t.total_power_kW);
  Scenario s = base;
  s.scheduler_params.p_threshold_kW = peak + 1.0;
  const std::string a = trace_bytes(run(with_policy(s, Policy::kFixedTimetable)));
  const std::string b = trace_bytes(run(with_policy(s, Policy::kPReS)));
  std::ostringstream d;
  d << "P_th " << s.scheduler_params.p_threshold_kW << " kW, " << a.size()
    << " bytes per trace";
  report(7, "slack threshold makes PReS byte-identical to the timetable",
         a == b, d.str());
}

void dynamics_checks() {
  TrainSpec s;
  s.mass_tonnes = 300;
  s.axle_count = 16;
  s.car_count = 4;
  s.frontal_area_m2 = 10;
  s.tunnel_factor = 1;
  s.traction_envelope = ForceSpeedEnvelope::from_corner(200e3, 36);
  s.braking_envelope = ForceSpeedEnvelope::from_corner(150e3, 40);
  s.max_speed_kmh = 80;
  TrainSpec tiny = s;
  tiny.mass_tonnes = 1;
  tiny.axle_count = 2;
  tiny.car_count = 1;
  tiny.frontal_area_m2 = 1;
  bool davis = rel_close(davis_resistance(s, 0), 4000, 1e-9) &&
               rel_close(davis_resistance(s, 72), 19517.44, 1e-9) &&
               rel_close(davis_resistance(tiny, 0), 266.4, 1e-9);

  std::mt19937_64 rng(77);
  bool corner = true, conserve = true;
  int pattern_bad = 0, first_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const TrainSpec spec = random_spec(rng);
    const auto& e = spec.traction_envelope;
    const double left = envelope_force(e, e.base_speed_kmh);
    const double right = e.max_power_W / (e.base_speed_kmh / kKmhPerMs);
    if (std::abs(left - right) / left >= 1e-9) corner = false;

    MotionState st;
    st.speed_kmh = spec.max_speed_kmh * (i + 0.5) / 100.0;
    const MotionState n = integrate(st, ForceTerms{}, spec.mass_kg(),
                                    spec.max_speed_kmh, 10.0);
    if (n.speed_kmh != st.speed_kmh) conserve = false;

    const PowerProfile p =
        generate_segment_profile(spec, random_segment(rng), 10.0);
    if (!profile_sign_pattern_ok(p.samples_kW)) ++pattern_bad;
    if (p.samples_kW.front() !=
        *std::max_element(p.samples_kW.begin(), p.samples_kW.end())) {
      ++first_bad;
    }
  }
  std::ostringstream d;
  d << "davis " << (davis ? "ok" : "off") << ", corner "
    << (corner ? "ok" : "off") << ", zero-force " << (conserve ? "ok" : "off")
    << ", 100 random profiles: " << pattern_bad << " sign-pattern and "
    << first_bad << " first-sample failures";
  report(8, "dynamics numerical checks",
         davis && corner && conserve && pattern_bad == 0 && first_bad == 0,
         d.str());
}

void determinism() {
  const fs::path root = fs::temp_directory_path() / "metro_acceptance_det";
  fs::remove_all(root);
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const auto& dir : dirs) {
    RunConfig cfg;
    cfg.out_dir = dir;
    cfg.emit_per_train = true;
    std::ostringstream out, err;
    if (run_cli(cfg, out, err) != 0) {
      report(9, "identical configs give identical files", false, err.str());
      return;
    }
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    ++files;
    const fs::path other = dirs[1] / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
  }
  std::ostringstream d;
  d << files << " files compared, " << differing << " differ";
  report(9, "identical configs give identical files",
         files == 6 && differing == 0, d.str());
}

}  // namespace

int main() {
  const Scenario base;
  solver_equivalence();

  const auto start = std::chrono::steady_clock::now();
  const SimTrace fixed = run(with_policy(base, Policy::kFixedTimetable));
  const SimTrace pres = run(with_policy(base, Policy::kPReS));
  const double both_runs_s = seconds_since(start);

  scheduler_oracle(base, pres, 2, "default scenario", true);
  safety(base, pres);
  peak_reduction(fixed, pres, both_runs_s);
  binding_threshold_demo();
  delay_overhead(fixed, pres);
  regen(fixed, pres);
  slack_equivalence(base, fixed);
  dynamics_checks();
  determinism();

  std::cout << (failures == 0 ? "all criteria passed"
                              : std::to_string(failures) + " criteria failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}
