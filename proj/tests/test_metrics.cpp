#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "metro/metrics.hpp"

using namespace metro;

namespace {

SimTrace synthetic(const std::vector<double>& totals, double tick_s = 10) {
  SimTrace t;
  t.tick_s = tick_s;
  t.scenario_fingerprint = "synthetic";
  for (std::size_t i = 0; i < totals.size(); ++i) {
    TickRecord r;
    r.time_s = static_cast<double>(i) * tick_s;
    r.total_power_kW = totals[i];
    t.ticks.push_back(r);
  }
  return t;
}

void add_trains(SimTrace& t, const std::vector<double>& travel) {
  for (std::size_t i = 0; i < travel.size(); ++i) {
    TrainSummary s;
    s.train_id = static_cast<TrainId>(i);
    s.launch_s = 100.0 * static_cast<double>(i);
    s.complete_s = s.launch_s + travel[i];
    s.scheduled_completion_s = s.launch_s + 2400;
    t.trains.push_back(s);
  }
}

}  // namespace

TEST_CASE("exceedances count contiguous runs") {
  const std::vector<double> one{10, 30, 30, 10};
  const std::vector<double> two{30, 10, 30};
  const std::vector<double> none{10, 20, 25};
  CHECK(count_exceedances(one, 25) == 1);
  CHECK(count_exceedances(two, 25) == 2);
  CHECK(count_exceedances(none, 25) == 0);
  CHECK(count_exceedance_ticks(synthetic(one), 25) == 2);
}

TEST_CASE("run counting is local to below-threshold splits") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> p(0, 50);
  std::uniform_int_distribution<std::size_t> len(1, 40);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(len(rng)), b(len(rng));
    for (double& v : a) v = p(rng);
    for (double& v : b) v = p(rng);
    std::vector<double> joined = a;
    joined.push_back(10.0);
    joined.insert(joined.end(), b.begin(), b.end());
    std::vector<double> a_split = a;
    a_split.push_back(10.0);
    CHECK(count_exceedances(joined, 25) ==
          count_exceedances(a_split, 25) + count_exceedances(b, 25));
  }
}

TEST_CASE("regenerative energy accounting") {
  SimTrace t = synthetic({0, 0, 0});
  t.ticks[1].regenerated_kW = 3000;
  t.ticks[1].departure_demand_kW = 2000;
  t.ticks[2].regenerated_kW = 2000;
  t.ticks[2].departure_demand_kW = 3000;
  const RegenEnergy e = regen_accounting(t);
  CHECK(e.utilized_kWh == doctest::Approx(2 * 2000.0 * 10 / 3600));
  CHECK(e.wasted_kWh == doctest::Approx(1000.0 * 10 / 3600));
  CHECK(e.utilized_kWh + e.wasted_kWh ==
        doctest::Approx(5000.0 * 10 / 3600).epsilon(1e-12));

  SimTrace quiet = synthetic({5, 5});
  const RegenEnergy z = regen_accounting(quiet);
  CHECK(z.utilized_kWh == 0.0);
  CHECK(z.wasted_kWh == 0.0);
}

TEST_CASE("policy statistics") {
  SimTrace t = synthetic({10, 30, 30, 10, 40});
  add_trains(t, {2400, 2410, 2420, 2430});
  const PolicyStats s = policy_stats(t, 25);
  CHECK(s.exceedance_count == 2);
  CHECK(s.exceedance_tick_count == 3);
  CHECK(s.max_total_power_kW == 40);
  CHECK(s.energy_kWh == doctest::Approx(120.0 * 10 / 3600));
  CHECK(s.mean_power_kW ==
        doctest::Approx(s.energy_kWh * 3600 / 50).epsilon(1e-9));
  CHECK(s.travel_time_mean_s == 2415);
  CHECK(s.travel_time_std_s == doctest::Approx(std::sqrt(125.0)));
  CHECK(s.travel_time_quartiles_s[0] == doctest::Approx(2407.5));
  CHECK(s.travel_time_quartiles_s[1] == doctest::Approx(2415));
  CHECK(s.travel_time_quartiles_s[2] == doctest::Approx(2422.5));
  CHECK(s.completed_train_count == 4);
  CHECK(s.launched_train_count == 4);
}

TEST_CASE("unfinished trains are excluded from travel statistics") {
  SimTrace t = synthetic({1});
  add_trains(t, {2400});
  TrainSummary open;
  open.train_id = 1;
  t.trains.push_back(open);
  const PolicyStats s = policy_stats(t, 25);
  CHECK(s.completed_train_count == 1);
  CHECK(s.launched_train_count == 2);
  CHECK(s.travel_time_mean_s == 2400);
}

TEST_CASE("comparison of the published case") {
  std::vector<double> fixed_totals, pres_totals;
  for (int i = 0; i < 28; ++i) fixed_totals.insert(fixed_totals.end(), {30, 10});
  for (int i = 0; i < 8; ++i) pres_totals.insert(pres_totals.end(), {30, 10});
  SimTrace fixed = synthetic(fixed_totals);
  SimTrace pres = synthetic(pres_totals);
  add_trains(fixed, {2400, 2400});
  add_trains(pres, {2409, 2409});
  const ComparisonReport r = compare(fixed, pres, 25);
  CHECK(r.exceedance_reduction_pct == doctest::Approx(71.428571).epsilon(1e-6));
  CHECK(r.extra_delay_mean_s == doctest::Approx(9));
  CHECK(r.extra_delay_pct == doctest::Approx(0.375));
}

TEST_CASE("self comparison has zero deltas") {
  SimTrace t = synthetic({10, 30, 10});
  add_trains(t, {2400, 2500});
  const ComparisonReport r = compare(t, t, 25);
  CHECK(r.exceedance_reduction_pct == 0.0);
  CHECK(r.extra_delay_mean_s == 0.0);
  CHECK(r.extra_delay_pct == 0.0);
  CHECK(r.fixed == r.pres);
}

TEST_CASE("traces from different scenarios cannot be compared") {
  SimTrace a = synthetic({1});
  SimTrace b = synthetic({1});
  b.scenario_fingerprint = "other";
  CHECK_THROWS_AS(compare(a, b, 25), std::invalid_argument);
}

TEST_CASE("empty traces are rejected") {
  CHECK_THROWS_AS(policy_stats(SimTrace{}, 1), std::invalid_argument);
}

TEST_CASE("interpolated quantiles") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.0) == 1);
  CHECK(quantile_sorted(v, 1.0) == 4);
  CHECK(quantile_sorted(v, 0.5) == 2.5);
  const std::vector<double> single{7};
  CHECK(quantile_sorted(single, 0.25) == 7);
}
