#include "metro/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace metro {

int count_exceedances(std::span<const double> totals_kW,
                      double reporting_threshold_kW) {
  int runs = 0;
  bool above = false;
  for (double p : totals_kW) {
    const bool now = p > reporting_threshold_kW;
    if (now && !above) ++runs;
    above = now;
  }
  return runs;
}

int count_exceedances(const SimTrace& trace, double reporting_threshold_kW) {
  std::vector<double> totals;
  totals.reserve(trace.ticks.size());
  for (const auto& t : trace.ticks) totals.push_back(t.total_power_kW);
  return count_exceedances(totals, reporting_threshold_kW);
}

int count_exceedance_ticks(const SimTrace& trace,
                           double reporting_threshold_kW) {
  return static_cast<int>(
      std::count_if(trace.ticks.begin(), trace.ticks.end(),
                    [&](const TickRecord& t) {
                      return t.total_power_kW > reporting_threshold_kW;
                    }));
}

RegenEnergy regen_accounting(const SimTrace& trace) {
  RegenEnergy e;
  const double hours = trace.tick_s / 3600.0;
  for (const auto& t : trace.ticks) {
    const double r = t.regenerated_kW, d = t.departure_demand_kW;
    e.utilized_kWh += std::min(r, d) * hours;
    e.wasted_kWh += std::max(0.0, r - d) * hours;
  }
  return e;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

PolicyStats policy_stats(const SimTrace& trace, double reporting_threshold_kW) {
  if (trace.ticks.empty()) throw std::invalid_argument("trace has no ticks");
  PolicyStats s;
  s.policy = policy_name(trace.policy);
  s.exceedance_count = count_exceedances(trace, reporting_threshold_kW);
  s.exceedance_tick_count =
      count_exceedance_ticks(trace, reporting_threshold_kW);

  double sum = 0.0;
  s.max_total_power_kW = trace.ticks.front().total_power_kW;
  for (const auto& t : trace.ticks) {
    sum += t.total_power_kW;
    s.max_total_power_kW = std::max(s.max_total_power_kW, t.total_power_kW);
  }
  const double duration_s =
      static_cast<double>(trace.ticks.size()) * trace.tick_s;
  s.energy_kWh = sum * trace.tick_s / 3600.0;
  s.mean_power_kW = s.energy_kWh * 3600.0 / duration_s;

  const RegenEnergy regen = regen_accounting(trace);
  s.regen_utilized_kWh = regen.utilized_kWh;
  s.regen_wasted_kWh = regen.wasted_kWh;

  std::vector<double> travel;
  for (const auto& t : trace.trains) {
    if (auto v = t.travel_s()) travel.push_back(*v);
  }
  s.launched_train_count = trace.launch_count();
  s.completed_train_count = static_cast<int>(travel.size());
  if (!travel.empty()) {
    std::sort(travel.begin(), travel.end());
    double total = 0.0;
    for (double v : travel) total += v;
    s.travel_time_mean_s = total / static_cast<double>(travel.size());
    double sq = 0.0;
    for (double v : travel) {
      sq += (v - s.travel_time_mean_s) * (v - s.travel_time_mean_s);
    }
    s.travel_time_std_s = std::sqrt(sq / static_cast<double>(travel.size()));
    s.travel_time_quartiles_s = {quantile_sorted(travel, 0.25),
                                 quantile_sorted(travel, 0.5),
                                 quantile_sorted(travel, 0.75)};
  }
  return s;
}

ComparisonReport compare(const SimTrace& fixed, const SimTrace& pres,
                         double reporting_threshold_kW) {
  if (fixed.scenario_fingerprint != pres.scenario_fingerprint) {
    throw std::invalid_argument(
        "traces come from different scenarios and cannot be compared");
  }
  ComparisonReport r;
  r.reporting_threshold_kW = reporting_threshold_kW;
  r.fixed = policy_stats(fixed, reporting_threshold_kW);
  r.pres = policy_stats(pres, reporting_threshold_kW);
  if (r.fixed.exceedance_count > 0) {
    r.exceedance_reduction_pct =
        100.0 * (r.fixed.exceedance_count - r.pres.exceedance_count) /
        r.fixed.exceedance_count;
  }
  r.extra_delay_mean_s = r.pres.travel_time_mean_s - r.fixed.travel_time_mean_s;
  if (r.fixed.travel_time_mean_s > 0.0) {
    r.extra_delay_pct = 100.0 * r.extra_delay_mean_s / r.fixed.travel_time_mean_s;
  }
  return r;
}

}  // namespace metro
