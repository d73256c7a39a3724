#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>

#include "metro/sim_engine.hpp"

namespace metro {

struct PolicyStats {
  std::string policy;
  int exceedance_count = 0;       // contiguous runs above the threshold
  int exceedance_tick_count = 0;  // individual ticks above the threshold
  double max_total_power_kW = 0.0;
  double mean_power_kW = 0.0;
  double energy_kWh = 0.0;
  double regen_utilized_kWh = 0.0;
  double regen_wasted_kWh = 0.0;
  double travel_time_mean_s = 0.0;
  double travel_time_std_s = 0.0;  // population
  std::array<double, 3> travel_time_quartiles_s{};
  int completed_train_count = 0;
  int launched_train_count = 0;

  bool operator==(const PolicyStats&) const = default;
};

struct ComparisonReport {
  double reporting_threshold_kW = 0.0;
  PolicyStats fixed;
  PolicyStats pres;
  double exceedance_reduction_pct = 0.0;
  double extra_delay_mean_s = 0.0;
  double extra_delay_pct = 0.0;

  bool operator==(const ComparisonReport&) const = default;
};

int count_exceedances(std::span<const double> totals_kW,
                      double reporting_threshold_kW);
int count_exceedances(const SimTrace& trace, double reporting_threshold_kW);
int count_exceedance_ticks(const SimTrace& trace,
                           double reporting_threshold_kW);

struct RegenEnergy {
  double utilized_kWh = 0.0;
  double wasted_kWh = 0.0;
};

RegenEnergy regen_accounting(const SimTrace& trace);

PolicyStats policy_stats(const SimTrace& trace, double reporting_threshold_kW);

// Throws std::invalid_argument when the traces come from different scenarios.
ComparisonReport compare(const SimTrace& fixed, const SimTrace& pres,
                         double reporting_threshold_kW);

// Linear-interpolation quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace metro
