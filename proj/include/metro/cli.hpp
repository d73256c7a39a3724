#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "metro/metrics.hpp"
#include "metro/sim_engine.hpp"

namespace metro {

// ---------------------------------------------------------------------------
// Scenario configuration (JSON, sections: scenario, scheduler, train,
// segments). Omitted keys keep their defaults; see docs/formats.md.
// ---------------------------------------------------------------------------

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string dump_scenario(const Scenario& scenario);

// ---------------------------------------------------------------------------
// Trace, per-train summary and report files.
// ---------------------------------------------------------------------------

// Shortest round-trip decimal, independent of the global locale.
std::string format_number(double value);

void write_trace_csv(const SimTrace& trace, bool per_train, std::ostream& os);
void write_train_summary_csv(const SimTrace& trace, std::ostream& os);

// Rebuilds the parts of a trace that the metrics read from the two CSV files.
SimTrace read_trace_csv(std::istream& trace_csv, std::istream& summary_csv,
                        Policy policy);

std::string report_json(const ComparisonReport& report);
std::string report_csv(const ComparisonReport& report);
std::string policy_stats_json(const PolicyStats& stats,
                              double reporting_threshold_kW);

// ---------------------------------------------------------------------------
// Entry points.
// ---------------------------------------------------------------------------

enum class RunMode { kFixed, kPres, kBoth };

struct RunConfig {
  std::optional<std::filesystem::path> scenario_path;
  RunMode mode = RunMode::kBoth;
  std::filesystem::path out_dir = "out";
  std::optional<double> reporting_threshold_kW;
  bool emit_per_train = false;
  std::optional<std::uint64_t> seed;
};

int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err);

int solver_selftest(int num_instances, int max_vars, std::uint64_t seed,
                    std::ostream& out, std::ostream& err);

}  // namespace metro
