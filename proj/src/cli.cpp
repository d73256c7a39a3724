#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <system_error>

#include "metro/bip_random.hpp"
#include "metro/bip_solver.hpp"
#include "metro/cli.hpp"

namespace metro {
namespace {

namespace fs = std::filesystem;

// Files are written next to their destination and renamed only after every
// output of the run has been produced.
class StagedOutput {
 public:
  explicit StagedOutput(fs::path dir) : dir_(std::move(dir)) {}

  ~StagedOutput() {
    for (const auto& [tmp, dest] : staged_) {
      std::error_code ec;
      fs::remove(tmp, ec);
    }
  }

  void add(const std::string& name, const std::string& content) {
    const fs::path dest = dir_ / name;
    const fs::path tmp = dir_ / ("." + name + ".tmp");
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    staged_.emplace_back(tmp, dest);
  }

  void commit() {
    for (const auto& [tmp, dest] : staged_) fs::rename(tmp, dest);
    staged_.clear();
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> staged_;
};

SimTrace run_policy(Scenario scenario, Policy policy) {
  scenario.policy = policy;
  return run(scenario);
}

void stage_trace(StagedOutput& staged, const SimTrace& trace, bool per_train) {
  const std::string name = policy_name(trace.policy);
  std::ostringstream csv, summary;
  write_trace_csv(trace, per_train, csv);
  write_train_summary_csv(trace, summary);
  staged.add("trace_" + name + ".csv", csv.str());
  staged.add("trains_" + name + ".csv", summary.str());
}

void print_stats_line(std::ostream& out, const PolicyStats& s) {
  out << s.policy << ": exceedances=" << s.exceedance_count
      << " max_kW=" << format_number(s.max_total_power_kW)
      << " mean_kW=" << format_number(s.mean_power_kW)
      << " travel_mean_s=" << format_number(s.travel_time_mean_s)
      << " completed=" << s.completed_train_count << "/"
      << s.launched_train_count << "\n";
}

}  // namespace

int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = config.scenario_path ? load_scenario(*config.scenario_path)
                                    : Scenario{};
    if (config.seed) scenario.rng_seed = *config.seed;
    if (config.reporting_threshold_kW) {
      scenario.reporting_threshold_kW = config.reporting_threshold_kW;
    }
    scenario.validate();
  } catch (const ScenarioError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  const double threshold = scenario.reporting_threshold();

  try {
    fs::create_directories(config.out_dir);
    StagedOutput staged(config.out_dir);
    if (config.mode == RunMode::kBoth) {
      auto fixed_job = std::async(std::launch::async, run_policy, scenario,
                                  Policy::kFixedTimetable);
      auto pres_job =
          std::async(std::launch::async, run_policy, scenario, Policy::kPReS);
      const SimTrace fixed = fixed_job.get();
      const SimTrace pres = pres_job.get();
      stage_trace(staged, fixed, config.emit_per_train);
      stage_trace(staged, pres, config.emit_per_train);
      const ComparisonReport report = compare(fixed, pres, threshold);
      staged.add("report.json", report_json(report));
      staged.add("report.csv", report_csv(report));
      staged.commit();
      print_stats_line(out, report.fixed);
      print_stats_line(out, report.pres);
      out << "exceedance_reduction_pct="
          << format_number(report.exceedance_reduction_pct)
          << " extra_delay_pct=" << format_number(report.extra_delay_pct)
          << "\n";
    } else {
      const Policy policy = config.mode == RunMode::kFixed
                                ? Policy::kFixedTimetable
                                : Policy::kPReS;
      const SimTrace trace = run_policy(scenario, policy);
      stage_trace(staged, trace, config.emit_per_train);
      const PolicyStats stats = policy_stats(trace, threshold);
      staged.add("stats_" + stats.policy + ".json",
                 policy_stats_json(stats, threshold));
      staged.commit();
      print_stats_line(out, stats);
    }
  } catch (const SimulationAborted& e) {
    err << "simulation aborted: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int solver_selftest(int num_instances, int max_vars, std::uint64_t seed,
                    std::ostream& out, std::ostream& err) {
  if (max_vars < 1 || max_vars > 20) {
    err << "max_vars must be between 1 and 20, got " << max_vars << "\n";
    return 2;
  }
  std::mt19937_64 rng(seed);
  RandomBipOptions opts;
  opts.max_vars = static_cast<std::size_t>(max_vars);
  int mismatches = 0;
  std::chrono::duration<double, std::milli> slowest{0};
  for (int i = 0; i < num_instances; ++i) {
    const BipProblem problem = random_bip(rng, opts);
    const auto start = std::chrono::steady_clock::now();
    const BipSolution bb = solve(problem);
    slowest = std::max(slowest, std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - start));
    const BipSolution ex = solve_exhaustive(problem);
    const bool same =
        bb.status == ex.status &&
        (!bb.optimal() ||
         (bb.assignment == ex.assignment &&
          std::abs(bb.objective_value - ex.objective_value) <= 1e-9));
    if (!same) {
      ++mismatches;
      err << "instance " << i << " disagrees\n";
      dump_problem(problem, err);
    }
  }
  out << num_instances - mismatches << "/" << num_instances
      << " instances agree, slowest solve " << slowest.count() << " ms\n";
  return mismatches == 0 ? 0 : 1;
}

}  // namespace metro
