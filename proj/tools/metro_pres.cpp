#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "metro/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Metro departure scheduling simulator"};
  app.require_subcommand(0, 1);

  metro::RunConfig config;
  std::string scenario_path;
  std::string out_dir = config.out_dir.string();
  double threshold = 0.0;
  std::uint64_t seed = 0;
  const std::map<std::string, metro::RunMode> modes{
      {"fixed", metro::RunMode::kFixed},
      {"pres", metro::RunMode::kPres},
      {"both", metro::RunMode::kBoth}};

  auto* scenario_opt = app.add_option("--scenario", scenario_path,
                                      "scenario JSON; defaults when omitted")
                           ->check(CLI::ExistingFile);
  app.add_option("--mode", config.mode, "fixed, pres or both")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
  app.add_option("--out", out_dir, "output directory");
  auto* threshold_opt = app.add_option(
      "--report-threshold", threshold, "exceedance threshold in kW");
  app.add_flag("--per-train", config.emit_per_train,
               "add one power column per train to the traces");
  auto* seed_opt = app.add_option("--seed", seed, "scenario seed override");

  auto* selftest = app.add_subcommand(
      "selftest", "compare the solver against exhaustive enumeration");
  int instances = 200;
  int max_vars = 10;
  std::uint64_t selftest_seed = 1;
  selftest->add_option("--instances", instances)->check(CLI::NonNegativeNumber);
  selftest->add_option("--max-vars", max_vars);
  selftest->add_option("--seed", selftest_seed);

  CLI11_PARSE(app, argc, argv);

  if (*selftest) {
    return metro::solver_selftest(instances, max_vars, selftest_seed, std::cout,
                                  std::cerr);
  }
  if (*scenario_opt) config.scenario_path = scenario_path;
  if (*threshold_opt) config.reporting_threshold_kW = threshold;
  if (*seed_opt) config.seed = seed;
  config.out_dir = out_dir;
  return metro::run_cli(config, std::cout, std::cerr);
}
