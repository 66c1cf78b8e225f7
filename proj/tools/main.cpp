// thermotop command line: validate and run configurations, sweep the
// multi-objective weight and compare the closed-form update against the
// level-set baseline.
//
// exit codes: 0 success, 1 validation failure, 2 numerical failure

#include <iostream>

#include <CLI11.hpp>

#include "thermotop/runner.hpp"

using namespace thermotop;

int main(int argc, char** argv) {
  CLI::App app{"thermotop - relaxed variational thermal topology optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::vector<double> omega_values;

  auto* run = app.add_subcommand("run", "run the optimization in a config");
  run->add_option("config", config_path, "JSON problem configuration")
      ->required();
  run->add_option("--output", output_dir, "override the output directory");

  auto* validate =
      app.add_subcommand("validate", "check a config and echo its normal form");
  validate->add_option("config", config_path, "JSON problem configuration")
      ->required();

  auto* sweep = app.add_subcommand(
      "sweep-omega", "run a temp_multi config for a list of weights");
  sweep->add_option("config", config_path, "JSON problem configuration")
      ->required();
  sweep
      ->add_option("--values", omega_values,
                   "weights in [0,1] (the 1 and 0 endpoints run first)")
      ->required();

  auto* compare = app.add_subcommand(
      "compare", "run closed-form and level-set back to back");
  compare->add_option("config", config_path, "JSON problem configuration")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ProblemConfig cfg = parse_config(config_path);
    if (!output_dir.empty()) cfg.output.directory = output_dir;

    if (validate->parsed()) {
      std::cout << config_to_json(cfg).dump(2) << "\n";
      return 0;
    }
    if (run->parsed()) {
      RunOutcome out = run_problem(cfg, std::cout);
      std::cout << "done: " << out.steps.size() << " steps, "
                << out.total_iterations << " iterations, output in "
                << out.output_dir << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      for (double w : omega_values)
        if (!(w >= 0.0 && w <= 1.0))
          throw ConfigError({"sweep-omega: weights must lie in [0,1]"});
      sweep_omega(cfg, omega_values, std::cout);
      return 0;
    }
    if (compare->parsed()) {
      CompareOutcome out = compare_methods(cfg, std::cout);
      std::cout << "level-set needed " << out.iteration_ratio
                << "x the closed-form iterations\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
