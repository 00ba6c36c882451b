// fkeit: Monte Carlo solver for conductivity boundary value problems and
// stochastic numerical homogenization of random media.
//
// Subcommands take a JSON run configuration; see README.md for the schema.
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fkeit/config.hpp"
#include "fkeit/errors.hpp"
#include "fkeit/runner.hpp"

namespace {

int run(fkeit::ExperimentKind expected, const std::string& path, const std::string& output,
        int workers, bool print) {
  fkeit::RunConfig cfg = fkeit::validate_config_file(path);
  if (cfg.experiment != expected)
    throw fkeit::ConfigError("config.experiment does not match the subcommand");
  if (!output.empty()) cfg.output = output;
  if (workers > 0) {
    cfg.workers = workers;
    cfg.mc.workers = workers;
  }
  const auto doc = fkeit::run_experiment_to_files(cfg);
  if (print || cfg.output.empty()) std::cout << doc.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fkeit: Feynman-Kac Monte Carlo engine for EIT forward problems and "
               "stochastic homogenization"};
  app.set_version_flag("--version", std::string(fkeit::kVersion));
  app.require_subcommand(1);

  std::string config_path, output;
  int workers = 0;
  bool print = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "run configuration (JSON)")->required();
    cmd->add_option("-o,--output", output, "result file (overrides config.output)");
    cmd->add_option("-w,--workers", workers, "worker threads (FKEIT_WORKERS overrides)");
    cmd->add_flag("--print", print, "echo the result document to stdout");
  };

  auto* validate = app.add_subcommand("validate", "parse and cross-check a configuration");
  validate->add_option("config", config_path, "run configuration (JSON)")->required();

  add_common(app.add_subcommand("solve", "Feynman-Kac potential estimates at probe points"));
  add_common(app.add_subcommand("homogenize", "effective tensor / MSD estimation"));
  add_common(app.add_subcommand("convergence", "MSD error curve over a horizon grid"));
  add_common(app.add_subcommand("oracle", "deterministic finite-difference reference solves"));
  add_common(app.add_subcommand("epsilon-sweep", "electrode currents across scale separations"));

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("validate")) {
      fkeit::RunConfig cfg = fkeit::validate_config_file(config_path);
      std::cout << cfg.resolved().dump(2) << std::endl;
      return 0;
    }
    if (app.got_subcommand("solve"))
      return run(fkeit::ExperimentKind::solve, config_path, output, workers, print);
    if (app.got_subcommand("homogenize"))
      return run(fkeit::ExperimentKind::homogenize, config_path, output, workers, print);
    if (app.got_subcommand("convergence"))
      return run(fkeit::ExperimentKind::convergence, config_path, output, workers, print);
    if (app.got_subcommand("oracle"))
      return run(fkeit::ExperimentKind::oracle, config_path, output, workers, print);
    if (app.got_subcommand("epsilon-sweep"))
      return run(fkeit::ExperimentKind::epsilon_sweep, config_path, output, workers, print);
  } catch (const fkeit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const fkeit::UnsupportedQueryError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const fkeit::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 3;
  }
  return 0;
}
