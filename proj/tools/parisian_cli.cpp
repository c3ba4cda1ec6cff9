#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "parisian/cli/commands.hpp"

namespace cli = parisian::cli;

int main(int argc, char** argv) {
  CLI::App app{"Parisian ruin simulation and asymptotics toolkit"};
  app.set_version_flag("--version", std::string(PARISIAN_VERSION));
  app.require_subcommand(1);

  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::optional<double> grid_step;
  std::optional<std::size_t> n_paths;

  const char* help[] = {
      "Monte Carlo for Gaussian or stable risk processes",
      "evaluate an asymptotic regime over a u-ladder",
      "estimate Pickands/Piterbarg-type constants",
      "ratio table of Monte Carlo or exact values against asymptotics",
      "alpha-stable Parisian ruin Monte Carlo",
  };
  for (std::size_t i = 0; i < cli::kCommands.size(); ++i) {
    auto* sub = app.add_subcommand(cli::kCommands[i], help[i]);
    sub->add_option("--config", config, "JSON configuration document");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--workers", workers, "worker threads (default: all cores)");
    sub->add_option("--out", out, "output directory (default: $PARISIAN_OUT_DIR or ./runs)");
    sub->add_option("--grid-step", grid_step, "time grid step");
    sub->add_option("--n-paths", n_paths, "number of sample paths");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_malformed_config;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const cli::Overrides o{seed, workers, out, grid_step, n_paths};
  return cli::run_command(command, config, o, std::cout, std::cerr);
}
