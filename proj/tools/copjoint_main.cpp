#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "copjoint/cli.hpp"
#include "copjoint/common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"copula-based joint discrete-choice models"};
  app.require_subcommand(1);

  copjoint::CliOptions opts;
  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"fit", "fit the configured model families to a dataset"},
      {"simulate", "generate a synthetic dataset with known dependence"},
      {"eval", "recompute metrics of a parameter file on a dataset"},
      {"compare", "rank previously written fit reports"},
      {"breaks", "natural-breaks thresholds of a numeric column"},
  };
  for (const auto& command : commands) {
    CLI::App* sub = app.add_subcommand(command.name, command.help);
    sub->add_option("--config", opts.config_path, "run configuration file")->required();
    sub->add_option("--seed", opts.seed, "override the config seed");
    sub->add_option("--out", opts.out_dir, "override the output directory");
    sub->add_flag("--deterministic", opts.deterministic,
                  "single-threaded bit-reproducible run (always on; accepted for "
                  "script compatibility)");
    sub->callback([&opts, &command] { opts.command = command.name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    copjoint::run_command(opts, std::cout);
    return 0;
  } catch (const copjoint::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const copjoint::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const copjoint::DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const copjoint::TrainingError& e) {
    std::cerr << "training error: " << e.what() << " (last finite epoch "
              << e.last_finite_epoch << ")\n";
    return 4;
  } catch (const copjoint::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
