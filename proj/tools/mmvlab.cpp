// mmvlab: constrained mean-field simulation and rare-event analysis driver.
// Usage: mmvlab run <config> [--out dir] [--workers n]
//        mmvlab validate <config>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mmv/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"constrained mean-field simulation and rare-event analysis"};
  app.require_subcommand(1);

  int default_workers = 1;
  if (const char* env = std::getenv("MMVLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) default_workers = static_cast<int>(v);
  }

  mmv::RunOptions opts;
  opts.workers = default_workers;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", opts.config_path, "experiment config file")
      ->required();
  run->add_option("--out", opts.out_override,
                  "output directory (overrides output.dir)");
  run->add_option("--workers", opts.workers,
                  "worker threads for replica loops")
      ->check(CLI::PositiveNumber);

  CLI::App* validate =
      app.add_subcommand("validate", "parse and resolve a config, then stop");
  validate->add_option("config", opts.config_path, "experiment config file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  opts.validate_only = validate->parsed();
  return mmv::run_experiment(opts, std::cout, std::cerr);
}
