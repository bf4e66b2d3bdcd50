// ssue: simulate, estimate, observability and analyze commands.
//
//   ssue simulate      --config cfg.json [--seed N] [--steps T] [--out DIR]
//   ssue estimate      --config cfg.json [--runs N] [--input measurements.csv]
//   ssue observability --config cfg.json
//   ssue analyze       --config cfg.json [--input RECORD_DIR]
#include "ssue/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct CommandArgs {
  std::string config;
  ssue::Overrides overrides;
};

CLI::App *add_command(CLI::App &app, const std::string &name,
                      const std::string &help, CommandArgs &args) {
  CLI::App *sub = app.add_subcommand(name, help);
  sub->add_option("--config", args.config, "JSON configuration file")
      ->required();
  sub->add_option("--seed", args.overrides.seed, "override scenario seed");
  sub->add_option("--steps", args.overrides.steps, "override step count");
  sub->add_option("--out", args.overrides.out, "output directory");
  sub->add_option("--input", args.overrides.input,
                  "measurements CSV (estimate) or record directory (analyze)");
  sub->add_option("--runs", args.overrides.runs, "number of seeded runs");
  return sub;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Simultaneous state and uncertainty estimation"};
  app.require_subcommand(1);
  CommandArgs args;
  CLI::App *simulate = add_command(app, "simulate", "simulate a scenario", args);
  CLI::App *estimate =
      add_command(app, "estimate", "run SSUE and the EKF baseline", args);
  CLI::App *observability =
      add_command(app, "observability", "pairwise rank test", args);
  CLI::App *analyze =
      add_command(app, "analyze", "KL separation and likelihood ratios", args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ssue::kExitConfig;
  }

  std::optional<ssue::RunConfig> loaded_config;
  const int loaded = ssue::guarded(std::cerr, [&] {
    loaded_config = ssue::load_config(args.config, args.overrides);
    return ssue::kExitOk;
  });
  if (loaded != ssue::kExitOk) {
    return loaded;
  }
  const ssue::RunConfig &config = *loaded_config;

  if (simulate->parsed()) {
    return ssue::cmd_simulate(config, std::cerr);
  }
  if (estimate->parsed()) {
    return ssue::cmd_estimate(config, std::cerr);
  }
  if (observability->parsed()) {
    return ssue::cmd_observability(config, std::cerr);
  }
  if (analyze->parsed()) {
    return ssue::cmd_analyze(config, std::cerr);
  }
  return ssue::kExitConfig;
}
