#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "aerialqp/cli.hpp"

namespace {

void add_run_flags(CLI::App* cmd, aerialqp::RunOptions& opts, std::string& integral, double& duration,
                   std::uint64_t& seed) {
  cmd->add_option("--scenario", opts.scenario_path, "Scenario file")->required();
  cmd->add_option("--model", opts.model_path, "Model file (overrides the scenario entry)");
  cmd->add_option("--gains", opts.gains_path, "Gain file (overrides the scenario entry)");
  cmd->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--seed", seed, "Noise seed override");
  cmd->add_option("--integral", integral, "Integral term override")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--duration", duration, "Duration override, s")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  // AERIALQP_LOG_LEVEL=debug|info|warn|error|off
  const char* level = std::getenv("AERIALQP_LOG_LEVEL");
  spdlog::set_level(level != nullptr ? spdlog::level::from_str(level) : spdlog::level::warn);

  CLI::App app{"Whole-body QP control of a quadrotor with an n-joint arm"};
  app.require_subcommand(1);

  aerialqp::RunOptions run_opts, ablate_opts;
  std::string run_integral, ablate_integral;
  double run_duration = 0.0, ablate_duration = 0.0;
  std::uint64_t run_seed = 0, ablate_seed = 0;
  std::string validate_model;

  CLI::App* run = app.add_subcommand("run", "Run one scenario and write CSV plus summary");
  add_run_flags(run, run_opts, run_integral, run_duration, run_seed);
  CLI::App* ablate = app.add_subcommand("ablate", "Run a scenario with the integral term on and off");
  add_run_flags(ablate, ablate_opts, ablate_integral, ablate_duration, ablate_seed);
  CLI::App* validate = app.add_subcommand("validate", "Check dynamics properties of a model file");
  validate->add_option("--model", validate_model, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return aerialqp::kExitConfigError;
  }

  auto finish = [](CLI::App* cmd, aerialqp::RunOptions& opts, const std::string& integral, double duration,
                   std::uint64_t seed) {
    if (cmd->count("--integral") > 0) opts.integral = integral == "on";
    if (cmd->count("--duration") > 0) opts.duration = duration;
    if (cmd->count("--seed") > 0) opts.seed = seed;
  };

  try {
    if (*run) {
      finish(run, run_opts, run_integral, run_duration, run_seed);
      return aerialqp::cmd_run(run_opts, std::cout, std::cerr);
    }
    if (*ablate) {
      finish(ablate, ablate_opts, ablate_integral, ablate_duration, ablate_seed);
      return aerialqp::cmd_ablate(ablate_opts, std::cout, std::cerr);
    }
    return aerialqp::cmd_validate(validate_model, std::cout, std::cerr);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return EXIT_FAILURE;
  }
}
