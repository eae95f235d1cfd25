// Command-line driver for echoing experiments.
//
//   dataecho run    --config exp.json [--seed N] [--out DIR] [--deterministic]
//   dataecho sweep  --config exp.json --axis echo_factor --values 1,2,4,8 [...]
//   dataecho report --config exp.json [--out DIR]

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dataecho/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_run_flags) {
  cmd->add_option("--config", flags.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out, "output directory (overrides output_dir)");
  if (with_run_flags) {
    cmd->add_option("--seed", flags.seed, "master seed (overrides master_seed)");
    cmd->add_flag("--deterministic", flags.deterministic, "single-threaded, no prefetch");
  }
}

dataecho::ExperimentConfig load(const CommonFlags& flags) {
  auto cfg = dataecho::load_config(flags.config);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.out) cfg.output_dir = *flags.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data echoing pipeline experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, report_flags;
  auto* run = app.add_subcommand("run", "run a hyperparameter-searched experiment");
  add_common(run, run_flags, true);

  auto* sweep = app.add_subcommand("sweep", "repeat an experiment over values of one axis");
  add_common(sweep, sweep_flags, true);
  std::string axis;
  std::vector<double> values;
  sweep->add_option("--axis", axis, "echo_factor | batch_size | buffer_size")
      ->required()
      ->check(CLI::IsMember({"echo_factor", "batch_size", "buffer_size"}));
  sweep->add_option("--values", values, "comma-separated axis values")->required()->delimiter(',');

  auto* rep = app.add_subcommand("report", "rebuild summary.json from trials.csv");
  add_common(rep, report_flags, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load(run_flags);
      dataecho::run_experiment(cfg, {.deterministic = run_flags.deterministic});
    } else if (*sweep) {
      const auto cfg = load(sweep_flags);
      dataecho::sweep(cfg, dataecho::parse_sweep_axis(axis), values, {.deterministic = sweep_flags.deterministic});
    } else if (*rep) {
      const auto cfg = load(report_flags);
      dataecho::report(cfg, cfg.output_dir);
    }
  } catch (const dataecho::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
