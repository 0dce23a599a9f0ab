#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lemda/config.hpp"
#include "lemda/errors.hpp"
#include "lemda/figure3.hpp"
#include "lemda/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Learned multimodal feature-space augmentation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string suite;
  std::string out_path = "figure3.svg";
  std::uint64_t fig_seed = 5;
  int warmup = 5;
  int timed = 30;

  auto* cmd_run = app.add_subcommand("run", "train with a config file and write metrics");
  cmd_run->add_option("--config", config_path, "experiment config file")->required();

  auto* cmd_ablate = app.add_subcommand("ablate", "run one ablation suite over a base config");
  cmd_ablate->add_option("--config", config_path, "base experiment config file")->required();
  cmd_ablate->add_option("--suite", suite,
                         "regularizer | architecture | confidence | weights | single_modality")
      ->required();

  auto* cmd_fig = app.add_subcommand("figure3", "render the decision-boundary SVG and sidecar CSV");
  cmd_fig->add_option("--out", out_path, "output SVG path");
  cmd_fig->add_option("--seed", fig_seed, "construction seed");

  auto* cmd_thr = app.add_subcommand("throughput", "measure optimizer steps per second");
  cmd_thr->add_option("--config", config_path, "experiment config file")->required();
  cmd_thr->add_option("--warmup", warmup, "warmup steps");
  cmd_thr->add_option("--steps", timed, "timed steps (>= 10)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      lemda::run(lemda::ExperimentConfig::parse_file(config_path));
      return 0;
    }
    if (cmd_ablate->parsed()) {
      lemda::ablation_suite(lemda::ExperimentConfig::parse_file(config_path), suite);
      return 0;
    }
    if (cmd_fig->parsed()) {
      lemda::Figure3Scenario sc = lemda::render_figure3(out_path, fig_seed);
      std::cout << "src=(" << sc.src.x << "," << sc.src.y << ") consistency d1=" << sc.consistency_d1
                << " d2=" << sc.consistency_d2 << "\n";
      return 0;
    }
    if (cmd_thr->parsed()) {
      lemda::ThroughputReport rep =
          lemda::measure_throughput(lemda::ExperimentConfig::parse_file(config_path), warmup, timed);
      std::printf("steps_per_second %.6g\nexamples_per_second %.6g\n", rep.steps_per_second,
                  rep.examples_per_second);
      return 0;
    }
  } catch (const lemda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lemda::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
