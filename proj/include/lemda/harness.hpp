#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lemda/augnet.hpp"
#include "lemda/config.hpp"
#include "lemda/data.hpp"
#include "lemda/trainer.hpp"

namespace lemda {

struct SeedRunResult {
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double roc_auc = 0.0;  // NaN for non-binary tasks
  double steps_per_second = 0.0;
  double wall_seconds = 0.0;
  TrainingHistory history;
};

struct RunResult {
  std::vector<SeedRunResult> per_seed;
  double mean_test_accuracy = 0.0;
  double std_test_accuracy = 0.0;
  double mean_throughput = 0.0;
  double wall_clock_seconds = 0.0;
};

Dataset build_dataset(const ExperimentConfig& cfg);
TaskNetwork build_task_network(const ExperimentConfig& cfg, const Dataset& data, Rng& rng);
std::unique_ptr<AugmentationNetwork> build_augnet(const ExperimentConfig& cfg,
                                                  const TaskNetwork& net, Rng& rng);
TrainConfig build_train_config(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed);

// Trains one seeded run and computes final metrics; writes nothing.
SeedRunResult run_one_seed(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed);

// Full experiment: every seed, metrics.csv / curves.csv / config.echo (and
// steps.csv when verbose) under output_dir, and a summary on stdout.
// Timing numbers stay out of the CSVs so identical configs produce
// byte-identical files.
RunResult run(const ExperimentConfig& cfg);

struct AblationRow {
  std::string suite;
  std::string cell;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  int n_seeds = 0;
  bool applicable = true;
};

// Expands a base config into one of the study grids (regularizer,
// architecture, confidence, weights, single_modality), runs every cell, and
// writes ablation_<suite>.csv under the base config's output_dir.
std::vector<AblationRow> ablation_suite(const ExperimentConfig& base, const std::string& suite);

std::string ablation_csv(const std::vector<AblationRow>& rows);

struct ThroughputReport {
  double steps_per_second = 0.0;
  double examples_per_second = 0.0;
  int warmup_steps = 0;
  int timed_steps = 0;
};

// Median optimizer-steps/second over `timed_steps` after warmup.
ThroughputReport measure_throughput(const ExperimentConfig& cfg, int warmup_steps = 5,
                                    int timed_steps = 30);

}  // namespace lemda
