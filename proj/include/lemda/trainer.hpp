#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lemda/augnet.hpp"
#include "lemda/baselines.hpp"
#include "lemda/data.hpp"
#include "lemda/errors.hpp"
#include "lemda/fusion.hpp"
#include "lemda/optim.hpp"
#include "lemda/rng.hpp"

namespace lemda {

struct LossWeights {
  double w1 = 1e-4;        // adversarial task-loss weight
  double w2 = 0.1;         // consistency weight
  double w3 = 0.1;         // encoder-KL weight
  double alpha_conf = 0.5; // confidence threshold for the consistency mask

  void validate() const;
};

enum class RegularizerKind { none, consistency, l2, consistency_plus_l2 };

RegularizerKind regularizer_from_string(const std::string& s);
std::string to_string(RegularizerKind kind);

struct StepReport {
  double task_loss_orig = 0.0;
  double task_loss_aug = 0.0;
  double consistency_loss = 0.0;
  double vae_kl = 0.0;
  double mask_fraction = 0.0;
  std::int64_t step_index = 0;
};

// mask[i] = (max_j probs[i][j] > alpha), strict inequality.
std::vector<bool> consistency_mask(const Tensor& probs, double alpha);

// Mean over the batch of the squared L2 distance between concatenated
// original and augmented features; the original side is detached.
Tensor l2_regularizer_variant(const std::vector<Tensor>& z, const std::vector<Tensor>& augmented);

// One joint min-max iteration: the augmentation-network update runs first
// (ascent on the augmented task loss, descent on the regularizers), then the
// task network updates on a fresh forward pass over original plus augmented
// features with the augmenter's parameters held constant. Each optimizer
// mutates only its own parameter set.
StepReport lemda_step(TaskNetwork& f, const AugmentationNetwork& g, const MultimodalBatch& batch,
                      const LossWeights& weights, Optimizer& opt_f, Optimizer& opt_g, Rng& rng,
                      RegularizerKind regularizer = RegularizerKind::consistency,
                      std::int64_t step_index = 0, bool update_g = true);

enum class AugmentChoice { none, lemda_mlp_vae, lemda_attention_vae, baseline };

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  AugmentChoice augment = AugmentChoice::none;
  BaselineSpec baseline;                 // used when augment == baseline
  LossWeights weights;
  RegularizerKind regularizer = RegularizerKind::consistency;
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr_f = 1e-3;
  double lr_g = 1e-3;
  int g_update_every = 1;    // stub for reduced-frequency updates; 1 = every step
  int early_stop_patience = 0;  // 0 disables early stopping
  std::uint64_t seed = 1;
  bool record_steps = true;
};

struct EpochRecord {
  int epoch = 0;
  double train_task_loss = 0.0;
  double consistency = 0.0;
  double vae_kl = 0.0;
  double mask_fraction = 0.0;
  double val_accuracy = 0.0;
};

struct TrainingHistory {
  std::vector<StepReport> steps;
  std::vector<EpochRecord> epochs;
  double final_val_accuracy = 0.0;
};

// One step under the configured augmentation choice: a lemda_step for the
// LeMDA variants, otherwise a supervised step on the (possibly transformed)
// batch.
StepReport training_step(TaskNetwork& f, const AugmentationNetwork* g, const MultimodalBatch& batch,
                         const TrainConfig& cfg, Optimizer& opt_f, Optimizer& opt_g, Rng& rng,
                         std::int64_t step_index);

// Runs shuffled mini-batch training for cfg.epochs. Validation is evaluated
// after each epoch without any augmentation. `g` may be null unless augment
// selects a LeMDA variant.
TrainingHistory train(TaskNetwork& f, const AugmentationNetwork* g, const Dataset& data,
                      const TrainConfig& cfg);

// CSV serialization of a history: one row per epoch, plus one row per step
// when verbose is set. Column names are part of the documented schema.
std::string history_epochs_csv(const TrainingHistory& h);
std::string history_steps_csv(const TrainingHistory& h);

double evaluate_accuracy(const TaskNetwork& f, const Dataset& data, const std::vector<int>& indices,
                         int batch_size = 256);

}  // namespace lemda
