#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lemda/augnet.hpp"
#include "lemda/baselines.hpp"
#include "lemda/errors.hpp"
#include "lemda/trainer.hpp"

namespace lemda {

// Flat key=value experiment configuration. Unknown keys are hard errors;
// echo() emits every resolved key so a config.echo file re-runs identically.
// The grammar: one `key = value` per line, '#' starts a comment, blank lines
// ignored. List values are comma-separated.
struct ExperimentConfig {
  // dataset
  std::string dataset = "complementary";  // complementary | perfect_correlation | ingest
  int n_train = 200;
  int n_val = 100;
  int n_test = 2000;
  int num_classes = 3;     // perfect_correlation only
  double noise = 2.0;
  std::uint64_t data_seed = 7;

  // ingestion
  std::string ingest_path;
  std::string label_col = "label";
  std::vector<std::string> numeric_cols;
  std::vector<std::string> text_cols;
  std::vector<std::string> categorical_cols;
  int max_len = 8;

  // networks
  int hidden = 64;
  int emb_dim = 32;
  int feature_dim = 16;

  // augmentation choice
  std::string augmentation = "none";  // none | lemda_mlp_vae | lemda_attention_vae |
                                      // input_aug | mixup | manifold_mixup | mixgen

  // LeMDA loss weights and regularizer
  double w1 = 1e-4;
  double w2 = 0.1;
  double w3 = 0.1;
  double alpha_conf = 0.5;
  std::string regularizer = "consistency";

  // VAE
  int latent_dim = 8;
  int vae_hidden = 64;
  double vae_dropout = 0.5;
  int attn_layers = 4;
  int attn_heads = 8;
  int attn_d_model = 64;
  int attn_ff = 128;
  double attn_dropout = 0.1;

  // optimization
  std::string optimizer = "adam";
  double lr_f = 1e-3;
  double lr_g = 1e-3;
  int epochs = 30;
  int batch_size = 32;
  int g_update_every = 1;
  int early_stop_patience = 0;

  // baselines
  double mixup_alpha = 0.8;
  double mixgen_lambda = 0.5;
  std::string augment_modalities = "all";  // or a comma list of modality names

  // runs
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "out";
  bool verbose_steps = false;

  static ExperimentConfig parse_text(const std::string& text);
  static ExperimentConfig parse_file(const std::string& path);

  std::string echo() const;
  void validate() const;

  bool is_lemda() const;
  bool is_baseline() const;
  AugmentChoice augment_choice() const;
  BaselineKind baseline_kind() const;  // valid when is_baseline()
};

}  // namespace lemda
