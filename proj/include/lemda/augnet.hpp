#pragma once

#include <memory>
#include <vector>

#include "lemda/nn.hpp"
#include "lemda/optim.hpp"
#include "lemda/rng.hpp"
#include "lemda/tensor.hpp"

namespace lemda {

struct AugmentResult {
  std::vector<Tensor> features;  // same shapes as the inputs
  Tensor kl;                     // scalar: mean encoder KL against N(0, I)
};

// Learnable feature-space augmenter: maps the N fusion-boundary features to N
// augmented features through a sampled latent code. Only the encoder KL term
// is produced; there is no reconstruction loss.
class AugmentationNetwork {
 public:
  virtual ~AugmentationNetwork() = default;

  // In train mode the latent is sampled with reparameterized noise and
  // dropout is active; in eval mode the latent is the encoder mean and
  // dropout is off.
  virtual AugmentResult augment(const std::vector<Tensor>& features, Rng& rng, bool train) const = 0;

  virtual ParameterSet params() const = 0;
};

// VAE over the concatenation of all modality features.
class MlpVae final : public AugmentationNetwork {
 public:
  MlpVae(std::vector<int> feature_dims, int latent_dim, int hidden, double dropout_p, Rng& rng);

  AugmentResult augment(const std::vector<Tensor>& features, Rng& rng, bool train) const override;
  ParameterSet params() const override;

  int latent_dim() const { return latent_dim_; }

 private:
  std::vector<int> feature_dims_;
  int total_dim_ = 0;
  int latent_dim_ = 8;
  double dropout_p_ = 0.5;
  Linear enc_hidden_, enc_out_;  // enc_out emits [mu | log_var]
  Linear dec_hidden_, dec_out_;
};

// VAE treating the N modality features as N tokens through self-attention
// encoder/decoder stacks, with a per-token latent.
class AttentionVae final : public AugmentationNetwork {
 public:
  struct Config {
    int latent_dim = 8;
    int d_model = 64;
    int layers = 4;
    int heads = 8;
    int ff_hidden = 128;
    double dropout_p = 0.1;
  };

  AttentionVae(std::vector<int> feature_dims, const Config& cfg, Rng& rng);

  AugmentResult augment(const std::vector<Tensor>& features, Rng& rng, bool train) const override;
  ParameterSet params() const override;

 private:
  std::vector<int> feature_dims_;
  Config cfg_;
  std::vector<Linear> in_proj_;   // per modality: d_i -> d_model
  std::vector<TransformerBlock> enc_blocks_;
  Linear to_latent_;              // d_model -> 2 * latent, per token
  Linear from_latent_;            // latent -> d_model
  std::vector<TransformerBlock> dec_blocks_;
  std::vector<Linear> out_proj_;  // per modality: d_model -> d_i
};

// Mean over the batch of KL(N(mu, diag(exp(log_var))) || N(0, I)), summed
// over all non-batch dims. Closed form, differentiable in mu and log_var.
Tensor standard_normal_kl(const Tensor& mu, const Tensor& log_var);

// Scales the log_var half of a [mu | log_var] head so initial variances start
// near exp(bias); used to keep early augmentations small.
void init_log_var_head(Linear& head, int latent_dim, double bias);

}  // namespace lemda
