#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lemda/fusion.hpp"
#include "lemda/rng.hpp"
#include "lemda/tensor.hpp"

namespace lemda {

enum class BaselineKind { none, input_aug, mixup, manifold_mixup, mixgen };

BaselineKind baseline_kind_from_string(const std::string& s);
std::string to_string(BaselineKind kind);

struct BaselineSpec {
  BaselineKind kind = BaselineKind::none;
  double alpha = 0.8;    // Beta parameter and j-threshold for the mixup family
  double lambda = 0.5;   // mixgen interpolation weight
  // Modality names to augment; used for the single-modality study. The
  // harness resolves "all" into the full name list before reaching the ops.
  std::vector<std::string> toggles;

  void validate() const;  // alpha in (0,1], lambda in [0,1]
};

bool toggled(const std::vector<std::string>& toggles, const std::string& name);

// Independent per-modality input augmentation. Continuous modalities get one
// random transform per example (gaussian noise up to 0.1 * per-feature batch
// std, scaling in [0.9, 1.1], or feature dropout p=0.1); token sequences get
// one of swap / delete / duplicate with degenerate-length guards; categorical
// modalities pass through. An empty toggle set returns the batch unchanged.
MultimodalBatch input_augment(const MultimodalBatch& batch, const std::vector<std::string>& toggles,
                              Rng& rng);

// Pairwise mixing: numeric modalities and one-hot labels interpolate with
// lambda ~ Beta(alpha, alpha) per pair; token and categorical modalities pick
// whole elements by the rule j ~ U(0,1), j < alpha -> first element.
// lambda_override forces the interpolation weight (testing hook).
MultimodalBatch mixup_extended(const MultimodalBatch& batch_a, const MultimodalBatch& batch_b,
                               double alpha, Rng& rng, int num_classes,
                               std::optional<double> lambda_override = std::nullopt,
                               const std::vector<std::string>* toggles = nullptr);

// Feature-space interpolation at the fusion boundary, with matching one-hot
// label mixing. Gradients flow into both feature operands.
std::pair<std::vector<Tensor>, Tensor> manifold_mixup(
    const std::vector<Tensor>& features_a, const std::vector<Tensor>& features_b,
    const std::vector<int>& labels_a, const std::vector<int>& labels_b, double alpha, Rng& rng,
    int num_classes, std::optional<double> lambda_override = std::nullopt,
    const std::vector<ModalitySpec>* specs = nullptr,
    const std::vector<std::string>* toggles = nullptr);

// Interpolates continuous modalities with fixed lambda and concatenates token
// sequences (truncated to max_len); labels come from batch_a. Requires at
// least one continuous and one token modality.
MultimodalBatch mixgen_style(const MultimodalBatch& batch_a, const MultimodalBatch& batch_b,
                             double lambda, const std::vector<std::string>* toggles = nullptr);

}  // namespace lemda
