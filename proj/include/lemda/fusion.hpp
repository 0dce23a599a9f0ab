#pragma once

#include <string>
#include <vector>

#include "lemda/nn.hpp"
#include "lemda/optim.hpp"
#include "lemda/tensor.hpp"

namespace lemda {

enum class ModalityKind { continuous_vector, token_sequence, categorical };

struct ModalitySpec {
  std::string name;
  ModalityKind kind = ModalityKind::continuous_vector;
  int dim = 0;                      // continuous input width
  int vocab_size = 0;               // token sequences
  int max_len = 0;                  // token sequences
  std::vector<int> cardinalities;   // categorical fields; code 0 is the unknown bucket
  int feature_dim = 0;              // encoder output width

  static ModalitySpec continuous(std::string name, int dim, int feature_dim);
  static ModalitySpec tokens(std::string name, int vocab_size, int max_len, int feature_dim);
  static ModalitySpec categorical(std::string name, std::vector<int> cardinalities, int feature_dim);

  int encoder_input_width() const;  // one-hot width for categorical, dim for continuous
  void validate() const;
};

// One modality's values for a batch; exactly one member is populated,
// matching the spec's kind.
struct ModalityData {
  Tensor continuous;                         // [b, dim]
  std::vector<std::vector<int>> tokens;      // b sequences, each non-empty
  std::vector<std::vector<int>> categories;  // b rows of field codes
};

struct MultimodalBatch {
  std::vector<ModalitySpec> specs;
  std::vector<ModalityData> modalities;
  std::vector<int> labels;
  Tensor soft_labels;  // defined only for mixing baselines; [b, num_classes]

  int size() const { return static_cast<int>(labels.size()); }
};

struct Prediction {
  std::vector<int> labels;
  std::vector<double> confidences;
};

// Late-fusion task network: one encoder per modality, then an MLP classifier
// over the concatenated modality features. Concatenation order is spec order.
class TaskNetwork {
 public:
  TaskNetwork() = default;
  TaskNetwork(std::vector<ModalitySpec> specs, int num_classes, int hidden, int emb_dim, Rng& rng);

  // Per-modality features z_i at the fusion boundary, shape [b, feature_dim_i].
  std::vector<Tensor> forward_before(const MultimodalBatch& batch) const;

  // Fusion classifier logits from boundary features.
  Tensor forward_after(const std::vector<Tensor>& features) const;

  Tensor forward(const MultimodalBatch& batch) const;

  // Argmax label and max softmax probability per row. Ties break to the
  // lowest class index. Runs untracked; never applies augmentation.
  Prediction predict(const MultimodalBatch& batch) const;

  ParameterSet params() const;

  const std::vector<ModalitySpec>& specs() const { return specs_; }
  int num_classes() const { return num_classes_; }
  int feature_width() const;  // sum of feature_dims
  std::vector<int> feature_dims() const;

 private:
  struct Encoder {
    Embedding embedding;  // token modalities only
    Mlp mlp;
  };

  Tensor encode(int modality, const ModalityData& data, int batch_size) const;

  std::vector<ModalitySpec> specs_;
  std::vector<Encoder> encoders_;
  Mlp fusion_head_;
  int num_classes_ = 0;
};

// Throws std::invalid_argument when a batch does not conform to the specs.
void validate_batch(const std::vector<ModalitySpec>& specs, const MultimodalBatch& batch);

// Rebuilds a batch from the given row indices (repeats allowed).
MultimodalBatch gather_rows(const MultimodalBatch& batch, const std::vector<int>& rows);

// Concatenates two batches with identical specs along the batch dim.
MultimodalBatch concat_batches(const MultimodalBatch& a, const MultimodalBatch& b);

}  // namespace lemda
