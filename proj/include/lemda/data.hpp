#pragma once

#include <string>
#include <vector>

#include "lemda/fusion.hpp"

namespace lemda {

struct ModalityValue {
  std::vector<double> numeric;   // continuous kind
  std::vector<int> tokens;       // token_sequence kind
  std::vector<int> categories;   // categorical kind
};

struct MultimodalExample {
  std::vector<ModalityValue> values;  // one per modality, spec order
  int label = 0;
};

struct SplitSizes {
  int train = 0;
  int val = 0;
  int test = 0;
  int total() const { return train + val + test; }
};

struct Dataset {
  std::vector<ModalitySpec> specs;
  std::vector<MultimodalExample> examples;
  std::vector<int> train_idx, val_idx, test_idx;
  int num_classes = 2;

  MultimodalBatch make_batch(const std::vector<int>& indices) const;
  void validate_splits() const;  // disjoint and covering
};

}  // namespace lemda
