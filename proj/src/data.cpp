#include "lemda/data.hpp"

#include <algorithm>
#include <stdexcept>

namespace lemda {

MultimodalBatch Dataset::make_batch(const std::vector<int>& indices) const {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
  MultimodalBatch batch;
  batch.specs = specs;
  batch.modalities.resize(specs.size());
  const int b = static_cast<int>(indices.size());
  for (std::size_t m = 0; m < specs.size(); ++m) {
    auto& md = batch.modalities[m];
    switch (specs[m].kind) {
      case ModalityKind::continuous_vector: {
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(b) * specs[m].dim);
        for (int idx : indices) {
          const auto& v = examples[static_cast<std::size_t>(idx)].values[m].numeric;
          data.insert(data.end(), v.begin(), v.end());
        }
        md.continuous = Tensor(Shape{b, specs[m].dim}, std::move(data));
        break;
      }
      case ModalityKind::token_sequence:
        for (int idx : indices) md.tokens.push_back(examples[static_cast<std::size_t>(idx)].values[m].tokens);
        break;
      case ModalityKind::categorical:
        for (int idx : indices) md.categories.push_back(examples[static_cast<std::size_t>(idx)].values[m].categories);
        break;
    }
  }
  for (int idx : indices) batch.labels.push_back(examples[static_cast<std::size_t>(idx)].label);
  return batch;
}

void Dataset::validate_splits() const {
  std::vector<int> seen(examples.size(), 0);
  auto mark = [&](const std::vector<int>& idx) {
    for (int i : idx) {
      if (i < 0 || i >= static_cast<int>(examples.size())) {
        throw std::logic_error("split index out of range");
      }
      ++seen[static_cast<std::size_t>(i)];
    }
  };
  mark(train_idx);
  mark(val_idx);
  mark(test_idx);
  for (int s : seen) {
    if (s != 1) throw std::logic_error("splits must be disjoint and cover all examples");
  }
}

}  // namespace lemda
