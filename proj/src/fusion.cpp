#include "lemda/fusion.hpp"

#include <numeric>
#include <stdexcept>

namespace lemda {

ModalitySpec ModalitySpec::continuous(std::string name, int dim, int feature_dim) {
  ModalitySpec s;
  s.name = std::move(name);
  s.kind = ModalityKind::continuous_vector;
  s.dim = dim;
  s.feature_dim = feature_dim;
  s.validate();
  return s;
}

ModalitySpec ModalitySpec::tokens(std::string name, int vocab_size, int max_len, int feature_dim) {
  ModalitySpec s;
  s.name = std::move(name);
  s.kind = ModalityKind::token_sequence;
  s.vocab_size = vocab_size;
  s.max_len = max_len;
  s.feature_dim = feature_dim;
  s.validate();
  return s;
}

ModalitySpec ModalitySpec::categorical(std::string name, std::vector<int> cardinalities,
                                       int feature_dim) {
  ModalitySpec s;
  s.name = std::move(name);
  s.kind = ModalityKind::categorical;
  s.cardinalities = std::move(cardinalities);
  s.feature_dim = feature_dim;
  s.validate();
  return s;
}

int ModalitySpec::encoder_input_width() const {
  switch (kind) {
    case ModalityKind::continuous_vector:
      return dim;
    case ModalityKind::token_sequence:
      return 0;  // embedding handles input width
    case ModalityKind::categorical:
      return std::accumulate(cardinalities.begin(), cardinalities.end(), 0);
  }
  return 0;
}

void ModalitySpec::validate() const {
  if (feature_dim <= 0) throw std::invalid_argument("modality '" + name + "': feature_dim must be positive");
  switch (kind) {
    case ModalityKind::continuous_vector:
      if (dim <= 0) throw std::invalid_argument("modality '" + name + "': continuous dim must be positive");
      break;
    case ModalityKind::token_sequence:
      if (vocab_size <= 0 || max_len <= 0) {
        throw std::invalid_argument("modality '" + name + "': vocab_size and max_len must be positive");
      }
      break;
    case ModalityKind::categorical:
      if (cardinalities.empty()) {
        throw std::invalid_argument("modality '" + name + "': categorical needs at least one field");
      }
      for (int c : cardinalities) {
        if (c < 2) throw std::invalid_argument("modality '" + name + "': field cardinality must be >= 2");
      }
      break;
  }
}

void validate_batch(const std::vector<ModalitySpec>& specs, const MultimodalBatch& batch) {
  if (batch.modalities.size() != specs.size()) {
    throw std::invalid_argument("batch has " + std::to_string(batch.modalities.size()) +
                                " modalities, specs expect " + std::to_string(specs.size()));
  }
  const int b = batch.size();
  if (b == 0) throw std::invalid_argument("empty batch");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    const auto& md = batch.modalities[i];
    switch (spec.kind) {
      case ModalityKind::continuous_vector:
        if (!md.continuous.defined() || md.continuous.rank() != 2 || md.continuous.dim(0) != b ||
            md.continuous.dim(1) != spec.dim) {
          throw std::invalid_argument("modality '" + spec.name + "': expected continuous [" +
                                      std::to_string(b) + "," + std::to_string(spec.dim) + "]");
        }
        break;
      case ModalityKind::token_sequence:
        if (static_cast<int>(md.tokens.size()) != b) {
          throw std::invalid_argument("modality '" + spec.name + "': token row count mismatch");
        }
        for (const auto& seq : md.tokens) {
          if (seq.empty() || static_cast<int>(seq.size()) > spec.max_len) {
            throw std::invalid_argument("modality '" + spec.name +
                                        "': token sequences must have length in [1, max_len]");
          }
        }
        break;
      case ModalityKind::categorical:
        if (static_cast<int>(md.categories.size()) != b) {
          throw std::invalid_argument("modality '" + spec.name + "': categorical row count mismatch");
        }
        for (const auto& row : md.categories) {
          if (row.size() != spec.cardinalities.size()) {
            throw std::invalid_argument("modality '" + spec.name + "': categorical field count mismatch");
          }
        }
        break;
    }
  }
}

MultimodalBatch gather_rows(const MultimodalBatch& batch, const std::vector<int>& rows) {
  MultimodalBatch out;
  out.specs = batch.specs;
  out.modalities.resize(batch.modalities.size());
  const int b = batch.size();
  for (int r : rows) {
    if (r < 0 || r >= b) throw std::out_of_range("gather_rows: row index out of range");
    out.labels.push_back(batch.labels[static_cast<std::size_t>(r)]);
  }
  const int nb = static_cast<int>(rows.size());
  for (std::size_t m = 0; m < batch.specs.size(); ++m) {
    const auto& src = batch.modalities[m];
    auto& dst = out.modalities[m];
    switch (batch.specs[m].kind) {
      case ModalityKind::continuous_vector: {
        const int d = batch.specs[m].dim;
        std::vector<double> data(static_cast<std::size_t>(nb) * d);
        for (int i = 0; i < nb; ++i) {
          std::copy_n(src.continuous.data().data() + static_cast<std::size_t>(rows[static_cast<std::size_t>(i)]) * d,
                      d, data.data() + static_cast<std::size_t>(i) * d);
        }
        dst.continuous = Tensor(Shape{nb, d}, std::move(data));
        break;
      }
      case ModalityKind::token_sequence:
        for (int r : rows) dst.tokens.push_back(src.tokens[static_cast<std::size_t>(r)]);
        break;
      case ModalityKind::categorical:
        for (int r : rows) dst.categories.push_back(src.categories[static_cast<std::size_t>(r)]);
        break;
    }
  }
  return out;
}

MultimodalBatch concat_batches(const MultimodalBatch& a, const MultimodalBatch& b) {
  if (a.specs.size() != b.specs.size()) throw std::invalid_argument("concat_batches: modality counts differ");
  MultimodalBatch out;
  out.specs = a.specs;
  out.modalities.resize(a.modalities.size());
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  const int nb = out.size();
  for (std::size_t m = 0; m < a.specs.size(); ++m) {
    const auto& ma = a.modalities[m];
    const auto& mb = b.modalities[m];
    auto& dst = out.modalities[m];
    switch (a.specs[m].kind) {
      case ModalityKind::continuous_vector: {
        std::vector<double> data = ma.continuous.data();
        data.insert(data.end(), mb.continuous.data().begin(), mb.continuous.data().end());
        dst.continuous = Tensor(Shape{nb, a.specs[m].dim}, std::move(data));
        break;
      }
      case ModalityKind::token_sequence:
        dst.tokens = ma.tokens;
        dst.tokens.insert(dst.tokens.end(), mb.tokens.begin(), mb.tokens.end());
        break;
      case ModalityKind::categorical:
        dst.categories = ma.categories;
        dst.categories.insert(dst.categories.end(), mb.categories.begin(), mb.categories.end());
        break;
    }
  }
  return out;
}

TaskNetwork::TaskNetwork(std::vector<ModalitySpec> specs, int num_classes, int hidden, int emb_dim,
                         Rng& rng)
    : specs_(std::move(specs)), num_classes_(num_classes) {
  if (specs_.empty()) throw std::invalid_argument("TaskNetwork: need at least one modality");
  if (num_classes_ < 2) throw std::invalid_argument("TaskNetwork: need at least two classes");
  int fused = 0;
  for (const auto& spec : specs_) {
    spec.validate();
    Encoder enc;
    if (spec.kind == ModalityKind::token_sequence) {
      enc.embedding = Embedding(spec.vocab_size, emb_dim, rng);
      enc.mlp = Mlp({emb_dim, hidden, spec.feature_dim}, rng);
    } else {
      enc.mlp = Mlp({spec.encoder_input_width(), hidden, spec.feature_dim}, rng);
    }
    encoders_.push_back(std::move(enc));
    fused += spec.feature_dim;
  }
  fusion_head_ = Mlp({fused, hidden, num_classes_}, rng);
}

Tensor TaskNetwork::encode(int modality, const ModalityData& data, int batch_size) const {
  const auto& spec = specs_[static_cast<std::size_t>(modality)];
  const auto& enc = encoders_[static_cast<std::size_t>(modality)];
  switch (spec.kind) {
    case ModalityKind::continuous_vector:
      return enc.mlp.forward(data.continuous);
    case ModalityKind::token_sequence:
      return enc.mlp.forward(enc.embedding.forward_mean(data.tokens));
    case ModalityKind::categorical: {
      const int width = spec.encoder_input_width();
      std::vector<double> onehot(static_cast<std::size_t>(batch_size) * width, 0.0);
      for (int r = 0; r < batch_size; ++r) {
        int off = 0;
        for (std::size_t f = 0; f < spec.cardinalities.size(); ++f) {
          const int code = data.categories[static_cast<std::size_t>(r)][f];
          if (code < 0 || code >= spec.cardinalities[f]) {
            throw std::out_of_range("modality '" + spec.name + "': categorical code " +
                                    std::to_string(code) + " outside cardinality " +
                                    std::to_string(spec.cardinalities[f]));
          }
          onehot[static_cast<std::size_t>(r) * width + off + code] = 1.0;
          off += spec.cardinalities[f];
        }
      }
      return enc.mlp.forward(Tensor(Shape{batch_size, width}, std::move(onehot)));
    }
  }
  throw std::logic_error("unreachable modality kind");
}

std::vector<Tensor> TaskNetwork::forward_before(const MultimodalBatch& batch) const {
  validate_batch(specs_, batch);
  std::vector<Tensor> features;
  features.reserve(specs_.size());
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    features.push_back(encode(static_cast<int>(i), batch.modalities[i], batch.size()));
  }
  return features;
}

Tensor TaskNetwork::forward_after(const std::vector<Tensor>& features) const {
  if (features.size() != specs_.size()) {
    throw std::invalid_argument("forward_after: got " + std::to_string(features.size()) +
                                " feature tensors, expected " + std::to_string(specs_.size()));
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].rank() != 2 || features[i].dim(1) != specs_[i].feature_dim) {
      throw std::invalid_argument("forward_after: feature " + std::to_string(i) + " has shape " +
                                  shape_str(features[i].shape()) + ", expected width " +
                                  std::to_string(specs_[i].feature_dim));
    }
  }
  return fusion_head_.forward(features.size() == 1 ? features[0] : concat_cols(features));
}

Tensor TaskNetwork::forward(const MultimodalBatch& batch) const {
  return forward_after(forward_before(batch));
}

Prediction TaskNetwork::predict(const MultimodalBatch& batch) const {
  NoGradGuard ng;
  Tensor probs = softmax(forward(batch));
  const int b = probs.dim(0), c = probs.dim(1);
  Prediction out;
  out.labels.resize(static_cast<std::size_t>(b));
  out.confidences.resize(static_cast<std::size_t>(b));
  for (int r = 0; r < b; ++r) {
    int best = 0;
    double best_p = probs.data()[static_cast<std::size_t>(r) * c];
    for (int j = 1; j < c; ++j) {
      const double p = probs.data()[static_cast<std::size_t>(r) * c + j];
      if (p > best_p) {
        best_p = p;
        best = j;
      }
    }
    out.labels[static_cast<std::size_t>(r)] = best;
    out.confidences[static_cast<std::size_t>(r)] = best_p;
  }
  return out;
}

ParameterSet TaskNetwork::params() const {
  ParameterSet ps;
  for (std::size_t i = 0; i < encoders_.size(); ++i) {
    const std::string prefix = "enc." + specs_[i].name;
    if (specs_[i].kind == ModalityKind::token_sequence) {
      encoders_[i].embedding.collect(ps, prefix + ".emb");
    }
    encoders_[i].mlp.collect(ps, prefix);
  }
  fusion_head_.collect(ps, "head");
  return ps;
}

int TaskNetwork::feature_width() const {
  int w = 0;
  for (const auto& s : specs_) w += s.feature_dim;
  return w;
}

std::vector<int> TaskNetwork::feature_dims() const {
  std::vector<int> dims;
  dims.reserve(specs_.size());
  for (const auto& s : specs_) dims.push_back(s.feature_dim);
  return dims;
}

}  // namespace lemda
