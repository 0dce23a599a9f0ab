#pragma once

#include <string>
#include <vector>

#include "lemda/optim.hpp"
#include "lemda/rng.hpp"
#include "lemda/tensor.hpp"

namespace lemda {

// Fully connected layer, weight [in, out], bias [out].
// Weights use uniform Kaiming-style fan-in init, biases start at zero.
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(int in, int out, Rng& rng);

  Tensor forward(const Tensor& x) const;  // rank 2 or 3 input
  void collect(ParameterSet& ps, const std::string& prefix) const;
};

// Stack of Linear layers with relu between them; the last layer is linear.
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(const std::vector<int>& widths, Rng& rng);

  Tensor forward(const Tensor& x) const;
  void collect(ParameterSet& ps, const std::string& prefix) const;
};

struct Embedding {
  Tensor table;  // [vocab, dim]

  Embedding() = default;
  Embedding(int vocab, int dim, Rng& rng);

  Tensor forward_mean(const std::vector<std::vector<int>>& tokens) const;
  void collect(ParameterSet& ps, const std::string& prefix) const;
};

struct LayerNormLayer {
  Tensor gamma;
  Tensor beta;

  LayerNormLayer() = default;
  explicit LayerNormLayer(int dim);

  Tensor forward(const Tensor& x) const;
  void collect(ParameterSet& ps, const std::string& prefix) const;
};

// Post-norm transformer encoder block: self-attention over the token axis
// followed by a two-layer feedforward, each with residual + layer norm.
struct TransformerBlock {
  Linear wq, wk, wv, wo;
  Linear ff1, ff2;
  LayerNormLayer ln1, ln2;
  int heads = 1;
  double dropout_p = 0.0;

  TransformerBlock() = default;
  TransformerBlock(int d_model, int heads, int ff_hidden, double dropout_p, Rng& rng);

  Tensor forward(const Tensor& x, Rng& rng, bool train) const;  // [b, n, d_model]
  void collect(ParameterSet& ps, const std::string& prefix) const;
};

void zero_all(ParameterSet& ps);  // test helper: sets every parameter to 0

}  // namespace lemda
