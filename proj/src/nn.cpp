#include "lemda/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace lemda {

Linear::Linear(int in, int out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  weight = Tensor::uniform(Shape{in, out}, -bound, bound, rng, true);
  bias = Tensor::zeros(Shape{out}, true);
}

Tensor Linear::forward(const Tensor& x) const { return add(matmul(x, weight), bias); }

void Linear::collect(ParameterSet& ps, const std::string& prefix) const {
  ps.push_back({prefix + ".weight", weight});
  ps.push_back({prefix + ".bias", bias});
}

Mlp::Mlp(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output width");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.emplace_back(widths[i], widths[i + 1], rng);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(h);
    if (i + 1 < layers.size()) h = relu(h);
  }
  return h;
}

void Mlp::collect(ParameterSet& ps, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(ps, prefix + ".l" + std::to_string(i));
  }
}

Embedding::Embedding(int vocab, int dim, Rng& rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(dim));
  table = Tensor::uniform(Shape{vocab, dim}, -bound, bound, rng, true);
}

Tensor Embedding::forward_mean(const std::vector<std::vector<int>>& tokens) const {
  return embedding_mean(table, tokens);
}

void Embedding::collect(ParameterSet& ps, const std::string& prefix) const {
  ps.push_back({prefix + ".table", table});
}

LayerNormLayer::LayerNormLayer(int dim) {
  gamma = Tensor::full(Shape{dim}, 1.0, true);
  beta = Tensor::zeros(Shape{dim}, true);
}

Tensor LayerNormLayer::forward(const Tensor& x) const { return layer_norm(x, gamma, beta); }

void LayerNormLayer::collect(ParameterSet& ps, const std::string& prefix) const {
  ps.push_back({prefix + ".gamma", gamma});
  ps.push_back({prefix + ".beta", beta});
}

TransformerBlock::TransformerBlock(int d_model, int heads_in, int ff_hidden, double dropout,
                                   Rng& rng)
    : wq(d_model, d_model, rng),
      wk(d_model, d_model, rng),
      wv(d_model, d_model, rng),
      wo(d_model, d_model, rng),
      ff1(d_model, ff_hidden, rng),
      ff2(ff_hidden, d_model, rng),
      ln1(d_model),
      ln2(d_model),
      heads(heads_in),
      dropout_p(dropout) {
  if (d_model % heads != 0) {
    throw std::invalid_argument("TransformerBlock: d_model " + std::to_string(d_model) +
                                " not divisible by heads " + std::to_string(heads));
  }
}

Tensor TransformerBlock::forward(const Tensor& x, Rng& rng, bool train) const {
  const int dh = x.dim(2) / heads;
  Tensor q = split_heads(wq.forward(x), heads);
  Tensor k = split_heads(wk.forward(x), heads);
  Tensor v = split_heads(wv.forward(x), heads);
  Tensor scores = mul_scalar(bmm(q, transpose_12(k)), 1.0 / std::sqrt(static_cast<double>(dh)));
  Tensor attn = softmax(scores);
  Tensor ctx = merge_heads(bmm(attn, v), heads);
  Tensor h = ln1.forward(add(x, dropout(wo.forward(ctx), dropout_p, rng, train)));
  Tensor f = ff2.forward(relu(ff1.forward(h)));
  return ln2.forward(add(h, dropout(f, dropout_p, rng, train)));
}

void TransformerBlock::collect(ParameterSet& ps, const std::string& prefix) const {
  wq.collect(ps, prefix + ".wq");
  wk.collect(ps, prefix + ".wk");
  wv.collect(ps, prefix + ".wv");
  wo.collect(ps, prefix + ".wo");
  ff1.collect(ps, prefix + ".ff1");
  ff2.collect(ps, prefix + ".ff2");
  ln1.collect(ps, prefix + ".ln1");
  ln2.collect(ps, prefix + ".ln2");
}

void zero_all(ParameterSet& ps) {
  for (auto& p : ps) {
    std::fill(p.tensor.data().begin(), p.tensor.data().end(), 0.0);
  }
}

}  // namespace lemda
