#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lemda/augnet.hpp"
#include "lemda/fusion.hpp"
#include "lemda/nn.hpp"
#include "lemda/tensor.hpp"

using namespace lemda;
using lemda::testing::gradcheck_input;
using lemda::testing::gradcheck_params;

namespace {
constexpr double kTol = 1e-4;
}

TEST_CASE("matmul gradient matches finite differences on random 3x4 * 4x2") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Rng rng(seed);
    Tensor a = Tensor::uniform({3, 4}, -1, 1, rng, true);
    Tensor b = Tensor::uniform({4, 2}, -1, 1, rng, true);
    const double err = gradcheck_params({{"a", a}, {"b", b}},
                                        [&]() { return sum(matmul(a, b)); });
    CHECK(err < kTol);
  }
}

TEST_CASE("elementwise op gradients") {
  Rng rng(4);
  Tensor x = Tensor::uniform({3, 3}, 0.2, 2.0, rng, true);
  Tensor y = Tensor::uniform({3, 3}, -1.5, 1.5, rng, true);

  CHECK(gradcheck_params({{"x", x}, {"y", y}}, [&]() { return sum(mul(x, y)); }) < kTol);
  CHECK(gradcheck_params({{"x", x}, {"y", y}}, [&]() { return sum(sub(x, y)); }) < kTol);
  CHECK(gradcheck_input(x, [&]() { return sum(exp(mul_scalar(x, 0.3))); }) < kTol);
  CHECK(gradcheck_input(x, [&]() { return sum(log(x)); }) < kTol);
  CHECK(gradcheck_input(y, [&]() { return sum(tanh(y)); }) < kTol);
  CHECK(gradcheck_input(y, [&]() { return sum(mul(relu(y), y)); }) < kTol);
  CHECK(gradcheck_input(y, [&]() { return mean(mul(y, y)); }) < kTol);
}

TEST_CASE("softmax and loss gradients") {
  for (std::uint64_t seed : {5ull, 6ull}) {
    Rng rng(seed);
    Tensor logits = Tensor::uniform({4, 3}, -2, 2, rng, true);
    Tensor weight = Tensor::uniform({4, 3}, -1, 1, rng);
    std::vector<int> labels{0, 2, 1, 2};

    CHECK(gradcheck_input(logits, [&]() { return sum(mul(softmax(logits), weight)); }) < kTol);
    CHECK(gradcheck_input(logits, [&]() { return cross_entropy(logits, labels); }) < kTol);

    Tensor soft = softmax(Tensor::uniform({4, 3}, -1, 1, rng));
    CHECK(gradcheck_input(logits, [&]() { return cross_entropy_soft(logits, soft); }) < kTol);

    Tensor p = Tensor::uniform({4, 3}, -1, 1, rng);
    std::vector<bool> mask{true, false, true, true};
    CHECK(gradcheck_input(logits, [&]() { return kl_divergence(p, logits, mask); }) < kTol);
  }
}

TEST_CASE("shape op gradients") {
  Rng rng(8);
  Tensor a = Tensor::uniform({3, 4}, -1, 1, rng, true);
  Tensor b = Tensor::uniform({3, 2}, -1, 1, rng, true);
  Tensor w = Tensor::uniform({3, 6}, -1, 1, rng);

  CHECK(gradcheck_params({{"a", a}, {"b", b}},
                         [&]() { return sum(mul(concat_cols({a, b}), w)); }) < kTol);
  CHECK(gradcheck_input(a, [&]() { return sum(mul(slice_cols(a, 1, 2), slice_cols(a, 2, 2))); }) < kTol);
  CHECK(gradcheck_input(a, [&]() { return sum(mul(permute_rows(a, {2, 0, 1}), a)); }) < kTol);
  CHECK(gradcheck_input(a, [&]() {
          Tensor st = stack_tokens({a, a});
          return sum(mul(st, st));
        }) < kTol);
  CHECK(gradcheck_input(a, [&]() { return sum(exp(reshape(a, {4, 3}))); }) < kTol);
  CHECK(gradcheck_input(a, [&]() {
          Tensor st = stack_tokens({a, a});
          return sum(mul(split_heads(st, 2), split_heads(st, 2)));
        }) < kTol);
  CHECK(gradcheck_input(a, [&]() {
          Tensor st = stack_tokens({a, a});
          return sum(mul(transpose_12(st), transpose_12(st)));
        }) < kTol);
}

TEST_CASE("bmm gradient") {
  Rng rng(10);
  Tensor a = Tensor::uniform({2, 3, 4}, -1, 1, rng, true);
  Tensor b = Tensor::uniform({2, 4, 2}, -1, 1, rng, true);
  CHECK(gradcheck_params({{"a", a}, {"b", b}}, [&]() { return sum(bmm(a, b)); }) < kTol);
}

TEST_CASE("layer norm gradient") {
  Rng rng(12);
  Tensor x = Tensor::uniform({4, 6}, -2, 2, rng, true);
  Tensor gamma = Tensor::uniform({6}, 0.5, 1.5, rng, true);
  Tensor beta = Tensor::uniform({6}, -0.5, 0.5, rng, true);
  Tensor w = Tensor::uniform({4, 6}, -1, 1, rng);
  const double err = gradcheck_params(
      {{"x", x}, {"gamma", gamma}, {"beta", beta}},
      [&]() { return sum(mul(layer_norm(x, gamma, beta), w)); });
  CHECK(err < kTol);
}

TEST_CASE("embedding mean gradient") {
  Rng rng(14);
  Tensor table = Tensor::uniform({7, 3}, -1, 1, rng, true);
  std::vector<std::vector<int>> tokens{{0, 2, 2}, {5}, {1, 6}};
  Tensor w = Tensor::uniform({3, 3}, -1, 1, rng);
  CHECK(gradcheck_input(table, [&]() { return sum(mul(embedding_mean(table, tokens), w)); }) < kTol);
}

TEST_CASE("clamp and gaussian sample gradients") {
  Rng rng(16);
  Tensor mu = Tensor::uniform({3, 4}, -1, 1, rng, true);
  Tensor lv = Tensor::uniform({3, 4}, -2, 0.5, rng, true);
  CHECK(gradcheck_input(mu, [&]() { return sum(mul(clamp(mu, -0.5, 0.5), mu)); }) < kTol);

  // The sampling path must be a deterministic function of (mu, lv) for the
  // oracle, so the noise rng is re-seeded on every evaluation.
  const double err = gradcheck_params({{"mu", mu}, {"lv", lv}}, [&]() {
    Rng noise(999);
    Tensor s = gaussian_sample(mu, lv, noise);
    return sum(mul(s, s));
  });
  CHECK(err < kTol);
}

TEST_CASE("two-layer mlp: every parameter matches finite differences") {
  for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
    Rng rng(seed);
    Mlp mlp({5, 8, 3}, rng);
    Tensor x = Tensor::uniform({4, 5}, -1, 1, rng);
    std::vector<int> labels{0, 1, 2, 1};
    ParameterSet ps;
    mlp.collect(ps, "mlp");
    const double err =
        gradcheck_params(ps, [&]() { return cross_entropy(mlp.forward(x), labels); });
    CHECK(err < kTol);
  }
}

TEST_CASE("transformer block gradient") {
  Rng rng(30);
  TransformerBlock block(8, 2, 16, 0.0, rng);
  Tensor x = Tensor::uniform({2, 3, 8}, -1, 1, rng, true);
  ParameterSet ps;
  block.collect(ps, "blk");
  ps.push_back({"x", x});
  Rng fwd(50);
  const double err = gradcheck_params(ps, [&]() {
    Rng noise(50);
    return sum(mul(block.forward(x, noise, false), x));
  });
  CHECK(err < 5e-4);  // layer norm chains compound rounding slightly
}

TEST_CASE("task network end to end gradient") {
  Rng rng(33);
  std::vector<ModalitySpec> specs{ModalitySpec::continuous("num", 3, 4),
                                  ModalitySpec::tokens("txt", 9, 5, 4)};
  TaskNetwork net(specs, 3, 6, 4, rng);
  MultimodalBatch batch;
  batch.specs = specs;
  batch.modalities.resize(2);
  batch.modalities[0].continuous = Tensor::uniform({3, 3}, -1, 1, rng);
  batch.modalities[1].tokens = {{1, 2, 3}, {4}, {5, 6}};
  batch.labels = {0, 2, 1};
  const double err = gradcheck_params(
      net.params(), [&]() { return cross_entropy(net.forward(batch), batch.labels); });
  CHECK(err < kTol);
}

TEST_CASE("mlp vae end to end gradient through sampling and dropout") {
  Rng rng(35);
  MlpVae vae({4, 3}, 4, 8, 0.5, rng);
  std::vector<Tensor> feats{Tensor::uniform({3, 4}, -1, 1, rng, true),
                            Tensor::uniform({3, 3}, -1, 1, rng, true)};
  ParameterSet ps = vae.params();
  ps.push_back({"f0", feats[0]});
  ps.push_back({"f1", feats[1]});
  const double err = gradcheck_params(ps, [&]() {
    Rng noise(77);
    AugmentResult res = vae.augment(feats, noise, true);
    Tensor s = add(sum(mul(res.features[0], res.features[0])),
                   sum(mul(res.features[1], res.features[1])));
    return add(s, res.kl);
  });
  CHECK(err < kTol);
}

TEST_CASE("attention vae end to end gradient") {
  Rng rng(37);
  AttentionVae::Config cfg;
  cfg.latent_dim = 3;
  cfg.d_model = 8;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.ff_hidden = 12;
  cfg.dropout_p = 0.1;
  AttentionVae vae({4, 3}, cfg, rng);
  std::vector<Tensor> feats{Tensor::uniform({2, 4}, -1, 1, rng, true),
                            Tensor::uniform({2, 3}, -1, 1, rng, true)};
  ParameterSet ps = vae.params();
  ps.push_back({"f0", feats[0]});
  ps.push_back({"f1", feats[1]});
  const double err = gradcheck_params(ps, [&]() {
    Rng noise(88);
    AugmentResult res = vae.augment(feats, noise, true);
    Tensor s = add(sum(mul(res.features[0], res.features[0])),
                   sum(mul(res.features[1], res.features[1])));
    return add(s, res.kl);
  });
  CHECK(err < 5e-4);
}
