#include <cmath>

#include "doctest.h"
#include "lemda/tensor.hpp"

using namespace lemda;

TEST_CASE("matmul identity and small products") {
  Tensor eye = Tensor::from_rows({{1, 0}, {0, 1}});
  Tensor m = Tensor::from_rows({{3, 4}, {5, 6}});
  Tensor out = matmul(eye, m);
  CHECK(out.at({0, 0}) == 3.0);
  CHECK(out.at({0, 1}) == 4.0);
  CHECK(out.at({1, 0}) == 5.0);
  CHECK(out.at({1, 1}) == 6.0);

  Tensor row = Tensor::from_rows({{1, 2}});
  Tensor col = Tensor::from_rows({{3}, {4}});
  CHECK(matmul(row, col).value() == 11.0);
}

TEST_CASE("matmul rejects mismatched inner dims with both shapes named") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 2});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2,3]"), std::invalid_argument);
}

TEST_CASE("elementwise basics") {
  Tensor x({3}, {-1, 0, 2});
  Tensor r = relu(x);
  CHECK(r.data() == std::vector<double>{0, 0, 2});

  Tensor a({2}, {1, 2});
  Tensor b({2}, {3, 4});
  CHECK(add(a, b).data() == std::vector<double>{4, 6});
  CHECK(sub(a, b).data() == std::vector<double>{-2, -2});
  CHECK(mul(a, b).data() == std::vector<double>{3, 8});
}

TEST_CASE("relu subgradient at zero is zero") {
  Tensor x({2}, {-1, 2}, true);
  backward(sum(relu(x)));
  CHECK(x.grad() == std::vector<double>{0, 1});

  Tensor z({1}, {0.0}, true);
  backward(sum(relu(z)));
  CHECK(z.grad()[0] == 0.0);
}

TEST_CASE("log rejects non-positive input") {
  Tensor x({2}, {1.0, 0.0});
  CHECK_THROWS_AS(log(x), std::domain_error);
  Tensor y({1}, {-2.0});
  CHECK_THROWS_AS(log(y), std::domain_error);
}

TEST_CASE("broadcasting: leading batch dim and scalars") {
  Tensor x = Tensor::from_rows({{1, 2}, {3, 4}});
  Tensor bias({2}, {10, 20});
  Tensor out = add(x, bias);
  CHECK(out.at({1, 0}) == 13.0);
  CHECK(out.at({1, 1}) == 24.0);

  Tensor s = Tensor::scalar(2.0);
  CHECK(mul(x, s).at({1, 1}) == 8.0);

  Tensor bad({3}, {1, 2, 3});
  CHECK_THROWS_AS(add(x, bad), std::invalid_argument);
}

TEST_CASE("broadcast gradients reduce over the batch dim") {
  Tensor x = Tensor::from_rows({{1, 2}, {3, 4}});
  Tensor bias({2}, {0.5, -0.5}, true);
  backward(sum(add(x, bias)));
  CHECK(bias.grad() == std::vector<double>{2, 2});
}

TEST_CASE("softmax rows") {
  Tensor logits = Tensor::from_rows({{0, 0, 0}});
  Tensor p = softmax(logits);
  for (int j = 0; j < 3; ++j) CHECK(p.at({0, j}) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Tensor extreme = Tensor::from_rows({{1000, 0}});
  Tensor q = softmax(extreme);
  CHECK(q.at({0, 0}) == doctest::Approx(1.0));
  CHECK(q.at({0, 1}) == doctest::Approx(0.0));
  CHECK(std::isfinite(q.at({0, 0})));
}

TEST_CASE("softmax row sums are 1 within 1e-12 on random input") {
  Rng rng(3);
  Tensor logits = Tensor::uniform({8, 5}, -50.0, 50.0, rng);
  Tensor p = softmax(logits);
  for (int r = 0; r < 8; ++r) {
    double s = 0.0;
    for (int j = 0; j < 5; ++j) s += p.at({r, j});
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("cross entropy analytic values") {
  Tensor confident = Tensor::from_rows({{1e6, 0, 0}});
  CHECK(cross_entropy(confident, {0}).value() == doctest::Approx(0.0).epsilon(1e-9));

  Tensor uniform = Tensor::from_rows({{1, 1, 1}, {0, 0, 0}});
  CHECK(cross_entropy(uniform, {2, 1}).value() == doctest::Approx(std::log(3.0)));

  CHECK_THROWS_AS(cross_entropy(uniform, {0, 3}), std::out_of_range);
  CHECK_THROWS_AS(cross_entropy(uniform, {0}), std::invalid_argument);
}

TEST_CASE("kl divergence hand values and mask conventions") {
  Tensor p = Tensor::from_rows({{std::log(0.8), std::log(0.2)}});
  Tensor q = Tensor::from_rows({{std::log(0.5), std::log(0.5)}});
  const double expected = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
  CHECK(kl_divergence(p, q, {true}).value() == doctest::Approx(expected).epsilon(1e-10));

  CHECK(kl_divergence(p, p, {true}).value() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kl_divergence(p, q, {false}).value() == 0.0);
}

TEST_CASE("kl divergence of identical random logits is zero") {
  Rng rng(5);
  Tensor p = Tensor::uniform({6, 4}, -3.0, 3.0, rng);
  CHECK(std::abs(kl_divergence(p, p, std::vector<bool>(6, true)).value()) < 1e-12);
}

TEST_CASE("kl gradient flows only into the q side") {
  Tensor p = Tensor::from_rows({{0.3, -0.4}}, true);
  Tensor q = Tensor::from_rows({{0.1, 0.2}}, true);
  backward(kl_divergence(p, q, {true}));
  CHECK(p.grad() == std::vector<double>{0, 0});
  bool any = false;
  for (double v : q.grad()) any = any || v != 0.0;
  CHECK(any);
}

TEST_CASE("backward on sum sets unit gradients and requires a scalar") {
  Tensor x({3}, {1, 2, 3}, true);
  backward(sum(x));
  CHECK(x.grad() == std::vector<double>{1, 1, 1});

  Tensor y = Tensor::zeros({2, 2}, true);
  Tensor out = add(y, y);
  CHECK_THROWS_AS(backward(out), std::invalid_argument);
  Tape::active().clear();
}

TEST_CASE("backward from two forward passes accumulates additively") {
  Tensor x({2}, {1.0, -2.0}, true);
  backward(sum(mul(x, x)));
  const std::vector<double> first = x.grad();
  backward(mul_scalar(sum(x), 3.0));
  CHECK(x.grad()[0] == doctest::Approx(first[0] + 3.0));
  CHECK(x.grad()[1] == doctest::Approx(first[1] + 3.0));
}

TEST_CASE("accumulation equals backward on the summed loss") {
  Rng rng(9);
  Tensor x = Tensor::uniform({4}, -1.0, 1.0, rng, true);

  backward(sum(mul(x, x)));
  backward(sum(relu(x)));
  const std::vector<double> separate = x.grad();

  x.zero_grad();
  backward(add(sum(mul(x, x)), sum(relu(x))));
  for (std::size_t i = 0; i < separate.size(); ++i) {
    CHECK(std::abs(separate[i] - x.grad()[i]) < 1e-10);
  }
}

TEST_CASE("no-grad mode records nothing") {
  Tape::active().clear();
  Tensor x({2}, {1, 2}, true);
  {
    NoGradGuard ng;
    Tensor y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(Tape::active().size() == 0);
}

TEST_CASE("detach shares values but drops tracking") {
  Tensor x({2}, {1, 2}, true);
  Tensor d = x.detach();
  CHECK_FALSE(d.requires_grad());
  CHECK(d.data() == x.data());
}

TEST_CASE("gaussian sample determinism and zero-variance limit") {
  Tensor mu({4}, {1, 2, 3, 4});
  Tensor lv = Tensor::full({4}, -1e9);  // clamps to -30
  Rng r1(77);
  Tensor s1 = gaussian_sample(mu, lv, r1);
  for (int i = 0; i < 4; ++i) {
    CHECK(s1.data()[static_cast<std::size_t>(i)] == doctest::Approx(mu.data()[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }

  Tensor lv0 = Tensor::zeros({4});
  Rng r2(123), r3(123);
  Tensor a = gaussian_sample(mu, lv0, r2);
  Tensor b = gaussian_sample(mu, lv0, r3);
  CHECK(a.data() == b.data());
}

TEST_CASE("gaussian sample mean over many draws") {
  Tensor mu = Tensor::zeros({1});
  Tensor lv = Tensor::zeros({1});
  Rng rng(31);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += gaussian_sample(mu, lv, rng).value();
  CHECK(std::abs(s / n) < 0.02);
}

TEST_CASE("dropout scales at train time and is identity at eval") {
  Tensor x = Tensor::full({1000}, 1.0);
  Rng rng(5);
  Tensor train_out = dropout(x, 0.5, rng, true);
  int zeros = 0;
  for (double v : train_out.data()) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0)));
    zeros += v == 0.0;
  }
  CHECK(zeros > 350);
  CHECK(zeros < 650);

  Rng rng2(5);
  Tensor eval_out = dropout(x, 0.5, rng2, false);
  CHECK(eval_out.data() == x.data());
}

TEST_CASE("shape plumbing round trips") {
  Rng rng(15);
  Tensor a = Tensor::uniform({3, 4}, -1, 1, rng);
  Tensor b = Tensor::uniform({3, 2}, -1, 1, rng);
  Tensor cat = concat_cols({a, b});
  CHECK(cat.shape() == Shape{3, 6});
  CHECK(slice_cols(cat, 4, 2).data() == b.data());

  Tensor stacked = stack_tokens({a, a});
  CHECK(stacked.shape() == Shape{3, 2, 4});
  auto toks = unstack_tokens(stacked);
  CHECK(toks[1].data() == a.data());

  Tensor heads = split_heads(stacked, 2);
  CHECK(heads.shape() == Shape{6, 2, 2});
  CHECK(merge_heads(heads, 2).data() == stacked.data());

  Tensor t = transpose_12(stacked);
  CHECK(t.shape() == Shape{3, 4, 2});
  CHECK(t.at({1, 3, 0}) == stacked.at({1, 0, 3}));
}

TEST_CASE("permute_rows moves whole rows") {
  Tensor x = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  Tensor p = permute_rows(x, {2, 0, 1});
  CHECK(p.at({0, 0}) == 5.0);
  CHECK(p.at({1, 1}) == 2.0);
  CHECK(p.at({2, 0}) == 3.0);
}

TEST_CASE("one_hot encodes labels") {
  Tensor oh = one_hot({1, 0}, 3);
  CHECK(oh.at({0, 1}) == 1.0);
  CHECK(oh.at({0, 0}) == 0.0);
  CHECK(oh.at({1, 0}) == 1.0);
  CHECK_THROWS_AS(one_hot({3}, 3), std::out_of_range);
}
