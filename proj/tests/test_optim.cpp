#include <cstring>

#include "doctest.h"
#include "lemda/nn.hpp"
#include "lemda/optim.hpp"

using namespace lemda;

namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("sgd update rule") {
  Tensor p = Tensor::scalar(1.0, true);
  p.grad()[0] = 2.0;
  Optimizer opt = Optimizer::sgd(0.1);
  opt.attach({{"p", p}});
  opt.step();
  CHECK(p.value() == doctest::Approx(0.8));
  CHECK(p.grad()[0] == 0.0);  // grads zeroed after the step
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::scalar(0.5, true);
  const std::vector<double> before = p.data();
  Optimizer sgd = Optimizer::sgd(0.1);
  sgd.attach({{"p", p}});
  sgd.step();
  CHECK(bitwise_equal(p.data(), before));

  Tensor q = Tensor::scalar(0.5, true);
  Optimizer adam = Optimizer::adam(1e-3);
  adam.attach({{"q", q}});
  adam.step();
  CHECK(bitwise_equal(q.data(), before));
}

TEST_CASE("adam first step with unit gradient moves by about lr") {
  Tensor p = Tensor::scalar(1.0, true);
  p.grad()[0] = 1.0;
  Optimizer opt = Optimizer::adam(1e-3);
  opt.attach({{"p", p}});
  opt.step();
  // Closed form: mhat = 1, vhat = 1, update = lr / (1 + eps).
  CHECK(p.value() == doctest::Approx(1.0 - 1e-3).epsilon(1e-7));
}

TEST_CASE("optimizer isolation is bitwise") {
  Rng rng(3);
  Tensor a = Tensor::uniform({4, 4}, -1, 1, rng, true);
  Tensor b = Tensor::uniform({4, 4}, -1, 1, rng, true);
  Optimizer opt_a = Optimizer::adam(1e-2);
  opt_a.attach({{"a", a}});
  Optimizer opt_b = Optimizer::adam(1e-2);
  opt_b.attach({{"b", b}});

  const std::vector<double> b_before = b.data();
  for (auto& g : a.grad()) g = 0.7;
  for (auto& g : b.grad()) g = 0.9;
  opt_a.step();
  CHECK(bitwise_equal(b.data(), b_before));
  // b's pending gradient is untouched as well
  for (double g : b.grad()) CHECK(g == 0.9);
}

TEST_CASE("attach rejects untracked parameters") {
  Tensor p = Tensor::scalar(1.0, false);
  Optimizer opt = Optimizer::sgd(0.1);
  CHECK_THROWS_AS(opt.attach({{"p", p}}), std::invalid_argument);
}

TEST_CASE("step count advances") {
  Tensor p = Tensor::scalar(1.0, true);
  Optimizer opt = Optimizer::adam(1e-3);
  opt.attach({{"p", p}});
  CHECK(opt.step_count() == 0);
  opt.step();
  opt.step();
  CHECK(opt.step_count() == 2);
}
