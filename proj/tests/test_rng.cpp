#include <cmath>

#include "doctest.h"
#include "lemda/rng.hpp"

using namespace lemda;

TEST_CASE("same seed gives the same stream") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(42), d(43);
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("uniform_int stays in range without obvious bias") {
  Rng rng(7);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const int v = rng.uniform_int(5);
    REQUIRE(v >= 0);
    REQUIRE(v < 5);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
}

TEST_CASE("normal moments over many draws") {
  Rng rng(11);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / n) < 0.02);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("beta draws live in (0,1) and center for symmetric parameters") {
  Rng rng(13);
  double s = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.beta(0.8, 0.8);
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    s += v;
  }
  CHECK(std::abs(s / n - 0.5) < 0.02);
}

TEST_CASE("gamma mean matches its shape") {
  Rng rng(17);
  for (double shape : {0.5, 0.8, 2.0, 5.0}) {
    double s = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) s += rng.gamma(shape);
    CHECK(std::abs(s / n - shape) < 0.1 * shape + 0.02);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(23);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 8; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}
