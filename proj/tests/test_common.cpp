#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "kpnp/common.hpp"

using namespace kpnp;

TEST_CASE("compensated dot handles adversarial cancellation") {
  // naive summation of this sequence loses the tiny term entirely
  Vec a = {1e16, 1.0, -1e16, 1.0};
  Vec b = {1.0, 1.0, 1.0, 1.0};
  CHECK(dot(a, b) == 2.0);

  Vec c(1000, 0.1);
  Vec e(1000, 1.0);
  CHECK(std::abs(dot(c, e) - 100.0) < 1e-12);
}

TEST_CASE("nrm2 matches the exact value on a Pythagorean triple") {
  Vec v = {3.0, 4.0};
  CHECK(nrm2(v) == 5.0);
  CHECK(nrm2(Vec{}) == 0.0);
}

TEST_CASE("axpy, add, sub, scaled behave elementwise") {
  Vec x = {1.0, 2.0};
  Vec y = {10.0, 20.0};
  axpy(2.0, x, y);
  CHECK(y == Vec{12.0, 24.0});
  CHECK(add(x, x) == Vec{2.0, 4.0});
  CHECK(sub(y, x) == Vec{11.0, 22.0});
  CHECK(scaled(-1.0, x) == Vec{-1.0, -2.0});
}

TEST_CASE("wrap maps into [0, n) for negative arguments") {
  CHECK(wrap(-1, 5) == 4);
  CHECK(wrap(5, 5) == 0);
  CHECK(wrap(-6, 5) == 4);
  CHECK(wrap(3, 5) == 3);
}

TEST_CASE("rng sequences are deterministic per seed") {
  Rng a(42), b(42), c(43);
  Vec va = a.uniform_vec(100), vb = b.uniform_vec(100), vc = c.uniform_vec(100);
  CHECK(va == vb);
  CHECK(va != vc);
  for (double v : va) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("rng bounded integers stay in range and hit all residues") {
  Rng r(7);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) {
    auto v = r.below(10);
    REQUIRE(v < 10);
    counts[v]++;
  }
  for (int c : counts) CHECK(c > 800);  // crude uniformity check
}

TEST_CASE("rng normal has plausible first two moments") {
  Rng r(99);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double v = r.normal();
    s += v;
    s2 += v * v;
  }
  double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("rng shuffle is a permutation and seed-stable") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  Rng r(5);
  r.shuffle(v);
  std::vector<int> w = v;
  std::sort(w.begin(), w.end());
  for (int i = 0; i < 50; ++i) CHECK(w[i] == i);

  std::vector<int> v2(50);
  std::iota(v2.begin(), v2.end(), 0);
  Rng r2(5);
  r2.shuffle(v2);
  CHECK(v == v2);
}

TEST_CASE("parallel_for covers the range exactly once") {
  std::vector<std::atomic<int>> hits(1000);
  for (auto& h : hits) h = 0;
  parallel_for(1000, 4, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hits[i]++;
  });
  for (auto& h : hits) CHECK(h == 1);

  parallel_for(0, 4, [&](std::size_t, std::size_t) { FAIL("must not run on empty range"); });
}
