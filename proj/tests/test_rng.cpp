#include "doctest.h"

#include "rlearn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

using namespace rlearn;

TEST_SUITE("rng") {

TEST_CASE("same seed, same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int agree = 0;
  for (int i = 0; i < 64; ++i) agree += a.next_u64() == b.next_u64();
  CHECK(agree < 4);
}

TEST_CASE("derive depends on the seed, not the evolved state") {
  // A stream derived before and after consuming draws must be identical;
  // this is what makes work units schedulable in any order.
  Rng parent(7);
  Rng early = parent.derive(Stream::train, 3);
  for (int i = 0; i < 1000; ++i) parent.next_u64();
  Rng late = parent.derive(Stream::train, 3);
  for (int i = 0; i < 20; ++i) CHECK(early.next_u64() == late.next_u64());
}

TEST_CASE("derived streams with distinct tags differ") {
  Rng parent(7);
  Rng a = parent.derive(Stream::train, 0);
  Rng b = parent.derive(Stream::train, 1);
  Rng c = parent.derive(Stream::test, 0);
  CHECK(a.next_u64() != b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) and is roughly uniform") {
  Rng rng(11);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // mean 0.5, sd of the mean = 1/sqrt(12 n) ~ 0.0009; allow 5 sigma
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("normal moments") {
  Rng rng(13);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
  }
  CHECK(std::abs(s1 / n) < 0.01);           // se ~ 0.0022
  CHECK(std::abs(s2 / n - 1.0) < 0.02);     // se ~ 0.0032
}

TEST_CASE("bernoulli hits its rate") {
  Rng rng(17);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3);
  CHECK(std::abs(hits / static_cast<double>(n) - 0.3) < 0.01);
}

TEST_CASE("uniform_int bounds and coverage") {
  Rng rng(19);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const std::uint64_t v = rng.uniform_int(7);
    REQUIRE(v < 7);
    ++counts[static_cast<size_t>(v)];
  }
  for (int c : counts) CHECK(c > 700);  // expectation 1000
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(23);
  std::vector<int> items(100);
  std::iota(items.begin(), items.end(), 0);
  rng.shuffle(items);
  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<size_t>(i)] == i);
}

}  // TEST_SUITE
