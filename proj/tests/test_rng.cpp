#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "coprosim/rng.hpp"

using coprosim::Rng;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the stream, different seeds do not") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff = any_diff || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform stays in range") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(2.0, 5.0);
    CHECK(u >= 2.0);
    CHECK(u < 5.0);
  }
}

TEST_CASE("below is bounded and hits every residue") {
  Rng rng(2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto v = rng.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("normal moments are near standard") {
  Rng rng(3);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);       // ~4.5 sigma margin
  CHECK(std::fabs(var - 1.0) < 0.02);  // ~6 sigma margin
  CHECK(rng.normal(10.0, 0.0) == 10.0);
}

TEST_CASE("fork gives independent deterministic substreams") {
  Rng parent(99);
  Rng f1 = parent.fork(1);
  Rng f1_again = parent.fork(1);
  Rng f2 = parent.fork(2);

  // Fork must not advance the parent.
  Rng parent_copy(99);
  CHECK(parent.next_u64() == parent_copy.next_u64());

  bool same = true, diff = false;
  for (int i = 0; i < 32; ++i) {
    const auto v = f1.next_u64();
    same = same && (v == f1_again.next_u64());
    diff = diff || (v != f2.next_u64());
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("stream is pinned against accidental algorithm changes") {
  // First three outputs of the generator at seed 42; freezing them here turns
  // any future tweak of seeding or state transitions into a loud failure,
  // because recorded scenario manifests depend on these exact values.
  Rng rng(42);
  std::vector<std::uint64_t> expect = {0xd0764d4f4476689fULL,
                                       0x519e4174576f3791ULL,
                                       0xfbe07cfb0c24ed8cULL};
  for (auto e : expect) CHECK(rng.next_u64() == e);
}

}  // TEST_SUITE
