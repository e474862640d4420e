#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "masking.hpp"

using namespace maskgan;

namespace {

// zeros form exactly one contiguous run
bool single_zero_run(const Mask& m) {
  int transitions = 0;
  for (size_t i = 1; i < m.bits.size(); ++i)
    if (m.bits[i] != m.bits[i - 1]) ++transitions;
  int zeros = m.masked_count();
  if (zeros == 0) return transitions == 0;
  return transitions <= 2;
}

}  // namespace

TEST_CASE("contiguous mask: exact count via round-half-even") {
  // 0.5 * 5 = 2.5 rounds to 2; 0.5 * 7 = 3.5 rounds to 4
  CHECK(contiguous_mask(5, 0.5, 1).masked_count() == 2);
  CHECK(contiguous_mask(7, 0.5, 1).masked_count() == 4);
  CHECK(contiguous_mask(10, 0.4, 1).masked_count() == 4);
  CHECK(contiguous_mask(3, 0.25, 1).masked_count() == 1);  // 0.75 -> 1
}

TEST_CASE("contiguous mask: one zero block, any seed") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Mask m = contiguous_mask(11, 0.4, seed);
    CHECK(m.length() == 11);
    CHECK(m.masked_count() == 4);
    CHECK(single_zero_run(m));
  }
}

TEST_CASE("contiguous mask: rate 0 and rate 1") {
  Mask none = contiguous_mask(8, 0.0, 3);
  CHECK(none.masked_count() == 0);
  Mask all = contiguous_mask(8, 1.0, 3);
  CHECK(all.masked_count() == 8);
  CHECK(all.rate() == doctest::Approx(1.0));
}

TEST_CASE("contiguous mask: pinned offset is deterministic") {
  Mask a = contiguous_mask(10, 0.3, 1, 2);
  Mask b = contiguous_mask(10, 0.3, 999, 2);
  CHECK(a.bits == b.bits);
  CHECK(a.bits[2] == 0);
  CHECK(a.bits[1] == 1);
}

TEST_CASE("bernoulli mask: rate respected in expectation") {
  long zeros = 0, total = 0;
  for (uint64_t seed = 0; seed < 400; ++seed) {
    Mask m = bernoulli_mask(25, 0.3, seed);
    zeros += m.masked_count();
    total += m.length();
  }
  double rate = static_cast<double>(zeros) / static_cast<double>(total);
  // 10,000 draws; 5 sigma of a Bernoulli(0.3) mean is ~0.023
  CHECK(rate == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("mask string round-trip") {
  Mask m = contiguous_mask(9, 0.4, 5);
  Mask back = Mask::from_string(m.to_string());
  CHECK(back.bits == m.bits);
}

TEST_CASE("apply_mask substitutes <m> exactly at zero bits") {
  TokenSeq x = {4, 5, 6, 7, 8};
  Mask m = Mask::from_string("10110");
  MaskedSeq ms = apply_mask(x, m);
  CHECK(ms.original == x);
  CHECK(ms.masked == TokenSeq{4, kMaskId, 6, 7, kMaskId});
}

TEST_CASE("apply_mask rejects length mismatch") {
  CHECK_THROWS(apply_mask({4, 5}, Mask::from_string("101")));
}
