#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corpus.hpp"

namespace maskgan {

// One bit per position; 1 keeps the token, 0 replaces it with <m>.
struct Mask {
  std::vector<uint8_t> bits;
  int length() const { return static_cast<int>(bits.size()); }
  int masked_count() const;
  double rate() const;  // fraction of zero bits
  std::string to_string() const;          // '0'/'1' characters
  static Mask from_string(const std::string& s);
};

struct MaskedSeq {
  TokenSeq original;
  Mask mask;
  TokenSeq masked;  // mask id substituted where bits are 0
};

// Exactly round-half-even(rate*T) zeros in one contiguous block, block start
// uniform over valid offsets. offset >= 0 pins the block (deterministic mode).
Mask contiguous_mask(int T, double rate, uint64_t rng_seed, int offset = -1);

// Each bit independently zero with probability rate.
Mask bernoulli_mask(int T, double rate, uint64_t rng_seed);

MaskedSeq apply_mask(const TokenSeq& x, const Mask& m);

}  // namespace maskgan
