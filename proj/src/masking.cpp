#include "masking.hpp"

#include <cmath>
#include <stdexcept>

namespace maskgan {

int Mask::masked_count() const {
  int n = 0;
  for (uint8_t b : bits) n += (b == 0);
  return n;
}

double Mask::rate() const {
  return bits.empty() ? 0.0 : static_cast<double>(masked_count()) / bits.size();
}

std::string Mask::to_string() const {
  std::string s;
  for (uint8_t b : bits) s += b ? '1' : '0';
  return s;
}

Mask Mask::from_string(const std::string& s) {
  Mask m;
  for (char c : s) {
    if (c != '0' && c != '1')
      throw std::invalid_argument("mask: bad character in '" + s + "'");
    m.bits.push_back(c == '1');
  }
  return m;
}

namespace {

int round_half_even(double x) {
  return static_cast<int>(std::nearbyint(x));  // FE_TONEAREST ties-to-even
}

void check_args(int T, double rate) {
  if (T < 1) throw std::invalid_argument("mask: T must be >= 1");
  if (rate < 0.0 || rate > 1.0)
    throw std::invalid_argument("mask: rate must be in [0,1]");
}

}  // namespace

Mask contiguous_mask(int T, double rate, uint64_t rng_seed, int offset) {
  check_args(T, rate);
  int zeros = round_half_even(rate * T);
  Mask m;
  m.bits.assign(T, 1);
  if (zeros == 0) return m;
  int max_start = T - zeros;
  int start;
  if (offset >= 0) {
    if (offset > max_start)
      throw std::invalid_argument("contiguous_mask: offset out of range");
    start = offset;
  } else {
    Rng rng(rng_seed);
    start = rng.uniform_int(max_start + 1);
  }
  for (int t = start; t < start + zeros; ++t) m.bits[t] = 0;
  return m;
}

Mask bernoulli_mask(int T, double rate, uint64_t rng_seed) {
  check_args(T, rate);
  Rng rng(rng_seed);
  Mask m;
  m.bits.resize(T);
  for (int t = 0; t < T; ++t) m.bits[t] = rng.uniform() >= rate;
  return m;
}

MaskedSeq apply_mask(const TokenSeq& x, const Mask& m) {
  if (x.size() != m.bits.size())
    throw std::invalid_argument("apply_mask: length mismatch");
  MaskedSeq out;
  out.original = x;
  out.mask = m;
  out.masked = x;
  for (size_t t = 0; t < x.size(); ++t)
    if (!m.bits[t]) out.masked[t] = kMaskId;
  return out;
}

}  // namespace maskgan
