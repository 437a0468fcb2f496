#include "lighthash/rng.hpp"

#include <cmath>
#include <numbers>

namespace lighthash {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  uint64_t s = a;
  uint64_t out = splitmix64(s);
  s ^= b;
  out ^= splitmix64(s);
  s ^= c;
  out ^= splitmix64(s);
  return out;
}

uint64_t Rng::below(uint64_t n) {
  // rejection sampling keeps the draw unbiased
  const uint64_t limit = n * (UINT64_MAX / n);
  uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Sha3Stream::Sha3Stream(Bytes prefix) : prefix_(std::move(prefix)) {}

void Sha3Stream::refill() {
  Bytes msg = prefix_;
  append_u64be(msg, counter_++);
  block_ = sha3_256(msg);
  byte_pos_ = 0;
  bit_pos_ = 0;
}

uint8_t Sha3Stream::next_byte() {
  if (byte_pos_ >= block_.size()) refill();
  bit_pos_ = 0;
  return block_[byte_pos_++];
}

int Sha3Stream::next_bit() {
  if (bit_pos_ == 0) {
    if (byte_pos_ >= block_.size()) refill();
    bit_pos_ = 8;
    ++byte_pos_;
  }
  const uint8_t cur = block_[byte_pos_ - 1];
  --bit_pos_;
  return (cur >> bit_pos_) & 1;
}

}  // namespace lighthash
