#pragma once

#include <cstdint>
#include <random>

#include "lighthash/bytes.hpp"
#include "lighthash/sha3.hpp"

namespace lighthash {

/// SplitMix64 step; used to derive decorrelated stream seeds from a base seed.
uint64_t splitmix64(uint64_t& state);

/// Stateless mix of up to three words into one seed.
uint64_t mix_seed(uint64_t a, uint64_t b = 0x9e3779b97f4a7c15ULL, uint64_t c = 0);

/// Deterministic uniform/normal sampler. The engine is the standard-pinned
/// mt19937_64 and the normal transform is an explicit Box-Muller, so a given
/// seed reproduces the same stream on any conforming implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n);

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Deterministic SHA3-256 counter stream. Consensus-critical randomness
/// (threshold sampling) is derived from this rather than from any float RNG.
class Sha3Stream {
 public:
  /// Stream blocks are SHA3-256(prefix || u64 BE counter).
  explicit Sha3Stream(Bytes prefix);

  uint8_t next_byte();
  int next_bit();  // MSB-first within each byte

 private:
  void refill();

  Bytes prefix_;
  uint64_t counter_ = 0;
  Hash256 block_{};
  size_t byte_pos_ = sizeof(Hash256);
  int bit_pos_ = 0;
};

}  // namespace lighthash
