#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lighthash {

using Bytes = std::vector<uint8_t>;

std::string hex_encode(std::span<const uint8_t> data);
std::optional<Bytes> hex_decode(std::string_view hex);

/// Bit addressing is MSB-first within each byte: bit 0 of a buffer is the
/// most significant bit of byte 0.
inline int get_bit(std::span<const uint8_t> buf, int bit) {
  return (buf[static_cast<size_t>(bit) / 8] >> (7 - bit % 8)) & 1;
}

inline void set_bit(std::span<uint8_t> buf, int bit, int value) {
  const uint8_t mask = static_cast<uint8_t>(1u << (7 - bit % 8));
  if (value)
    buf[static_cast<size_t>(bit) / 8] |= mask;
  else
    buf[static_cast<size_t>(bit) / 8] &= static_cast<uint8_t>(~mask);
}

inline void append_u16be(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline void append_u64be(Bytes& out, uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void append_i32be(Bytes& out, int32_t v) {
  const auto u = static_cast<uint32_t>(v);
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>(u >> (8 * i)));
}

inline uint64_t read_u64be(std::span<const uint8_t> buf) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | buf[static_cast<size_t>(i)];
  return v;
}

/// Number of differing bits between two equal-length buffers.
int hamming_distance(std::span<const uint8_t> a, std::span<const uint8_t> b);

}  // namespace lighthash
