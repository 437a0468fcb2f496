#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace lighthash {

using Hash256 = std::array<uint8_t, 32>;

/// One-shot SHA3-256 of a byte span.
Hash256 sha3_256(std::span<const uint8_t> data);
Hash256 sha3_256(std::string_view data);

/// Incremental SHA3-256 hasher.
class Sha3 {
 public:
  Sha3();
  Sha3(const Sha3&) = delete;
  Sha3& operator=(const Sha3&) = delete;
  ~Sha3();

  Sha3& update(std::span<const uint8_t> data);
  Sha3& update(std::string_view data);
  Hash256 finish();

 private:
  void* ctx_;
};

}  // namespace lighthash
