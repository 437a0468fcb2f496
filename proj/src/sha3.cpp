#include "lighthash/sha3.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace lighthash {

namespace {
const EVP_MD* sha3_md() {
  static const EVP_MD* md = EVP_sha3_256();
  if (md == nullptr) throw std::runtime_error("SHA3-256 unavailable in libcrypto");
  return md;
}
}  // namespace

Hash256 sha3_256(std::span<const uint8_t> data) {
  Hash256 out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, sha3_md(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("SHA3-256 digest failed");
  }
  return out;
}

Hash256 sha3_256(std::string_view data) {
  return sha3_256(std::span(reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

Sha3::Sha3() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), sha3_md(), nullptr) != 1) {
    throw std::runtime_error("SHA3-256 init failed");
  }
}

Sha3::~Sha3() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Sha3& Sha3::update(std::span<const uint8_t> data) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size()) != 1) {
    throw std::runtime_error("SHA3-256 update failed");
  }
  return *this;
}

Sha3& Sha3::update(std::string_view data) {
  return update(std::span(reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

Hash256 Sha3::finish() {
  Hash256 out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len) != 1 || len != out.size()) {
    throw std::runtime_error("SHA3-256 final failed");
  }
  return out;
}

}  // namespace lighthash
