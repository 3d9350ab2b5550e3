#include "seclaas/hash.hpp"

#include <openssl/evp.h>

#include "seclaas/encoding.hpp"
#include "seclaas/errors.hpp"

namespace seclaas {

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != kDigestSize) {
    throw CryptoError("SHA-256 failed");
  }
  return out;
}

Digest sha256(std::string_view data) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Digest genesis(Ipv4 ip, Day day) {
  ByteWriter w;
  w.ip(ip);
  w.day(day);
  return sha256(w.data());
}

Digest chain_link(const EncryptedLogEntry& ele, const Digest& previous) {
  ByteWriter w;
  encode_into(w, ele);
  w.raw(previous);
  return sha256(w.data());
}

}  // namespace seclaas
