#pragma once

#include <span>

#include "seclaas/types.hpp"

namespace seclaas {

/// SHA-256.
Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

/// Chain value preceding the first record of the (ip, day) chain:
/// sha256(encode(ip) || encode(day)).
Digest genesis(Ipv4 ip, Day day);
inline Digest genesis(const ChainKey& key) { return genesis(key.ip, key.day); }

/// Next chain value: sha256(encode(ele) || previous).
Digest chain_link(const EncryptedLogEntry& ele, const Digest& previous);

}  // namespace seclaas
