#pragma once

// Field-level hybrid encryption for the agencies and provider signatures.
//
// Agency encryption: ephemeral X25519 agreement with the agency key,
// HKDF-SHA256 to a fresh AES-256-GCM key, per-entry random nonce.
//   ciphertext = 0x01 | ephemeral_pub[32] | nonce[12] | aes_gcm(encode(fields)) | tag[16]
//
// Provider signatures: RSA-2048, RSASSA-PSS with SHA-256, MGF1-SHA-256, salt 32.
//
// Keys are held behind shared, immutable handles, so copies are cheap and
// every operation here is safe to call concurrently.

#include <filesystem>
#include <memory>
#include <span>
#include <string>

#include "seclaas/types.hpp"

struct evp_pkey_st;

namespace seclaas {

namespace detail {
using PkeyHandle = std::shared_ptr<evp_pkey_st>;
}

inline constexpr unsigned kProviderKeyBits = 2048;
inline constexpr std::size_t kEphemeralKeySize = 32;
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::uint8_t kCiphertextVersion = 0x01;

inline constexpr std::string_view kAgencyKeyHeader =
    "SecLaaS-Key: agency; scheme=X25519-HKDF-SHA256-AES-256-GCM";
inline constexpr std::string_view kProviderKeyHeader =
    "SecLaaS-Key: provider; scheme=RSASSA-PSS; hash=SHA-256; mgf=MGF1-SHA-256; salt=32";

class AgencyPublicKey {
 public:
  static AgencyPublicKey from_pem(std::string_view armored);
  std::string to_pem() const;
  evp_pkey_st* get() const noexcept { return key_.get(); }

 private:
  friend class AgencyPrivateKey;
  explicit AgencyPublicKey(detail::PkeyHandle key) : key_(std::move(key)) {}
  detail::PkeyHandle key_;
};

class AgencyPrivateKey {
 public:
  static AgencyPrivateKey generate();
  static AgencyPrivateKey from_pem(std::string_view armored);
  std::string to_pem() const;
  AgencyPublicKey public_key() const;
  evp_pkey_st* get() const noexcept { return key_.get(); }

 private:
  explicit AgencyPrivateKey(detail::PkeyHandle key) : key_(std::move(key)) {}
  detail::PkeyHandle key_;
};

class ProviderVerifyingKey {
 public:
  static ProviderVerifyingKey from_pem(std::string_view armored);
  std::string to_pem() const;
  evp_pkey_st* get() const noexcept { return key_.get(); }

 private:
  friend class ProviderSigningKey;
  explicit ProviderVerifyingKey(detail::PkeyHandle key) : key_(std::move(key)) {}
  detail::PkeyHandle key_;
};

class ProviderSigningKey {
 public:
  static ProviderSigningKey generate(unsigned bits = kProviderKeyBits);
  static ProviderSigningKey from_pem(std::string_view armored);
  std::string to_pem() const;
  ProviderVerifyingKey verifying_key() const;
  evp_pkey_st* get() const noexcept { return key_.get(); }

 private:
  explicit ProviderSigningKey(detail::PkeyHandle key) : key_(std::move(key)) {}
  detail::PkeyHandle key_;
};

struct KeyMaterial {
  AgencyPublicKey agency_public;
  AgencyPrivateKey agency_private;
  ProviderSigningKey provider_signing;
  ProviderVerifyingKey provider_verifying;

  static KeyMaterial generate();
};

/// File names written by `write_key_files` inside a key directory.
struct KeyFileNames {
  static constexpr const char* kAgencyPublic = "agency.pub";
  static constexpr const char* kAgencyPrivate = "agency.key";
  static constexpr const char* kProviderPublic = "provider.pub";
  static constexpr const char* kProviderPrivate = "provider.key";
};

/// Writes the four key files. Throws StorageError if any exists and `force` is false.
void write_key_files(const KeyMaterial& keys, const std::filesystem::path& dir, bool force);

std::string read_text_file(const std::filesystem::path& path);

/// Encrypts (to_ip, port, user_id); from_ip and timestamp stay in the clear.
EncryptedLogEntry encrypt_fields(const LogEntry& entry, const AgencyPublicKey& key);

/// Throws DecryptionError on a wrong key or any ciphertext modification.
SealedFields decrypt_fields(const EncryptedLogEntry& ele, const AgencyPrivateKey& key);

Bytes sign(std::span<const std::uint8_t> payload, const ProviderSigningKey& key);

/// Never throws; malformed signatures simply fail.
bool verify_signature(std::span<const std::uint8_t> payload, std::span<const std::uint8_t> signature,
                      const ProviderVerifyingKey& key) noexcept;

/// Cryptographically secure random bytes.
Bytes random_bytes(std::size_t n);

}  // namespace seclaas
