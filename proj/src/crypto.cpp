#include "seclaas/crypto.hpp"

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>

#include <fstream>
#include <sstream>

#include "seclaas/encoding.hpp"
#include "seclaas/errors.hpp"

namespace seclaas {

namespace {

struct BioFree {
  void operator()(BIO* b) const { BIO_free(b); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
struct MdCtxFree {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

using BioPtr = std::unique_ptr<BIO, BioFree>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

constexpr std::string_view kHkdfInfo = "seclaas field key v1";

detail::PkeyHandle wrap(EVP_PKEY* raw) {
  if (raw == nullptr) throw CryptoError("null key");
  return detail::PkeyHandle(raw, EVP_PKEY_free);
}

std::string openssl_error() {
  unsigned long code = ERR_get_error();
  ERR_clear_error();
  if (code == 0) return "unknown OpenSSL error";
  char buf[256];
  ERR_error_string_n(code, buf, sizeof buf);
  return buf;
}

[[noreturn]] void fail(const std::string& what) { throw CryptoError(what + ": " + openssl_error()); }

// Skips any descriptive header lines ahead of the PEM block.
BioPtr pem_bio(std::string_view armored) {
  auto begin = armored.find("-----BEGIN");
  if (begin == std::string_view::npos) throw CryptoError("no PEM block found in key text");
  auto body = armored.substr(begin);
  BioPtr bio(BIO_new_mem_buf(body.data(), static_cast<int>(body.size())));
  if (!bio) fail("BIO_new_mem_buf");
  return bio;
}

std::string bio_string(BIO* bio) {
  char* data = nullptr;
  long len = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(len));
}

detail::PkeyHandle read_public(std::string_view armored) {
  auto bio = pem_bio(armored);
  EVP_PKEY* raw = PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr);
  if (raw == nullptr) fail("cannot parse public key");
  return wrap(raw);
}

detail::PkeyHandle read_private(std::string_view armored) {
  auto bio = pem_bio(armored);
  EVP_PKEY* raw = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
  if (raw == nullptr) fail("cannot parse private key");
  return wrap(raw);
}

std::string write_public(EVP_PKEY* key, std::string_view header) {
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (!bio || PEM_write_bio_PUBKEY(bio.get(), key) != 1) fail("PEM_write_bio_PUBKEY");
  return std::string(header) + "\n" + bio_string(bio.get());
}

std::string write_private(EVP_PKEY* key, std::string_view header) {
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (!bio || PEM_write_bio_PrivateKey(bio.get(), key, nullptr, nullptr, 0, nullptr, nullptr) != 1) {
    fail("PEM_write_bio_PrivateKey");
  }
  return std::string(header) + "\n" + bio_string(bio.get());
}

void require_x25519(EVP_PKEY* key) {
  if (EVP_PKEY_get_id(key) != EVP_PKEY_X25519) throw CryptoError("agency key is not an X25519 key");
}

void require_rsa(EVP_PKEY* key) {
  if (EVP_PKEY_get_id(key) != EVP_PKEY_RSA) throw CryptoError("provider key is not an RSA key");
  if (EVP_PKEY_get_bits(key) < static_cast<int>(kProviderKeyBits)) {
    throw CryptoError("provider key shorter than 2048 bits");
  }
}

Bytes raw_public(EVP_PKEY* key) {
  Bytes out(kEphemeralKeySize);
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1 || len != kEphemeralKeySize) {
    fail("EVP_PKEY_get_raw_public_key");
  }
  return out;
}

Bytes x25519_shared(EVP_PKEY* own, EVP_PKEY* peer) {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new(own, nullptr));
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_derive_set_peer(ctx.get(), peer) != 1) {
    fail("X25519 derive setup");
  }
  std::size_t len = 0;
  if (EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1) fail("X25519 derive");
  Bytes secret(len);
  if (EVP_PKEY_derive(ctx.get(), secret.data(), &len) != 1) fail("X25519 derive");
  secret.resize(len);
  return secret;
}

// Salt binds the derived key to both public halves of the exchange.
Bytes hkdf_key(const Bytes& secret, const Bytes& ephemeral_pub, const Bytes& recipient_pub) {
  Bytes salt = ephemeral_pub;
  salt.insert(salt.end(), recipient_pub.begin(), recipient_pub.end());
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  Bytes key(32);
  std::size_t len = key.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt.data(), static_cast<int>(salt.size())) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), secret.data(), static_cast<int>(secret.size())) != 1 ||
      EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const unsigned char*>(kHkdfInfo.data()),
                                  static_cast<int>(kHkdfInfo.size())) != 1 ||
      EVP_PKEY_derive(ctx.get(), key.data(), &len) != 1) {
    fail("HKDF");
  }
  return key;
}

}  // namespace

// --- agency keys ---------------------------------------------------------

AgencyPublicKey AgencyPublicKey::from_pem(std::string_view armored) {
  auto key = read_public(armored);
  require_x25519(key.get());
  return AgencyPublicKey(std::move(key));
}

std::string AgencyPublicKey::to_pem() const { return write_public(key_.get(), kAgencyKeyHeader); }

AgencyPrivateKey AgencyPrivateKey::generate() {
  EVP_PKEY* raw = EVP_PKEY_Q_keygen(nullptr, nullptr, "X25519");
  if (raw == nullptr) fail("X25519 keygen");
  return AgencyPrivateKey(wrap(raw));
}

AgencyPrivateKey AgencyPrivateKey::from_pem(std::string_view armored) {
  auto key = read_private(armored);
  require_x25519(key.get());
  return AgencyPrivateKey(std::move(key));
}

std::string AgencyPrivateKey::to_pem() const { return write_private(key_.get(), kAgencyKeyHeader); }

AgencyPublicKey AgencyPrivateKey::public_key() const {
  Bytes pub = raw_public(key_.get());
  EVP_PKEY* raw = EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, pub.data(), pub.size());
  if (raw == nullptr) fail("EVP_PKEY_new_raw_public_key");
  return AgencyPublicKey(wrap(raw));
}

// --- provider keys -------------------------------------------------------

ProviderVerifyingKey ProviderVerifyingKey::from_pem(std::string_view armored) {
  auto key = read_public(armored);
  require_rsa(key.get());
  return ProviderVerifyingKey(std::move(key));
}

std::string ProviderVerifyingKey::to_pem() const { return write_public(key_.get(), kProviderKeyHeader); }

ProviderSigningKey ProviderSigningKey::generate(unsigned bits) {
  if (bits < kProviderKeyBits) throw CryptoError("provider key must be at least 2048 bits");
  EVP_PKEY* raw = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<std::size_t>(bits));
  if (raw == nullptr) fail("RSA keygen");
  return ProviderSigningKey(wrap(raw));
}

ProviderSigningKey ProviderSigningKey::from_pem(std::string_view armored) {
  auto key = read_private(armored);
  require_rsa(key.get());
  return ProviderSigningKey(std::move(key));
}

std::string ProviderSigningKey::to_pem() const { return write_private(key_.get(), kProviderKeyHeader); }

ProviderVerifyingKey ProviderSigningKey::verifying_key() const {
  // Round-trip through DER to strip the private half.
  unsigned char* der = nullptr;
  int len = i2d_PUBKEY(key_.get(), &der);
  if (len <= 0) fail("i2d_PUBKEY");
  const unsigned char* p = der;
  EVP_PKEY* raw = d2i_PUBKEY(nullptr, &p, len);
  OPENSSL_free(der);
  if (raw == nullptr) fail("d2i_PUBKEY");
  return ProviderVerifyingKey(wrap(raw));
}

KeyMaterial KeyMaterial::generate() {
  auto agency = AgencyPrivateKey::generate();
  auto provider = ProviderSigningKey::generate();
  return KeyMaterial{agency.public_key(), agency, provider, provider.verifying_key()};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_key_files(const KeyMaterial& keys, const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  const std::pair<const char*, std::string> files[] = {
      {KeyFileNames::kAgencyPublic, keys.agency_public.to_pem()},
      {KeyFileNames::kAgencyPrivate, keys.agency_private.to_pem()},
      {KeyFileNames::kProviderPublic, keys.provider_verifying.to_pem()},
      {KeyFileNames::kProviderPrivate, keys.provider_signing.to_pem()},
  };
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!force) {
    for (const auto& [name, _] : files) {
      if (fs::exists(dir / name)) throw StorageError((dir / name).string() + " exists (use --force to overwrite)");
    }
  }
  for (const auto& [name, text] : files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw StorageError("cannot write " + (dir / name).string());
  }
  fs::permissions(dir / KeyFileNames::kAgencyPrivate, fs::perms::owner_read | fs::perms::owner_write, ec);
  fs::permissions(dir / KeyFileNames::kProviderPrivate, fs::perms::owner_read | fs::perms::owner_write, ec);
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) fail("RAND_bytes");
  return out;
}

// --- field encryption ----------------------------------------------------

EncryptedLogEntry encrypt_fields(const LogEntry& entry, const AgencyPublicKey& key) {
  require_x25519(key.get());
  EVP_PKEY* eph_raw = EVP_PKEY_Q_keygen(nullptr, nullptr, "X25519");
  if (eph_raw == nullptr) fail("ephemeral keygen");
  auto ephemeral = wrap(eph_raw);
  Bytes eph_pub = raw_public(ephemeral.get());
  Bytes aes_key = hkdf_key(x25519_shared(ephemeral.get(), key.get()), eph_pub, raw_public(key.get()));
  Bytes nonce = random_bytes(kNonceSize);

  Bytes plaintext = canonical_encode(SealedFields{entry.to_ip, entry.port, entry.user_id});

  Bytes out;
  out.reserve(1 + kEphemeralKeySize + kNonceSize + plaintext.size() + kTagSize);
  out.push_back(kCiphertextVersion);
  out.insert(out.end(), eph_pub.begin(), eph_pub.end());
  out.insert(out.end(), nonce.begin(), nonce.end());
  const std::size_t header = out.size();
  out.resize(header + plaintext.size() + kTagSize);

  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, aes_key.data(), nonce.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, out.data(), static_cast<int>(header)) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data() + header, &len, plaintext.data(), static_cast<int>(plaintext.size())) !=
          1 ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + header + len, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagSize),
                          out.data() + header + plaintext.size()) != 1) {
    fail("AES-256-GCM encrypt");
  }
  OPENSSL_cleanse(aes_key.data(), aes_key.size());
  return EncryptedLogEntry{std::move(out), entry.from_ip, entry.timestamp};
}

SealedFields decrypt_fields(const EncryptedLogEntry& ele, const AgencyPrivateKey& key) {
  const Bytes& ct = ele.ciphertext;
  const std::size_t header = 1 + kEphemeralKeySize + kNonceSize;
  if (ct.size() < header + kTagSize || ct[0] != kCiphertextVersion) {
    throw DecryptionError("malformed field ciphertext");
  }
  Bytes eph_pub(ct.begin() + 1, ct.begin() + 1 + kEphemeralKeySize);
  EVP_PKEY* peer_raw = EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, eph_pub.data(), eph_pub.size());
  if (peer_raw == nullptr) throw DecryptionError("malformed ephemeral key");
  auto peer = wrap(peer_raw);
  Bytes aes_key = hkdf_key(x25519_shared(key.get(), peer.get()), eph_pub, raw_public(key.get()));

  const std::uint8_t* nonce = ct.data() + 1 + kEphemeralKeySize;
  const std::size_t body = ct.size() - header - kTagSize;
  Bytes tag(ct.end() - static_cast<std::ptrdiff_t>(kTagSize), ct.end());
  Bytes plaintext(body + 1);

  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  int tail = 0;
  bool ok = ctx && EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, aes_key.data(), nonce) == 1 &&
            EVP_DecryptUpdate(ctx.get(), nullptr, &len, ct.data(), static_cast<int>(header)) == 1 &&
            EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, ct.data() + header, static_cast<int>(body)) == 1 &&
            EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagSize), tag.data()) == 1 &&
            EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + len, &tail) == 1;
  OPENSSL_cleanse(aes_key.data(), aes_key.size());
  if (!ok) {
    OPENSSL_cleanse(plaintext.data(), plaintext.size());
    ERR_clear_error();
    throw DecryptionError("field ciphertext failed authentication");
  }
  plaintext.resize(static_cast<std::size_t>(len + tail));
  try {
    return decode_sealed_fields(plaintext);
  } catch (const DecodeError& e) {
    throw DecryptionError(std::string("decrypted fields malformed: ") + e.what());
  }
}

// --- signatures ----------------------------------------------------------

namespace {

bool configure_pss(EVP_PKEY_CTX* pctx) {
  return EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PSS_PADDING) == 1 &&
         EVP_PKEY_CTX_set_rsa_pss_saltlen(pctx, 32) == 1 && EVP_PKEY_CTX_set_rsa_mgf1_md(pctx, EVP_sha256()) == 1;
}

}  // namespace

Bytes sign(std::span<const std::uint8_t> payload, const ProviderSigningKey& key) {
  MdCtxPtr md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  if (!md || EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, key.get()) != 1 || !configure_pss(pctx)) {
    fail("signature setup");
  }
  std::size_t len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &len, payload.data(), payload.size()) != 1) fail("signature size");
  Bytes sig(len);
  if (EVP_DigestSign(md.get(), sig.data(), &len, payload.data(), payload.size()) != 1) fail("signing");
  sig.resize(len);
  return sig;
}

bool verify_signature(std::span<const std::uint8_t> payload, std::span<const std::uint8_t> signature,
                      const ProviderVerifyingKey& key) noexcept {
  if (key.get() == nullptr || signature.empty()) return false;
  MdCtxPtr md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  bool ok = md && EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr, key.get()) == 1 &&
            configure_pss(pctx) &&
            EVP_DigestVerify(md.get(), signature.data(), signature.size(), payload.data(), payload.size()) == 1;
  ERR_clear_error();
  return ok;
}

}  // namespace seclaas
