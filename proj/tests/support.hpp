#pragma once

#include <stdlib.h>

#include <filesystem>
#include <random>
#include <string>

#include "seclaas/crypto.hpp"
#include "seclaas/hash.hpp"
#include "seclaas/types.hpp"

namespace seclaas::testing {

/// Self-deleting scratch directory.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "seclaas-test-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

/// Key generation is the slow part of most tests; share one set.
inline const KeyMaterial& shared_keys() {
  static const KeyMaterial keys = KeyMaterial::generate();
  return keys;
}

inline Day make_day(int y, unsigned m, unsigned d) {
  return std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

/// A structurally valid record with random ciphertext, chained onto `prev`.
/// No encryption is done, so this is cheap enough for statistical loops.
inline ChainedRecord random_record(std::mt19937_64& rng, Ipv4 from, Timestamp t, const Digest& prev) {
  ChainedRecord r;
  r.ele.ciphertext.resize(16 + rng() % 48);
  for (auto& b : r.ele.ciphertext) b = static_cast<std::uint8_t>(rng());
  r.ele.from_ip = from;
  r.ele.timestamp = t;
  r.chain = chain_link(r.ele, prev);
  return r;
}

inline std::vector<ChainedRecord> random_chain(std::mt19937_64& rng, const ChainKey& key, std::size_t n) {
  std::vector<ChainedRecord> out;
  Digest prev = genesis(key);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(random_record(rng, key.ip, Timestamp{key.day} + Microseconds{static_cast<long long>(i) * 1000}, prev));
    prev = out.back().chain;
  }
  return out;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(SECLAAS_FIXTURE_DIR) / name;
}

}  // namespace seclaas::testing
