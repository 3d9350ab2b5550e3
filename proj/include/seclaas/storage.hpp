#pragma once

// File-backed stores under one data root:
//
//   <root>/accumulator.json               backend + public accumulator parameters
//   <root>/logs/<ip>/<YYYY-MM-DD>.seg     log segment (binary, append-only)
//   <root>/proofs/<ip>/<YYYY-MM-DD>.json  proof store entry (canonical JSON)
//   <root>/feed/ppl.jsonl                 published PPLs, one canonical JSON per line
//   <root>/feed/provider_pub.key          provider verifying key (PEM)
//
// Segment layout: the 8-byte magic "SLSEG001" followed by frames
//   u32be body_length | u32be crc32(body) | body = canonical_encode(ChainedRecord)
// A frame that is short or fails its CRC ends the readable prefix; recovery
// truncates the file there.

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "seclaas/accumulator.hpp"
#include "seclaas/crypto.hpp"
#include "seclaas/errors.hpp"
#include "seclaas/types.hpp"

namespace seclaas {

inline constexpr std::string_view kSegmentMagic = "SLSEG001";

/// Thrown by FaultInjector at the configured write boundary. Deliberately not
/// a seclaas::Error so it is never mistaken for an ordinary failure.
class SimulatedCrash : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicatePublicationError : public StorageError {
 public:
  using StorageError::StorageError;
};

/// Counts mutating file operations. When armed, the operation with index
/// `crash_at` (0-based) fails: data writes are torn (half the bytes land),
/// renames and truncations simply do not happen.
class FaultInjector {
 public:
  FaultInjector() = default;
  explicit FaultInjector(std::size_t crash_at) : crash_at_(crash_at) {}

  /// Counts one operation; true if this is the one that must fail.
  bool should_crash();
  std::size_t operations() const noexcept { return count_; }

 private:
  std::optional<std::size_t> crash_at_;
  std::size_t count_ = 0;
};

/// Mutating file primitives routed through an optional FaultInjector.
class FileIo {
 public:
  explicit FileIo(bool durable = true, std::shared_ptr<FaultInjector> faults = nullptr)
      : durable_(durable), faults_(std::move(faults)) {}

  void append(const std::filesystem::path& path, std::span<const std::uint8_t> data);
  /// tmp-file write followed by rename; readers see the old or the new content.
  void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
  void truncate(const std::filesystem::path& path, std::uintmax_t size);

  bool durable() const noexcept { return durable_; }

 private:
  bool crash_now();

  bool durable_;
  std::shared_ptr<FaultInjector> faults_;
};

Bytes read_file_bytes(const std::filesystem::path& path);

class DataRoot {
 public:
  explicit DataRoot(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& path() const noexcept { return root_; }
  std::filesystem::path config_path() const { return root_ / "accumulator.json"; }
  std::filesystem::path segment_path(const ChainKey& key) const;
  std::filesystem::path proof_path(const ChainKey& key) const;
  std::filesystem::path feed_path() const { return root_ / "feed" / "ppl.jsonl"; }
  std::filesystem::path provider_key_path() const { return root_ / "feed" / "provider_pub.key"; }

  /// Chains with a segment or a proof entry on disk.
  std::vector<ChainKey> list_chains() const;

 private:
  std::filesystem::path root_;
};

std::optional<AccumulatorConfig> read_accumulator_config(const DataRoot& root);
void write_accumulator_config(const DataRoot& root, FileIo& io, const AccumulatorConfig& config);

struct SegmentScan {
  std::vector<ChainedRecord> records;
  std::uintmax_t valid_bytes = 0;  // length of the readable prefix
  std::uintmax_t file_bytes = 0;
  std::string damage;  // empty when the whole file is readable
};

/// Parses a segment image without touching disk.
SegmentScan scan_segment(std::span<const std::uint8_t> image);
Bytes frame_record(const ChainedRecord& record);

class LogStore {
 public:
  LogStore(DataRoot root, std::shared_ptr<FileIo> io) : root_(std::move(root)), io_(std::move(io)) {}

  void put_record(const ChainKey& key, const ChainedRecord& record);
  /// Readable prefix in write order; empty for an unknown chain.
  std::vector<ChainedRecord> get_records(const ChainKey& key) const;
  SegmentScan scan(const ChainKey& key) const;
  /// Drops frames past `count` (and any damaged tail).
  void truncate_records(const ChainKey& key, std::size_t count);

 private:
  DataRoot root_;
  std::shared_ptr<FileIo> io_;
};

struct ProofStoreEntry {
  AccumulatorState state;
  bool sealed = false;
  std::vector<MembershipWitness> witnesses;  // RSA backend, sealed days only
  std::optional<ProofOfPastLog> ppl;          // sealed days only
};

class ProofStore {
 public:
  ProofStore(DataRoot root, std::shared_ptr<FileIo> io) : root_(std::move(root)), io_(std::move(io)) {}

  std::optional<ProofStoreEntry> load(const ChainKey& key) const;
  void store(const ProofStoreEntry& entry);

  /// Stored state, or the empty state for `config` when nothing was stored.
  AccumulatorState load_accumulator(const ChainKey& key, const AccumulatorConfig& config) const;
  void store_accumulator(const AccumulatorState& state);

 private:
  DataRoot root_;
  std::shared_ptr<FileIo> io_;
};

struct PublishedFeed {
  std::vector<ProofOfPastLog> entries;
  std::optional<std::string> provider_key_pem;

  const ProofOfPastLog* find(const ChainKey& key) const;
};

class FeedStore {
 public:
  FeedStore(DataRoot root, std::shared_ptr<FileIo> io) : root_(std::move(root)), io_(std::move(io)) {}

  /// Appends one line. Throws DuplicatePublicationError if (ip, day) is already published.
  void publish_ppl(const ProofOfPastLog& ppl);
  /// Complete lines only; an unterminated trailing line is ignored.
  PublishedFeed read_feed() const;
  /// Writes the provider key once; a different key already on file is an error.
  void publish_key(const ProviderVerifyingKey& key);
  /// Truncates an unterminated trailing line. Returns the bytes dropped.
  std::uintmax_t recover();

 private:
  DataRoot root_;
  std::shared_ptr<FileIo> io_;
};

}  // namespace seclaas
