#pragma once

// The logger: LogEntry -> encrypted entry -> chain link -> persisted record
// -> accumulator fold, and the end-of-day seal that publishes a PPL.
//
// Commit protocol for one append: the framed record is appended to the
// segment, then the proof entry (accumulator state with record_count) is
// replaced atomically. The proof entry is the commit point; on recovery a
// segment longer than the committed count is truncated back to it, and a
// segment shorter than it (lost tail) has its accumulator rebuilt from the
// surviving records.
//
// Seal protocol: witnesses and signature are computed first, then the proof
// entry is rewritten as sealed (commit point), then the PPL is appended to
// the feed. A sealed entry missing from the feed is republished on recovery.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "seclaas/accumulator.hpp"
#include "seclaas/crypto.hpp"
#include "seclaas/storage.hpp"

namespace seclaas {

class AlreadySealedError : public SealedChainError {
 public:
  AlreadySealedError(const std::string& what, ProofOfPastLog ppl) : SealedChainError(what), ppl_(std::move(ppl)) {}
  const ProofOfPastLog& ppl() const noexcept { return ppl_; }

 private:
  ProofOfPastLog ppl_;
};

struct LoggerOptions {
  std::filesystem::path data_root;
  AccumulatorConfig accumulator;
  bool durable = true;
  std::shared_ptr<FaultInjector> faults;
  std::function<Timestamp()> clock;  // defaults to the system clock
};

struct RecoveryReport {
  ChainKey key;
  std::size_t records = 0;          // committed records after recovery
  std::size_t dropped_records = 0;  // uncommitted or unreadable frames removed
  bool rebuilt_accumulator = false;
  bool republished_ppl = false;
  std::string segment_damage;
};

class Logger {
 public:
  /// `signing_key` may be omitted for ingest-only use; seal_day then throws.
  Logger(LoggerOptions options, AgencyPublicKey agency_key, std::optional<ProviderSigningKey> signing_key = {});

  /// Appends `entry` to the chain of (from_ip, day(timestamp)).
  /// Throws SealedChainError if that day is sealed.
  ChainedRecord append(const LogEntry& entry);

  /// Seals the chain and publishes its PPL. A second call throws
  /// AlreadySealedError carrying the PPL published the first time.
  ProofOfPastLog seal_day(const ChainKey& key);

  /// Reconciles the stores for one chain (idempotent). Called implicitly the
  /// first time a chain is touched by this Logger.
  RecoveryReport recover(const ChainKey& key);
  /// Recovers every chain on disk and repairs the feed.
  std::vector<RecoveryReport> recover_all();

  bool is_sealed(const ChainKey& key);
  AccumulatorState accumulator(const ChainKey& key);

  const DataRoot& root() const noexcept { return root_; }
  const AccumulatorConfig& config() const noexcept { return options_.accumulator; }

 private:
  struct Chain {
    std::mutex mutex;
    std::optional<AccumulatorState> state;  // committed state; empty until recovered
    bool sealed = false;
    std::optional<ProofOfPastLog> ppl;
  };

  std::shared_ptr<Chain> chain(const ChainKey& key);
  RecoveryReport recover_locked(const ChainKey& key, Chain& c);
  void ensure_loaded(const ChainKey& key, Chain& c);
  Timestamp now() const;

  LoggerOptions options_;
  DataRoot root_;
  std::shared_ptr<FileIo> io_;
  LogStore logs_;
  ProofStore proofs_;
  FeedStore feed_;
  AgencyPublicKey agency_key_;
  std::optional<ProviderSigningKey> signing_key_;

  std::mutex chains_mutex_;
  std::map<ChainKey, std::shared_ptr<Chain>> chains_;
};

/// Builds the PPL for a final state: digest and signature over its canonical encoding.
ProofOfPastLog make_ppl(const AccumulatorState& final_state, const ProviderSigningKey& key, Timestamp published_at);

/// Opens the accumulator configuration stored under `data_root`, or stores
/// `fallback()` there if none exists yet. Throws ParamError if the stored
/// backend differs from `requested`.
AccumulatorConfig load_or_init_config(const std::filesystem::path& data_root, std::optional<Backend> requested,
                                      const std::function<AccumulatorConfig(Backend)>& fallback);

}  // namespace seclaas
