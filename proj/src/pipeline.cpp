#include "seclaas/pipeline.hpp"

#include "seclaas/encoding.hpp"
#include "seclaas/hash.hpp"

namespace seclaas {

ProofOfPastLog make_ppl(const AccumulatorState& final_state, const ProviderSigningKey& key, Timestamp published_at) {
  const Bytes payload = canonical_encode(final_state);
  ProofOfPastLog ppl;
  ppl.ip = final_state.key.ip;
  ppl.day = final_state.key.day;
  ppl.ae_digest = sha256(payload);
  ppl.signature = sign(payload, key);
  ppl.published_at = published_at;
  return ppl;
}

AccumulatorConfig load_or_init_config(const std::filesystem::path& data_root, std::optional<Backend> requested,
                                      const std::function<AccumulatorConfig(Backend)>& fallback) {
  DataRoot root(data_root);
  if (auto stored = read_accumulator_config(root)) {
    if (requested && backend_of(*stored) != *requested) {
      throw ParamError("data root " + data_root.string() + " already uses the " +
                       std::string(backend_name(backend_of(*stored))) + " backend");
    }
    return *stored;
  }
  AccumulatorConfig config = fallback(requested.value_or(Backend::kBloom));
  FileIo io;
  write_accumulator_config(root, io, config);
  return config;
}

Logger::Logger(LoggerOptions options, AgencyPublicKey agency_key, std::optional<ProviderSigningKey> signing_key)
    : options_(std::move(options)),
      root_(options_.data_root),
      io_(std::make_shared<FileIo>(options_.durable, options_.faults)),
      logs_(root_, io_),
      proofs_(root_, io_),
      feed_(root_, io_),
      agency_key_(std::move(agency_key)),
      signing_key_(std::move(signing_key)) {}

Timestamp Logger::now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::time_point_cast<Microseconds>(std::chrono::system_clock::now());
}

std::shared_ptr<Logger::Chain> Logger::chain(const ChainKey& key) {
  std::lock_guard lock(chains_mutex_);
  auto& slot = chains_[key];
  if (!slot) slot = std::make_shared<Chain>();
  return slot;
}

void Logger::ensure_loaded(const ChainKey& key, Chain& c) {
  if (!c.state) recover_locked(key, c);
}

RecoveryReport Logger::recover_locked(const ChainKey& key, Chain& c) {
  c.state.reset();
  RecoveryReport report;
  report.key = key;

  auto entry = proofs_.load(key);
  const SegmentScan scan = logs_.scan(key);
  report.segment_damage = scan.damage;
  const std::size_t committed = entry ? entry->state.record_count : 0;
  const std::size_t readable = scan.records.size();

  if (entry && entry->state.backend() != backend_of(options_.accumulator)) {
    throw ParamError("proof entry for " + key.ip.to_string() + " " + format_day(key.day) +
                     " uses another accumulator backend");
  }

  AccumulatorState state = entry ? entry->state : empty_state(options_.accumulator, key);
  const bool tip_matches = readable >= committed && (committed == 0 ? state.head == genesis(key)
                                                                    : scan.records[committed - 1].chain == state.head);
  if (readable > committed || !scan.damage.empty()) {
    report.dropped_records = readable > committed ? readable - committed : 0;
    logs_.truncate_records(key, std::min(readable, committed));
  }
  if (!tip_matches) {
    // Committed records were lost or diverge: refold what survives.
    if (entry && entry->sealed) {
      throw StorageError("sealed chain " + key.ip.to_string() + " " + format_day(key.day) +
                         " lost committed records");
    }
    state = empty_state(options_.accumulator, key);
    const std::size_t keep = std::min(readable, committed);
    for (std::size_t i = 0; i < keep; ++i) state = accumulate(std::move(state), scan.records[i]);
    proofs_.store_accumulator(state);
    report.rebuilt_accumulator = true;
  }

  c.sealed = entry && entry->sealed;
  c.ppl = entry ? entry->ppl : std::nullopt;
  if (c.sealed && c.ppl) {
    feed_.recover();
    if (!feed_.read_feed().find(key)) {
      feed_.publish_ppl(*c.ppl);
      report.republished_ppl = true;
    }
  }
  report.records = state.record_count;
  c.state = std::move(state);
  return report;
}

RecoveryReport Logger::recover(const ChainKey& key) {
  auto c = chain(key);
  std::lock_guard lock(c->mutex);
  return recover_locked(key, *c);
}

std::vector<RecoveryReport> Logger::recover_all() {
  feed_.recover();
  std::vector<RecoveryReport> out;
  for (const auto& key : root_.list_chains()) out.push_back(recover(key));
  return out;
}

bool Logger::is_sealed(const ChainKey& key) {
  auto c = chain(key);
  std::lock_guard lock(c->mutex);
  ensure_loaded(key, *c);
  return c->sealed;
}

AccumulatorState Logger::accumulator(const ChainKey& key) {
  auto c = chain(key);
  std::lock_guard lock(c->mutex);
  ensure_loaded(key, *c);
  return *c->state;
}

ChainedRecord Logger::append(const LogEntry& entry) {
  const ChainKey key{entry.from_ip, day_of(entry.timestamp)};
  auto c = chain(key);
  std::lock_guard lock(c->mutex);
  ensure_loaded(key, *c);
  if (c->sealed) {
    throw SealedChainError("chain " + key.ip.to_string() + " " + format_day(key.day) + " is sealed");
  }

  ChainedRecord record;
  record.ele = encrypt_fields(entry, agency_key_);
  record.chain = chain_link(record.ele, c->state->head);
  AccumulatorState next = accumulate(*c->state, record);

  try {
    logs_.put_record(key, record);
    proofs_.store_accumulator(next);
  } catch (...) {
    // Disk may now hold a partial write; force a recovery pass next time.
    c->state.reset();
    throw;
  }
  c->state = std::move(next);
  return record;
}

ProofOfPastLog Logger::seal_day(const ChainKey& key) {
  auto c = chain(key);
  std::lock_guard lock(c->mutex);
  ensure_loaded(key, *c);
  if (c->sealed) {
    throw AlreadySealedError("chain " + key.ip.to_string() + " " + format_day(key.day) + " is already sealed",
                             *c->ppl);
  }
  if (!signing_key_) throw CryptoError("sealing requires the provider signing key");

  ProofStoreEntry entry;
  entry.state = *c->state;
  entry.sealed = true;
  if (entry.state.backend() == Backend::kRsaOneWay) {
    const auto records = logs_.get_records(key);
    if (records.size() != entry.state.record_count) {
      c->state.reset();
      throw StorageError("segment and accumulator disagree for " + key.ip.to_string() + " " + format_day(key.day));
    }
    entry.witnesses = rsa_witnesses(records, entry.state.rsa().params);
  }
  entry.ppl = make_ppl(entry.state, *signing_key_, now());

  try {
    feed_.publish_key(signing_key_->verifying_key());
    proofs_.store(entry);
    c->sealed = true;
    c->ppl = entry.ppl;
    feed_.publish_ppl(*entry.ppl);
  } catch (...) {
    c->state.reset();
    throw;
  }
  return *entry.ppl;
}

}  // namespace seclaas
