#pragma once

// Auditor side. Nothing here decrypts: PPL validity, membership and
// sequence are all checked over ciphertext records.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seclaas/accumulator.hpp"
#include "seclaas/crypto.hpp"
#include "seclaas/storage.hpp"

namespace seclaas {

enum class Reason {
  kAccepted,
  kUnpublishedDay,
  kWrongChain,
  kDigestMismatch,
  kBadSignature,
  kWitnessAbsent,
  kNotMember,
  kSequenceBroken,
  kNotEvaluated,
};

std::string_view reason_code(Reason r);
std::optional<Reason> parse_reason(std::string_view code);

struct PplVerdict {
  bool ok = false;
  Reason reason = Reason::kNotEvaluated;
};

/// Accepts iff sha256(encode(claimed)) == ppl.ae_digest and the provider
/// signature over encode(claimed) verifies. Digest is checked first.
PplVerdict verify_ppl(const ProofOfPastLog& ppl, const AccumulatorState& claimed, const ProviderVerifyingKey& key);

/// Bloom: all probe bits set in the sealed filter. RSA: the witness raised
/// to the record's exponent equals the sealed value; no witness fails with
/// kWitnessAbsent.
Reason verify_membership(const ChainedRecord& record, const AccumulatorState& sealed,
                         const std::optional<MembershipWitness>& witness);

struct SequenceVerdict {
  bool ok = true;
  std::optional<std::size_t> first_violation;
};

/// record[0].chain must equal chain_link(ele_0, genesis(key)) and each later
/// chain must equal chain_link(ele_i, chain_{i-1}).
SequenceVerdict verify_sequence(std::span<const ChainedRecord> records, const ChainKey& key);

/// Additionally requires exactly `record_count` records ending at `head`,
/// i.e. the presentation is the whole sealed chain. A missing tail is
/// reported at index records.size(), surplus records at index record_count.
SequenceVerdict verify_sequence(std::span<const ChainedRecord> records, const ChainKey& key,
                                std::uint64_t record_count, const Digest& head);

/// What an investigator hands the auditor for one (ip, day).
struct AuditPresentation {
  ChainKey key;
  AccumulatorState claimed_state;
  std::vector<ChainedRecord> records;
  std::vector<std::optional<MembershipWitness>> witnesses;  // parallel to records; may be empty for Bloom
};

struct AuditReport {
  ChainKey key;
  bool accepted = false;
  Reason reason = Reason::kNotEvaluated;  // first failing check, or kAccepted
  Reason ppl = Reason::kNotEvaluated;
  std::vector<Reason> membership;
  SequenceVerdict sequence;
  bool sequence_evaluated = false;
};

/// Two-stage gate: the day's PPL from `feed`, then every record's membership,
/// then the chain order and completeness against the sealed tip.
AuditReport audit_day(const AuditPresentation& presented, std::span<const ProofOfPastLog> feed,
                      const ProviderVerifyingKey& provider_key);

nlohmann::json to_json(const AuditReport& report);
std::string format_report(const AuditReport& report);

/// Investigator bundle: presentation plus the PPL current at export time.
struct InvestigatorBundle {
  AuditPresentation presentation;
  std::optional<ProofOfPastLog> ppl;
};

/// Reads a sealed chain's records, witnesses and final state from the stores.
/// Throws Error if the chain is not sealed.
InvestigatorBundle export_bundle(const DataRoot& root, const ChainKey& key);

nlohmann::json to_json(const InvestigatorBundle& bundle);
InvestigatorBundle bundle_from_json(const nlohmann::json& j);

}  // namespace seclaas
