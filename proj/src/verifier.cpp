#include "seclaas/verifier.hpp"

#include <sstream>

#include "seclaas/encoding.hpp"
#include "seclaas/errors.hpp"
#include "seclaas/hash.hpp"
#include "seclaas/json_codec.hpp"

namespace seclaas {

namespace {

constexpr std::pair<Reason, std::string_view> kReasonCodes[] = {
    {Reason::kAccepted, "accepted"},
    {Reason::kUnpublishedDay, "unpublished-day"},
    {Reason::kWrongChain, "wrong-chain"},
    {Reason::kDigestMismatch, "digest-mismatch"},
    {Reason::kBadSignature, "bad-signature"},
    {Reason::kWitnessAbsent, "witness-absent"},
    {Reason::kNotMember, "not-member"},
    {Reason::kSequenceBroken, "sequence-broken"},
    {Reason::kNotEvaluated, "not-evaluated"},
};

}  // namespace

std::string_view reason_code(Reason r) {
  for (const auto& [reason, code] : kReasonCodes) {
    if (reason == r) return code;
  }
  return "unknown";
}

std::optional<Reason> parse_reason(std::string_view code) {
  for (const auto& [reason, c] : kReasonCodes) {
    if (c == code) return reason;
  }
  return std::nullopt;
}

PplVerdict verify_ppl(const ProofOfPastLog& ppl, const AccumulatorState& claimed, const ProviderVerifyingKey& key) {
  const Bytes payload = canonical_encode(claimed);
  if (sha256(payload) != ppl.ae_digest) return {false, Reason::kDigestMismatch};
  if (!verify_signature(payload, ppl.signature, key)) return {false, Reason::kBadSignature};
  return {true, Reason::kAccepted};
}

Reason verify_membership(const ChainedRecord& record, const AccumulatorState& sealed,
                         const std::optional<MembershipWitness>& witness) {
  if (sealed.backend() == Backend::kBloom) {
    return bloom_contains(sealed, record) ? Reason::kAccepted : Reason::kNotMember;
  }
  if (!witness) return Reason::kWitnessAbsent;
  const auto& acc = sealed.rsa();
  return rsa_verify_membership(record, *witness, acc.value, acc.params) ? Reason::kAccepted : Reason::kNotMember;
}

SequenceVerdict verify_sequence(std::span<const ChainedRecord> records, const ChainKey& key) {
  Digest previous = genesis(key);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (chain_link(records[i].ele, previous) != records[i].chain) return {false, i};
    previous = records[i].chain;
  }
  return {};
}

SequenceVerdict verify_sequence(std::span<const ChainedRecord> records, const ChainKey& key,
                                std::uint64_t record_count, const Digest& head) {
  auto verdict = verify_sequence(records, key);
  if (!verdict.ok) return verdict;
  if (records.size() < record_count) return {false, records.size()};
  if (records.size() > record_count) return {false, static_cast<std::size_t>(record_count)};
  const Digest& tip = records.empty() ? genesis(key) : records.back().chain;
  if (tip != head) return {false, records.empty() ? 0 : records.size() - 1};
  return {};
}

AuditReport audit_day(const AuditPresentation& presented, std::span<const ProofOfPastLog> feed,
                      const ProviderVerifyingKey& provider_key) {
  AuditReport report;
  report.key = presented.key;

  const ProofOfPastLog* ppl = nullptr;
  for (const auto& p : feed) {
    if (p.key() == presented.key) {
      ppl = &p;
      break;
    }
  }
  if (ppl == nullptr) {
    report.ppl = report.reason = Reason::kUnpublishedDay;
    return report;
  }
  if (presented.claimed_state.key != presented.key) {
    report.ppl = report.reason = Reason::kWrongChain;
    return report;
  }
  const auto ppl_verdict = verify_ppl(*ppl, presented.claimed_state, provider_key);
  report.ppl = ppl_verdict.reason;
  if (!ppl_verdict.ok) {
    report.reason = ppl_verdict.reason;
    return report;
  }

  Reason first_failure = Reason::kAccepted;
  report.membership.reserve(presented.records.size());
  for (std::size_t i = 0; i < presented.records.size(); ++i) {
    std::optional<MembershipWitness> witness;
    if (i < presented.witnesses.size()) witness = presented.witnesses[i];
    Reason r = verify_membership(presented.records[i], presented.claimed_state, witness);
    report.membership.push_back(r);
    if (r != Reason::kAccepted && first_failure == Reason::kAccepted) first_failure = r;
  }

  report.sequence = verify_sequence(presented.records, presented.key, presented.claimed_state.record_count,
                                    presented.claimed_state.head);
  report.sequence_evaluated = true;
  if (first_failure == Reason::kAccepted && !report.sequence.ok) first_failure = Reason::kSequenceBroken;

  report.reason = first_failure;
  report.accepted = first_failure == Reason::kAccepted;
  return report;
}

nlohmann::json to_json(const AuditReport& report) {
  nlohmann::json membership = nlohmann::json::array();
  std::size_t members = 0;
  for (auto r : report.membership) {
    membership.push_back(std::string(reason_code(r)));
    if (r == Reason::kAccepted) ++members;
  }
  nlohmann::json sequence = nullptr;
  if (report.sequence_evaluated) {
    sequence = {{"ok", report.sequence.ok},
                {"first_violation", report.sequence.first_violation ? nlohmann::json(*report.sequence.first_violation)
                                                                     : nlohmann::json(nullptr)}};
  }
  return {{"accepted", report.accepted},
          {"day", format_day(report.key.day)},
          {"ip", report.key.ip.to_string()},
          {"membership", std::move(membership)},
          {"members_verified", members},
          {"ppl", std::string(reason_code(report.ppl))},
          {"reason", std::string(reason_code(report.reason))},
          {"records", report.membership.size()},
          {"sequence", std::move(sequence)}};
}

std::string format_report(const AuditReport& report) {
  std::ostringstream os;
  os << "audit " << report.key.ip.to_string() << " " << format_day(report.key.day) << ": "
     << (report.accepted ? "ACCEPT" : "REJECT") << " (" << reason_code(report.reason) << ")\n";
  os << "  proof of past log: " << reason_code(report.ppl) << "\n";
  std::size_t members = 0;
  for (auto r : report.membership) members += r == Reason::kAccepted;
  os << "  membership: " << members << "/" << report.membership.size() << " records verified\n";
  for (std::size_t i = 0; i < report.membership.size(); ++i) {
    if (report.membership[i] != Reason::kAccepted) {
      os << "    record " << i << ": " << reason_code(report.membership[i]) << "\n";
    }
  }
  if (report.sequence_evaluated) {
    os << "  sequence: " << (report.sequence.ok ? "intact" : "broken");
    if (report.sequence.first_violation) os << " at index " << *report.sequence.first_violation;
    os << "\n";
  } else {
    os << "  sequence: not evaluated\n";
  }
  return os.str();
}

InvestigatorBundle export_bundle(const DataRoot& root, const ChainKey& key) {
  auto io = std::make_shared<FileIo>(false);
  ProofStore proofs(root, io);
  LogStore logs(root, io);
  auto entry = proofs.load(key);
  if (!entry || !entry->sealed) {
    throw Error("chain " + key.ip.to_string() + " " + format_day(key.day) + " is not sealed");
  }
  InvestigatorBundle bundle;
  bundle.presentation.key = key;
  bundle.presentation.claimed_state = entry->state;
  bundle.presentation.records = logs.get_records(key);
  if (bundle.presentation.records.size() != entry->state.record_count) {
    throw StorageError("segment for " + key.ip.to_string() + " " + format_day(key.day) +
                       " does not match its sealed record count");
  }
  if (entry->state.backend() == Backend::kRsaOneWay) {
    bundle.presentation.witnesses.assign(entry->witnesses.begin(), entry->witnesses.end());
  }
  bundle.ppl = entry->ppl;
  return bundle;
}

nlohmann::json to_json(const InvestigatorBundle& bundle) {
  const auto& p = bundle.presentation;
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t i = 0; i < p.records.size(); ++i) {
    nlohmann::json witness = nullptr;
    if (i < p.witnesses.size() && p.witnesses[i]) witness = to_base64(bigint_to_bytes(p.witnesses[i]->value));
    records.push_back({{"index", i}, {"record", to_base64(canonical_encode(p.records[i]))}, {"witness", witness}});
  }
  return {{"day", format_day(p.key.day)},
          {"format", "seclaas-bundle-v1"},
          {"ip", p.key.ip.to_string()},
          {"ppl", bundle.ppl ? json::to_json(*bundle.ppl) : nlohmann::json(nullptr)},
          {"records", std::move(records)},
          {"state", json::to_json(p.claimed_state)}};
}

InvestigatorBundle bundle_from_json(const nlohmann::json& j) {
  if (json::string_field(j, "format") != "seclaas-bundle-v1") throw DecodeError("unknown bundle format");
  InvestigatorBundle bundle;
  auto& p = bundle.presentation;
  auto ip = Ipv4::parse(json::string_field(j, "ip"));
  auto day = parse_day(json::string_field(j, "day"));
  if (!ip || !day) throw DecodeError("bundle ip/day malformed");
  p.key = ChainKey{*ip, *day};
  p.claimed_state = json::state_from_json(json::field(j, "state"));
  const auto& records = json::field(j, "records");
  if (!records.is_array()) throw DecodeError("bundle records is not an array");
  for (const auto& r : records) {
    p.records.push_back(decode_record(json::base64_field(r, "record")));
    const auto& w = json::field(r, "witness");
    if (w.is_null()) {
      p.witnesses.emplace_back();
    } else {
      p.witnesses.emplace_back(MembershipWitness{p.records.size() - 1, bigint_from_bytes(json::base64_field(r, "witness"))});
    }
  }
  const auto& ppl = json::field(j, "ppl");
  if (!ppl.is_null()) bundle.ppl = json::ppl_from_json(ppl);
  return bundle;
}

}  // namespace seclaas
