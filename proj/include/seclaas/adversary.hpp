#pragma once

// Executable threat model. Honest sealed days are built with the real
// pipeline; each attack rewrites the presentation (records, witnesses,
// claimed state) and/or the feed the auditor reads, and the verifier must
// reject it with the expected reason.

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seclaas/crypto.hpp"
#include "seclaas/verifier.hpp"

namespace seclaas {

enum class Attack {
  kRemoveEntry,               // I1, I4
  kReorderEntries,            // I2, I5
  kPlantFakeEntry,            // I3, I6
  kRewriteChainAfterReorder,  // I2, I5
  kSubstituteFakePPL,         // I7
  kWrongKeyPPL,               // I7
  kCiphertextInspection,      // C1, C2
};

std::string_view attack_name(Attack a);
std::string_view attack_properties(Attack a);
std::vector<Attack> all_attacks();
std::optional<Attack> parse_attack(std::string_view name);

/// An honest, sealed day as published and exported.
struct FixtureDay {
  Backend backend = Backend::kBloom;
  AuditPresentation presentation;
  std::vector<ProofOfPastLog> feed;
  std::vector<LogEntry> plaintext;  // source entries, for leakage checks
  Bytes stored_segment;             // raw segment bytes as persisted
};

struct FixtureSpec {
  std::size_t records = 0;
  Ipv4 ip;
  Day day{};
  std::uint64_t seed = 0;
};

/// Seals one day per FixtureSpec through a Logger rooted at `work_dir` (which must
/// be empty or absent) and exports it.
std::vector<FixtureDay> build_fixture_days(const std::filesystem::path& work_dir, const AccumulatorConfig& config,
                                           const KeyMaterial& keys, std::span<const FixtureSpec> specs);

/// Deterministic synthetic entries for (ip, day).
std::vector<LogEntry> synthetic_entries(Ipv4 ip, Day day, std::size_t count, std::uint64_t seed);

/// Capabilities of the attacker: the agency public key (public by design)
/// and a signing key that is not the provider's.
struct Adversary {
  AgencyPublicKey agency_key;
  ProviderSigningKey attacker_key;
};

struct TamperedCase {
  bool applicable = true;
  std::string notice;  // why the scenario was skipped
  AuditPresentation presentation;
  std::vector<ProofOfPastLog> feed;
  std::set<Reason> expected;  // acceptable rejection reasons
};

/// Deterministic in `seed`. Not defined for kCiphertextInspection (see inspect_for_leaks).
TamperedCase mutate(Attack attack, const FixtureDay& day, const Adversary& adversary, std::uint64_t seed);

/// A well-formed record chained onto the presented tip but never sealed.
ChainedRecord forge_record(const FixtureDay& day, const AgencyPublicKey& agency_key, std::uint64_t seed);

struct LeakFinding {
  std::string where;
  std::string needle;
};

/// Searches the stored segment and the sealed proof payload for any
/// plaintext confidential field (to_ip as text, raw to_ip with port, user_id).
std::vector<LeakFinding> inspect_for_leaks(const FixtureDay& day);

/// Fraction of `trials` forged records accepted by verify_membership. RSA
/// forgeries borrow a random genuine witness.
double planted_acceptance_rate(const FixtureDay& day, const AgencyPublicKey& agency_key, std::size_t trials,
                               std::uint64_t seed);

struct MatrixRow {
  std::size_t fixture = 0;
  Backend backend = Backend::kBloom;
  std::string scenario;  // attack name or "honest"
  std::string properties;
  std::string outcome;   // accepted | rejected | skipped | no-leak | leak
  std::string reason;    // verifier reason code or notice
  bool pass = false;
};

struct MatrixReport {
  std::vector<MatrixRow> rows;
  bool passed = true;

  nlohmann::json to_json() const;
};

/// Honest control plus every attack for every fixture.
MatrixReport run_matrix(std::span<const FixtureDay> fixtures, std::span<const Attack> attacks,
                        const Adversary& adversary, const ProviderVerifyingKey& provider_key, std::uint64_t seed);

}  // namespace seclaas
