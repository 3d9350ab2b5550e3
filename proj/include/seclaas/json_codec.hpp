#pragma once

// Canonical JSON forms of the published and stored artifacts. Objects use
// sorted keys and compact separators, binaries are base64, digests are
// lowercase hex and instants are RFC 3339 UTC with microseconds.

#include <nlohmann/json.hpp>

#include "seclaas/accumulator.hpp"
#include "seclaas/storage.hpp"
#include "seclaas/types.hpp"

namespace seclaas::json {

using Json = nlohmann::json;

Json to_json(const ProofOfPastLog& ppl);
ProofOfPastLog ppl_from_json(const Json& j);

Json to_json(const AccumulatorState& state);
AccumulatorState state_from_json(const Json& j);

Json to_json(const AccumulatorConfig& config);
AccumulatorConfig config_from_json(const Json& j);

Json to_json(const MembershipWitness& w);
MembershipWitness witness_from_json(const Json& j);

Json to_json(const ProofStoreEntry& entry);
ProofStoreEntry proof_entry_from_json(const Json& j);

/// Compact dump; key order is already sorted by nlohmann::json.
std::string canonical(const Json& j);

/// Field access helpers that throw DecodeError with the field name.
const Json& field(const Json& j, const char* name);
std::string string_field(const Json& j, const char* name);
Bytes base64_field(const Json& j, const char* name);

}  // namespace seclaas::json
