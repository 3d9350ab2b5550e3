#pragma once

// Per-(ip, day) membership accumulators.
//
// Two interchangeable backends share one state type:
//  * Bloom: m-bit array, k probes per record derived by double hashing
//    over SHA-256(encode(record)). Zero false negatives, false positives
//    bounded by the configured rate.
//  * RsaOneWay: value = X^(e_1 * e_2 * ... ) mod N with e_i = exponent_of(record_i).
//    Membership is proven by a witness w_i = X^(prod_{j != i} e_j) mod N,
//    checked as w_i^e_i mod N == final value.
//
// Besides the backend payload the state tracks how many records were folded
// and the chain value of the most recent one, so the sealed state pins the
// exact length and tip of the day's chain.

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "seclaas/types.hpp"

namespace seclaas {

enum class Backend { kBloom, kRsaOneWay };

std::string_view backend_name(Backend b);
std::optional<Backend> parse_backend(std::string_view name);

struct BloomParams {
  std::uint64_t capacity = 0;  // n
  double fp_rate = 0.0;        // p
  std::uint64_t bits = 0;      // m
  std::uint32_t hashes = 0;    // k

  friend bool operator==(const BloomParams&, const BloomParams&) = default;
};

/// m = ceil(-n ln p / (ln 2)^2), k = max(1, round(m/n * ln 2)).
/// Throws ParamError unless n >= 1 and 0 < p < 1.
BloomParams derive_bloom_params(std::uint64_t capacity, double fp_rate);

/// Public accumulator parameters. The factors of N are never retained.
struct RsaParams {
  mpz_class modulus;  // N
  mpz_class seed;     // X
  unsigned prime_bits = 0;

  friend bool operator==(const RsaParams& a, const RsaParams& b) {
    return a.modulus == b.modulus && a.seed == b.seed && a.prime_bits == b.prime_bits;
  }
};

/// Validates 1 < X < N and gcd(X, N) == 1.
RsaParams make_rsa_params(mpz_class modulus, mpz_class seed, unsigned prime_bits = 0);

/// Fresh N = P*Q with two distinct `prime_bits`-bit primes and a random unit X.
/// The seeded overload is deterministic (for tests and reproducible fixtures).
RsaParams generate_rsa_params(unsigned prime_bits, std::uint64_t rng_seed);
RsaParams generate_rsa_params(unsigned prime_bits);

struct BloomFilter {
  BloomParams params;
  Bytes bits;  // ceil(m/8) bytes, bit i at byte i/8, mask 1 << (i % 8)

  static BloomFilter empty(const BloomParams& params);
  bool test(std::uint64_t i) const { return (bits[i >> 3] >> (i & 7)) & 1u; }
  void set(std::uint64_t i) { bits[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7)); }
  std::uint64_t popcount() const;

  friend bool operator==(const BloomFilter&, const BloomFilter&) = default;
};

struct RsaAccumulator {
  RsaParams params;
  mpz_class value;

  static RsaAccumulator empty(const RsaParams& params) { return {params, params.seed}; }

  friend bool operator==(const RsaAccumulator& a, const RsaAccumulator& b) {
    return a.params == b.params && a.value == b.value;
  }
};

using AccumulatorConfig = std::variant<BloomParams, RsaParams>;

struct AccumulatorState {
  ChainKey key;
  std::uint64_t record_count = 0;
  Digest head{};  // chain value of the last folded record, genesis when empty
  std::variant<BloomFilter, RsaAccumulator> payload;

  Backend backend() const { return payload.index() == 0 ? Backend::kBloom : Backend::kRsaOneWay; }
  const BloomFilter& bloom() const { return std::get<BloomFilter>(payload); }
  const RsaAccumulator& rsa() const { return std::get<RsaAccumulator>(payload); }

  friend bool operator==(const AccumulatorState&, const AccumulatorState&) = default;
};

/// Empty state for a chain: all-zero bits, or value X.
AccumulatorState empty_state(const AccumulatorConfig& config, const ChainKey& key);
Backend backend_of(const AccumulatorConfig& config);

/// Injective encoding of the whole state; this is what a PPL signs and hashes.
Bytes canonical_encode(const AccumulatorState& state);
AccumulatorState decode_accumulator_state(std::span<const std::uint8_t> bytes);

// --- Bloom ----------------------------------------------------------------

/// position_i = (h1 + i*h2) mod m, h1/h2 the first two big-endian 64-bit words
/// of SHA-256(encode(record)).
std::vector<std::uint64_t> bloom_positions(const ChainedRecord& record, const BloomParams& params);
std::vector<std::uint64_t> bloom_positions(const Digest& record_hash, const BloomParams& params);

AccumulatorState bloom_insert(AccumulatorState state, const ChainedRecord& record);
bool bloom_contains(const AccumulatorState& state, const ChainedRecord& record);
bool bloom_contains(const BloomFilter& filter, const ChainedRecord& record);

// --- RSA one-way accumulator ---------------------------------------------

struct MembershipWitness {
  std::uint64_t record_index = 0;
  mpz_class value;

  friend bool operator==(const MembershipWitness& a, const MembershipWitness& b) {
    return a.record_index == b.record_index && a.value == b.value;
  }
};

/// SHA-256(encode(record)) read as a big-endian integer, lowest bit forced,
/// floored at 3. Always odd and >= 3.
mpz_class exponent_of(const ChainedRecord& record);

/// value^exponent mod N
mpz_class fold_exponent(const mpz_class& value, const mpz_class& exponent, const RsaParams& params);

AccumulatorState rsa_fold(AccumulatorState state, const ChainedRecord& record);

/// Witness i = X^(product of every exponent but e_i) mod N. O(n log n)
/// modular exponentiations by recursive halving.
std::vector<MembershipWitness> rsa_witnesses_for_exponents(std::span<const mpz_class> exponents,
                                                           const RsaParams& params);
std::vector<MembershipWitness> rsa_witnesses(std::span<const ChainedRecord> records, const RsaParams& params);

/// True iff witness^exponent_of(record) mod N == final_value.
bool rsa_verify_membership(const ChainedRecord& record, const MembershipWitness& witness,
                           const mpz_class& final_value, const RsaParams& params);

/// Folds a record into whichever backend the state carries, advancing
/// record_count and head.
AccumulatorState accumulate(AccumulatorState state, const ChainedRecord& record);

// Big-endian unsigned magnitude; zero encodes as an empty string.
Bytes bigint_to_bytes(const mpz_class& v);
mpz_class bigint_from_bytes(std::span<const std::uint8_t> bytes);

}  // namespace seclaas
