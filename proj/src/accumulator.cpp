#include "seclaas/accumulator.hpp"

#include <bit>
#include <cmath>

#include "seclaas/crypto.hpp"
#include "seclaas/encoding.hpp"
#include "seclaas/errors.hpp"
#include "seclaas/hash.hpp"

namespace seclaas {

std::string_view backend_name(Backend b) { return b == Backend::kBloom ? "bloom" : "rsa"; }

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "bloom") return Backend::kBloom;
  if (name == "rsa") return Backend::kRsaOneWay;
  return std::nullopt;
}

BloomParams derive_bloom_params(std::uint64_t capacity, double fp_rate) {
  if (capacity == 0) throw ParamError("bloom capacity must be >= 1");
  if (!(fp_rate > 0.0 && fp_rate < 1.0)) throw ParamError("bloom false-positive rate must lie in (0, 1)");
  const double ln2 = std::log(2.0);
  const double n = static_cast<double>(capacity);
  const auto m = static_cast<std::uint64_t>(std::ceil(-n * std::log(fp_rate) / (ln2 * ln2)));
  const auto k = std::llround(static_cast<double>(m) / n * ln2);
  BloomParams p;
  p.capacity = capacity;
  p.fp_rate = fp_rate;
  p.bits = std::max<std::uint64_t>(1, m);
  p.hashes = static_cast<std::uint32_t>(std::clamp<long long>(k, 1, 64));
  return p;
}

RsaParams make_rsa_params(mpz_class modulus, mpz_class seed, unsigned prime_bits) {
  if (modulus < 3) throw ParamError("accumulator modulus must be >= 3");
  if (seed <= 1 || seed >= modulus) throw ParamError("accumulator seed must satisfy 1 < X < N");
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), seed.get_mpz_t(), modulus.get_mpz_t());
  if (g != 1) throw ParamError("accumulator seed must be coprime to N");
  return RsaParams{std::move(modulus), std::move(seed), prime_bits};
}

namespace {

mpz_class random_prime(gmp_randclass& rng, unsigned bits) {
  for (;;) {
    mpz_class candidate = rng.get_z_bits(bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_class prime;
    mpz_nextprime(prime.get_mpz_t(), candidate.get_mpz_t());
    if (mpz_sizeinbase(prime.get_mpz_t(), 2) == bits) return prime;
  }
}

RsaParams generate_with(gmp_randclass& rng, unsigned prime_bits) {
  if (prime_bits < 8) throw ParamError("accumulator primes must have at least 8 bits");
  mpz_class p = random_prime(rng, prime_bits);
  mpz_class q;
  do {
    q = random_prime(rng, prime_bits);
  } while (q == p);
  mpz_class n = p * q;
  mpz_class x;
  mpz_class g;
  do {
    x = rng.get_z_range(n - 2) + 2;
    mpz_gcd(g.get_mpz_t(), x.get_mpz_t(), n.get_mpz_t());
  } while (g != 1);
  return make_rsa_params(std::move(n), std::move(x), prime_bits);
}

}  // namespace

RsaParams generate_rsa_params(unsigned prime_bits, std::uint64_t rng_seed) {
  gmp_randclass rng(gmp_randinit_mt);
  rng.seed(mpz_class(std::to_string(rng_seed)));
  return generate_with(rng, prime_bits);
}

RsaParams generate_rsa_params(unsigned prime_bits) {
  gmp_randclass rng(gmp_randinit_mt);
  rng.seed(bigint_from_bytes(random_bytes(32)));
  return generate_with(rng, prime_bits);
}

BloomFilter BloomFilter::empty(const BloomParams& params) {
  if (params.bits == 0 || params.hashes == 0 || params.hashes > 64) throw ParamError("invalid bloom parameters");
  return BloomFilter{params, Bytes((params.bits + 7) / 8, 0)};
}

std::uint64_t BloomFilter::popcount() const {
  std::uint64_t n = 0;
  for (auto b : bits) n += static_cast<std::uint64_t>(std::popcount(b));
  return n;
}

AccumulatorState empty_state(const AccumulatorConfig& config, const ChainKey& key) {
  AccumulatorState s;
  s.key = key;
  s.record_count = 0;
  s.head = genesis(key);
  if (const auto* bloom = std::get_if<BloomParams>(&config)) {
    s.payload = BloomFilter::empty(*bloom);
  } else {
    s.payload = RsaAccumulator::empty(std::get<RsaParams>(config));
  }
  return s;
}

Backend backend_of(const AccumulatorConfig& config) {
  return config.index() == 0 ? Backend::kBloom : Backend::kRsaOneWay;
}

Bytes bigint_to_bytes(const mpz_class& v) {
  if (v == 0) return {};
  std::size_t count = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  Bytes out(count);
  mpz_export(out.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(count);
  return out;
}

mpz_class bigint_from_bytes(std::span<const std::uint8_t> bytes) {
  mpz_class v;
  if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return v;
}

Bytes canonical_encode(const AccumulatorState& state) {
  ByteWriter w;
  if (state.backend() == Backend::kBloom) {
    const auto& f = state.bloom();
    w.tag(TypeTag::kBloomState);
    w.ip(state.key.ip);
    w.day(state.key.day);
    w.u64(state.record_count);
    w.raw(state.head);
    w.u64(f.params.capacity);
    w.f64(f.params.fp_rate);
    w.u64(f.params.bits);
    w.u32(f.params.hashes);
    w.bytes(f.bits);
  } else {
    const auto& a = state.rsa();
    w.tag(TypeTag::kRsaState);
    w.ip(state.key.ip);
    w.day(state.key.day);
    w.u64(state.record_count);
    w.raw(state.head);
    w.u32(a.params.prime_bits);
    w.bytes(bigint_to_bytes(a.params.modulus));
    w.bytes(bigint_to_bytes(a.params.seed));
    w.bytes(bigint_to_bytes(a.value));
  }
  return std::move(w).take();
}

AccumulatorState decode_accumulator_state(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto tag = static_cast<TypeTag>(r.u8());
  if (tag != TypeTag::kBloomState && tag != TypeTag::kRsaState) throw DecodeError("not an accumulator state");
  AccumulatorState s;
  s.key.ip = r.ip();
  s.key.day = r.day();
  s.record_count = r.u64();
  auto head = r.raw(kDigestSize);
  std::copy(head.begin(), head.end(), s.head.begin());
  if (tag == TypeTag::kBloomState) {
    BloomFilter f;
    f.params.capacity = r.u64();
    f.params.fp_rate = r.f64();
    f.params.bits = r.u64();
    f.params.hashes = r.u32();
    f.bits = r.bytes();
    if (f.params.bits == 0 || f.params.hashes == 0 || f.params.hashes > 64 ||
        f.bits.size() != (f.params.bits + 7) / 8) {
      throw DecodeError("inconsistent bloom parameters");
    }
    s.payload = std::move(f);
  } else {
    RsaAccumulator a;
    a.params.prime_bits = r.u32();
    a.params.modulus = bigint_from_bytes(r.bytes());
    a.params.seed = bigint_from_bytes(r.bytes());
    a.value = bigint_from_bytes(r.bytes());
    if (a.params.modulus < 3 || a.value < 1 || a.value >= a.params.modulus) {
      throw DecodeError("accumulator value outside [1, N)");
    }
    s.payload = std::move(a);
  }
  r.finish();
  return s;
}

// --- Bloom ----------------------------------------------------------------

std::vector<std::uint64_t> bloom_positions(const Digest& h, const BloomParams& params) {
  auto word = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | h[off + i];
    return v;
  };
  const unsigned __int128 h1 = word(0);
  const unsigned __int128 h2 = word(8);
  std::vector<std::uint64_t> out(params.hashes);
  for (std::uint32_t i = 0; i < params.hashes; ++i) {
    out[i] = static_cast<std::uint64_t>((h1 + i * h2) % params.bits);
  }
  return out;
}

std::vector<std::uint64_t> bloom_positions(const ChainedRecord& record, const BloomParams& params) {
  return bloom_positions(sha256(canonical_encode(record)), params);
}

AccumulatorState bloom_insert(AccumulatorState state, const ChainedRecord& record) {
  auto& f = std::get<BloomFilter>(state.payload);
  for (auto pos : bloom_positions(record, f.params)) f.set(pos);
  return state;
}

bool bloom_contains(const BloomFilter& filter, const ChainedRecord& record) {
  for (auto pos : bloom_positions(record, filter.params)) {
    if (!filter.test(pos)) return false;
  }
  return true;
}

bool bloom_contains(const AccumulatorState& state, const ChainedRecord& record) {
  return bloom_contains(state.bloom(), record);
}

// --- RSA ------------------------------------------------------------------

mpz_class exponent_of(const ChainedRecord& record) {
  const Digest h = sha256(canonical_encode(record));
  mpz_class e = bigint_from_bytes(h);
  mpz_setbit(e.get_mpz_t(), 0);
  if (e < 3) e = 3;
  return e;
}

mpz_class fold_exponent(const mpz_class& value, const mpz_class& exponent, const RsaParams& params) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), value.get_mpz_t(), exponent.get_mpz_t(), params.modulus.get_mpz_t());
  return out;
}

AccumulatorState rsa_fold(AccumulatorState state, const ChainedRecord& record) {
  auto& a = std::get<RsaAccumulator>(state.payload);
  a.value = fold_exponent(a.value, exponent_of(record), a.params);
  return state;
}

namespace {

void root_factor(const mpz_class& base, std::span<const mpz_class> exponents, std::size_t offset,
                 const RsaParams& params, std::vector<MembershipWitness>& out) {
  if (exponents.size() == 1) {
    out[offset] = MembershipWitness{offset, base};
    return;
  }
  const std::size_t mid = exponents.size() / 2;
  auto left = exponents.first(mid);
  auto right = exponents.subspan(mid);
  mpz_class for_left = base;
  for (const auto& e : right) for_left = fold_exponent(for_left, e, params);
  mpz_class for_right = base;
  for (const auto& e : left) for_right = fold_exponent(for_right, e, params);
  root_factor(for_left, left, offset, params, out);
  root_factor(for_right, right, offset + mid, params, out);
}

}  // namespace

std::vector<MembershipWitness> rsa_witnesses_for_exponents(std::span<const mpz_class> exponents,
                                                           const RsaParams& params) {
  std::vector<MembershipWitness> out(exponents.size());
  if (!exponents.empty()) root_factor(params.seed, exponents, 0, params, out);
  return out;
}

std::vector<MembershipWitness> rsa_witnesses(std::span<const ChainedRecord> records, const RsaParams& params) {
  std::vector<mpz_class> exponents;
  exponents.reserve(records.size());
  for (const auto& r : records) exponents.push_back(exponent_of(r));
  return rsa_witnesses_for_exponents(exponents, params);
}

bool rsa_verify_membership(const ChainedRecord& record, const MembershipWitness& witness,
                           const mpz_class& final_value, const RsaParams& params) {
  if (params.modulus < 3 || witness.value < 1 || witness.value >= params.modulus) return false;
  return fold_exponent(witness.value, exponent_of(record), params) == final_value;
}

AccumulatorState accumulate(AccumulatorState state, const ChainedRecord& record) {
  state = state.backend() == Backend::kBloom ? bloom_insert(std::move(state), record)
                                             : rsa_fold(std::move(state), record);
  state.record_count += 1;
  state.head = record.chain;
  return state;
}

}  // namespace seclaas
