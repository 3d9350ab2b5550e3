#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "seclaas/accumulator.hpp"
#include "seclaas/encoding.hpp"
#include "seclaas/errors.hpp"
#include "support.hpp"

using namespace seclaas;
using seclaas::testing::make_day;
using seclaas::testing::random_chain;

namespace {

const ChainKey kKey{*Ipv4::parse("11.1.0.5"), make_day(2013, 11, 19)};

// Straight from the sizing formulas, in long double.
std::pair<std::uint64_t, std::uint32_t> bloom_oracle(std::uint64_t n, long double p) {
  const long double ln2 = std::log(2.0L);
  const auto m = static_cast<std::uint64_t>(std::ceil(-static_cast<long double>(n) * std::log(p) / (ln2 * ln2)));
  const auto k = static_cast<std::uint32_t>(std::max<long double>(1, std::round(m / static_cast<long double>(n) * ln2)));
  return {m, k};
}

}  // namespace

TEST(BloomParams, MatchesSizingFormula) {
  EXPECT_EQ(derive_bloom_params(5000, 0.01).bits, 47926u);
  EXPECT_EQ(derive_bloom_params(5000, 0.01).hashes, 7u);
  EXPECT_EQ(derive_bloom_params(10000, 0.01).bits, 95851u);
  EXPECT_EQ(derive_bloom_params(10000, 0.01).hashes, 7u);
  EXPECT_EQ(derive_bloom_params(10000, 0.02).bits, 81424u);
  EXPECT_EQ(derive_bloom_params(10000, 0.02).hashes, 6u);
  EXPECT_EQ(derive_bloom_params(1, 0.5).bits, 2u);
  EXPECT_EQ(derive_bloom_params(1, 0.5).hashes, 1u);
  for (std::uint64_t n : {1u, 7u, 100u, 1234u, 50000u}) {
    for (double p : {0.5, 0.1, 0.01, 0.001}) {
      auto [m, k] = bloom_oracle(n, p);
      auto got = derive_bloom_params(n, p);
      EXPECT_EQ(got.bits, m) << n << " " << p;
      EXPECT_EQ(got.hashes, k) << n << " " << p;
    }
  }
}

TEST(BloomParams, RejectsOutOfRange) {
  EXPECT_THROW(derive_bloom_params(0, 0.01), ParamError);
  EXPECT_THROW(derive_bloom_params(10, 0.0), ParamError);
  EXPECT_THROW(derive_bloom_params(10, 1.0), ParamError);
  EXPECT_THROW(derive_bloom_params(10, -0.1), ParamError);
}

// Probe positions for the golden record, computed independently in Python.
TEST(Bloom, ProbePositionsGolden) {
  Digest h = *digest_from_hex("1ac644554e1abbc0a6fbe884707798e80aa4cb952ca4b08ba11901ad97e60e1a");
  const auto pos = bloom_positions(h, derive_bloom_params(5000, 0.01));
  EXPECT_EQ(pos, (std::vector<std::uint64_t>{45580, 12974, 28294, 43614, 11008, 26328, 41648}));
}

TEST(Bloom, NoFalseNegativesAndStateRoundTrip) {
  std::mt19937_64 rng(21);
  const auto params = derive_bloom_params(500, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    const auto recs = random_chain(rng, kKey, rng() % 500);
    AccumulatorState s = empty_state(params, kKey);
    for (const auto& r : recs) s = accumulate(std::move(s), r);
    EXPECT_EQ(s.record_count, recs.size());
    EXPECT_EQ(s.head, recs.empty() ? genesis(kKey) : recs.back().chain);
    for (const auto& r : recs) ASSERT_TRUE(bloom_contains(s, r));
    EXPECT_EQ(decode_accumulator_state(canonical_encode(s)), s);
  }
}

TEST(Bloom, EmptyFilterIsAllZero) {
  const auto s = empty_state(derive_bloom_params(100, 0.01), kKey);
  EXPECT_EQ(s.bloom().popcount(), 0u);
  EXPECT_EQ(s.bloom().bits.size(), (s.bloom().params.bits + 7) / 8);
}

TEST(Rsa, ToyOracle) {
  const RsaParams params = make_rsa_params(253, 2);
  const std::vector<mpz_class> exps{3, 5};
  mpz_class v = params.seed;
  for (const auto& e : exps) v = fold_exponent(v, e, params);
  EXPECT_EQ(v, 131);
  const auto w = rsa_witnesses_for_exponents(exps, params);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].value, 32);
  EXPECT_EQ(w[1].value, 8);
  EXPECT_EQ(fold_exponent(w[0].value, 3, params), 131);
  EXPECT_EQ(fold_exponent(w[1].value, 5, params), 131);
}

TEST(Rsa, ParamValidation) {
  EXPECT_THROW(make_rsa_params(253, 1), ParamError);
  EXPECT_THROW(make_rsa_params(253, 253), ParamError);
  EXPECT_THROW(make_rsa_params(253, 11), ParamError);  // shares a factor with N
  EXPECT_THROW(generate_rsa_params(4, 1), ParamError);
  const auto p = generate_rsa_params(32, 99);
  EXPECT_EQ(p, generate_rsa_params(32, 99));
  EXPECT_GE(mpz_sizeinbase(p.modulus.get_mpz_t(), 2), 63u);
}

TEST(Rsa, ExponentIsOddAndAtLeastThree) {
  std::mt19937_64 rng(3);
  for (const auto& r : random_chain(rng, kKey, 200)) {
    const mpz_class e = exponent_of(r);
    EXPECT_TRUE(mpz_odd_p(e.get_mpz_t()));
    EXPECT_GE(e, 3);
  }
}

TEST(Rsa, WitnessesMatchNaiveProduct) {
  std::mt19937_64 rng(4);
  const auto params = generate_rsa_params(64, 5);
  for (std::size_t n : {1u, 2u, 3u, 7u, 16u, 33u}) {
    const auto recs = random_chain(rng, kKey, n);
    const auto fast = rsa_witnesses(recs, params);
    ASSERT_EQ(fast.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      mpz_class naive = params.seed;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) naive = fold_exponent(naive, exponent_of(recs[j]), params);
      }
      EXPECT_EQ(fast[i].value, naive) << n << " " << i;
      EXPECT_EQ(fast[i].record_index, i);
    }
  }
}

TEST(Rsa, QuasiCommutativeOverPermutations) {
  std::mt19937_64 rng(9);
  const auto params = generate_rsa_params(64, 6);
  for (std::size_t n = 1; n <= 6; ++n) {
    auto recs = random_chain(rng, kKey, n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::optional<mpz_class> first;
    do {
      mpz_class v = params.seed;
      for (auto i : order) v = fold_exponent(v, exponent_of(recs[i]), params);
      if (!first) first = v;
      ASSERT_EQ(v, *first);
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST(Rsa, VerifyRejectsOutOfRangeWitness) {
  std::mt19937_64 rng(10);
  const auto params = generate_rsa_params(64, 7);
  const auto recs = random_chain(rng, kKey, 3);
  AccumulatorState s = empty_state(params, kKey);
  for (const auto& r : recs) s = accumulate(std::move(s), r);
  const auto w = rsa_witnesses(recs, params);
  EXPECT_TRUE(rsa_verify_membership(recs[1], w[1], s.rsa().value, params));
  EXPECT_FALSE(rsa_verify_membership(recs[1], w[0], s.rsa().value, params));
  EXPECT_FALSE(rsa_verify_membership(recs[1], {1, 0}, s.rsa().value, params));
  EXPECT_FALSE(rsa_verify_membership(recs[1], {1, w[1].value + params.modulus}, s.rsa().value, params));
  EXPECT_EQ(decode_accumulator_state(canonical_encode(s)), s);
}

TEST(BigInt, BytesRoundTrip) {
  EXPECT_TRUE(bigint_to_bytes(0).empty());
  EXPECT_EQ(bigint_to_bytes(0x0102), (Bytes{0x01, 0x02}));
  const mpz_class big("123456789012345678901234567890");
  EXPECT_EQ(bigint_from_bytes(bigint_to_bytes(big)), big);
}

TEST(AccumulatorState, DecodeRejectsCorruption) {
  std::mt19937_64 rng(12);
  AccumulatorState s = empty_state(derive_bloom_params(64, 0.1), kKey);
  for (const auto& r : random_chain(rng, kKey, 10)) s = accumulate(std::move(s), r);
  const Bytes good = canonical_encode(s);
  EXPECT_THROW(decode_accumulator_state(std::span(good.data(), good.size() - 1)), DecodeError);
  Bytes bad = good;
  bad[0] = 0x7f;
  EXPECT_THROW(decode_accumulator_state(bad), DecodeError);
}
