#include <gtest/gtest.h>

#include <random>

#include "seclaas/adversary.hpp"
#include "seclaas/pipeline.hpp"
#include "seclaas/verifier.hpp"
#include "support.hpp"

using namespace seclaas;
using seclaas::testing::make_day;
using seclaas::testing::random_chain;
using seclaas::testing::shared_keys;
using seclaas::testing::TempDir;

namespace {

const ChainKey kKey{*Ipv4::parse("11.1.0.5"), make_day(2013, 11, 19)};

struct SealedDay {
  AuditPresentation presentation;
  std::vector<ProofOfPastLog> feed;
};

// Builds a sealed day without touching disk.
SealedDay seal_in_memory(const AccumulatorConfig& config, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SealedDay d;
  d.presentation.key = kKey;
  d.presentation.records = random_chain(rng, kKey, n);
  AccumulatorState s = empty_state(config, kKey);
  for (const auto& r : d.presentation.records) s = accumulate(std::move(s), r);
  if (s.backend() == Backend::kRsaOneWay) {
    for (const auto& w : rsa_witnesses(d.presentation.records, s.rsa().params)) d.presentation.witnesses.emplace_back(w);
  }
  d.presentation.claimed_state = s;
  d.feed.push_back(make_ppl(s, shared_keys().provider_signing, Timestamp{kKey.day + std::chrono::days{1}}));
  return d;
}

}  // namespace

TEST(Reason, CodesRoundTrip) {
  for (Reason r : {Reason::kAccepted, Reason::kUnpublishedDay, Reason::kWrongChain, Reason::kDigestMismatch,
                   Reason::kBadSignature, Reason::kWitnessAbsent, Reason::kNotMember, Reason::kSequenceBroken,
                   Reason::kNotEvaluated}) {
    EXPECT_EQ(parse_reason(reason_code(r)), r);
  }
  EXPECT_FALSE(parse_reason("nope"));
}

TEST(VerifyPpl, DigestCheckedBeforeSignature) {
  const auto d = seal_in_memory(derive_bloom_params(100, 0.01), 5, 1);
  const auto& key = shared_keys().provider_verifying;
  EXPECT_TRUE(verify_ppl(d.feed[0], d.presentation.claimed_state, key).ok);

  // A false state presented against the genuine PPL.
  std::mt19937_64 rng(2);
  AccumulatorState fake = accumulate(d.presentation.claimed_state,
                                     seclaas::testing::random_record(rng, kKey.ip, Timestamp{kKey.day}, Digest{}));
  EXPECT_EQ(verify_ppl(d.feed[0], fake, key).reason, Reason::kDigestMismatch);

  // A self-consistent PPL signed by someone else.
  auto forged = make_ppl(fake, ProviderSigningKey::generate(), d.feed[0].published_at);
  EXPECT_EQ(verify_ppl(forged, fake, key).reason, Reason::kBadSignature);

  auto bad_sig = d.feed[0];
  bad_sig.signature[10] ^= 1;
  EXPECT_EQ(verify_ppl(bad_sig, d.presentation.claimed_state, key).reason, Reason::kBadSignature);
}

TEST(VerifySequence, ReportsFirstViolation) {
  std::mt19937_64 rng(3);
  auto recs = random_chain(rng, kKey, 6);
  EXPECT_TRUE(verify_sequence(recs, kKey).ok);
  auto removed = recs;
  removed.erase(removed.begin() + 1);
  EXPECT_EQ(verify_sequence(removed, kKey).first_violation, 1u);
  auto swapped = recs;
  std::swap(swapped[1], swapped[2]);
  EXPECT_EQ(verify_sequence(swapped, kKey).first_violation, 1u);
  EXPECT_EQ(verify_sequence(recs, ChainKey{kKey.ip, kKey.day + std::chrono::days{1}}).first_violation, 0u);
}

TEST(VerifySequence, TipCatchesTailDeletion) {
  std::mt19937_64 rng(4);
  auto recs = random_chain(rng, kKey, 6);
  const Digest head = recs.back().chain;
  EXPECT_TRUE(verify_sequence(recs, kKey, 6, head).ok);
  std::vector<ChainedRecord> prefix(recs.begin(), recs.begin() + 4);
  EXPECT_TRUE(verify_sequence(prefix, kKey).ok);  // a prefix alone looks intact
  EXPECT_EQ(verify_sequence(prefix, kKey, 6, head).first_violation, 4u);
  EXPECT_EQ(verify_sequence({}, kKey, 0, genesis(kKey)).ok, true);
  EXPECT_EQ(verify_sequence({}, kKey, 6, head).first_violation, 0u);
}

TEST(AuditDay, HonestBothBackends) {
  for (const AccumulatorConfig& config : {AccumulatorConfig{derive_bloom_params(100, 0.01)},
                                          AccumulatorConfig{generate_rsa_params(64, 1)}}) {
    for (std::size_t n : {0u, 1u, 2u, 17u}) {
      const auto d = seal_in_memory(config, n, n + 10);
      const auto r = audit_day(d.presentation, d.feed, shared_keys().provider_verifying);
      EXPECT_TRUE(r.accepted) << format_report(r);
      EXPECT_EQ(r.reason, Reason::kAccepted);
    }
  }
}

TEST(AuditDay, GateOrder) {
  const auto d = seal_in_memory(generate_rsa_params(64, 2), 4, 5);
  const auto& key = shared_keys().provider_verifying;
  EXPECT_EQ(audit_day(d.presentation, {}, key).reason, Reason::kUnpublishedDay);

  auto wrong = d.presentation;
  wrong.key.day += std::chrono::days{1};
  auto shifted_feed = d.feed;
  shifted_feed[0].day = wrong.key.day;
  EXPECT_EQ(audit_day(wrong, shifted_feed, key).reason, Reason::kWrongChain);

  auto missing_witness = d.presentation;
  missing_witness.witnesses[2].reset();
  const auto r = audit_day(missing_witness, d.feed, key);
  EXPECT_EQ(r.reason, Reason::kWitnessAbsent);
  EXPECT_EQ(r.membership[2], Reason::kWitnessAbsent);
  EXPECT_TRUE(r.sequence.ok);
}

TEST(AuditDay, JsonShape) {
  const auto d = seal_in_memory(derive_bloom_params(100, 0.01), 3, 6);
  const auto j = to_json(audit_day(d.presentation, d.feed, shared_keys().provider_verifying));
  EXPECT_EQ(j.at("accepted"), true);
  EXPECT_EQ(j.at("reason"), "accepted");
  EXPECT_EQ(j.at("ip"), "11.1.0.5");
  EXPECT_EQ(j.at("day"), "2013-11-19");
  EXPECT_EQ(j.at("members_verified"), 3);
  EXPECT_EQ(j.at("sequence").at("ok"), true);
}

TEST(Bundle, JsonRoundTripBothBackends) {
  for (const AccumulatorConfig& config : {AccumulatorConfig{derive_bloom_params(100, 0.01)},
                                          AccumulatorConfig{generate_rsa_params(64, 3)}}) {
    const auto d = seal_in_memory(config, 5, 7);
    InvestigatorBundle b{d.presentation, d.feed[0]};
    const auto back = bundle_from_json(nlohmann::json::parse(to_json(b).dump()));
    EXPECT_EQ(back.presentation.key, b.presentation.key);
    EXPECT_EQ(back.presentation.claimed_state, b.presentation.claimed_state);
    EXPECT_EQ(back.presentation.records, b.presentation.records);
    EXPECT_EQ(back.ppl, b.ppl);
    const auto r = audit_day(back.presentation, d.feed, shared_keys().provider_verifying);
    EXPECT_TRUE(r.accepted) << format_report(r);
  }
}
