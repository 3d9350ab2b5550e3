#include "seclaas/adversary.hpp"

#include <algorithm>
#include <random>

#include "seclaas/encoding.hpp"
#include "seclaas/errors.hpp"
#include "seclaas/hash.hpp"
#include "seclaas/pipeline.hpp"

namespace seclaas {

namespace {

constexpr std::pair<Attack, std::string_view> kAttackNames[] = {
    {Attack::kRemoveEntry, "remove-entry"},
    {Attack::kReorderEntries, "reorder-entries"},
    {Attack::kPlantFakeEntry, "plant-fake-entry"},
    {Attack::kRewriteChainAfterReorder, "rewrite-chain-after-reorder"},
    {Attack::kSubstituteFakePPL, "substitute-fake-ppl"},
    {Attack::kWrongKeyPPL, "wrong-key-ppl"},
    {Attack::kCiphertextInspection, "ciphertext-inspection"},
};

void replace_feed_entry(std::vector<ProofOfPastLog>& feed, const ProofOfPastLog& replacement) {
  for (auto& p : feed) {
    if (p.key() == replacement.key()) p = replacement;
  }
}

Timestamp forged_time(const FixtureDay& day, std::mt19937_64& rng) {
  const auto& recs = day.presentation.records;
  Timestamp base = recs.empty() ? Timestamp{day.presentation.key.day} : recs.back().ele.timestamp;
  return base + Microseconds{static_cast<long long>(rng() % 1'000'000)};
}

bool contains(const Bytes& hay, std::span<const std::uint8_t> needle) {
  if (needle.empty()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

std::string_view attack_name(Attack a) {
  for (const auto& [attack, name] : kAttackNames) {
    if (attack == a) return name;
  }
  return "unknown";
}

std::string_view attack_properties(Attack a) {
  switch (a) {
    case Attack::kRemoveEntry: return "I1,I4";
    case Attack::kReorderEntries: return "I2,I5";
    case Attack::kPlantFakeEntry: return "I3,I6";
    case Attack::kRewriteChainAfterReorder: return "I2,I5";
    case Attack::kSubstituteFakePPL: return "I7";
    case Attack::kWrongKeyPPL: return "I7";
    case Attack::kCiphertextInspection: return "C1,C2";
  }
  return "";
}

std::vector<Attack> all_attacks() {
  std::vector<Attack> out;
  for (const auto& [attack, _] : kAttackNames) out.push_back(attack);
  return out;
}

std::optional<Attack> parse_attack(std::string_view name) {
  for (const auto& [attack, n] : kAttackNames) {
    if (n == name) return attack;
  }
  return std::nullopt;
}

std::vector<LogEntry> synthetic_entries(Ipv4 ip, Day day, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LogEntry> out;
  out.reserve(count);
  // Spread over the day with strictly increasing timestamps.
  const long long step = count == 0 ? 0 : 86'000'000'000LL / static_cast<long long>(count + 1);
  for (std::size_t i = 0; i < count; ++i) {
    LogEntry e;
    e.from_ip = ip;
    e.to_ip = Ipv4{static_cast<std::uint32_t>(rng())};
    e.timestamp = Timestamp{day} + Microseconds{step * static_cast<long long>(i + 1) +
                                                static_cast<long long>(rng() % 1000)};
    e.port = static_cast<std::uint16_t>(rng());
    e.user_id = "tenant-" + std::to_string(rng() % 97);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<FixtureDay> build_fixture_days(const std::filesystem::path& work_dir, const AccumulatorConfig& config,
                                           const KeyMaterial& keys, std::span<const FixtureSpec> specs) {
  LoggerOptions options;
  options.data_root = work_dir;
  options.accumulator = config;
  options.durable = false;
  Logger logger(options, keys.agency_public, keys.provider_signing);
  LogStore logs(DataRoot(work_dir), std::make_shared<FileIo>(false));
  std::vector<FixtureDay> out;
  for (const auto& spec : specs) {
    const ChainKey key{spec.ip, spec.day};
    FixtureDay day;
    day.backend = backend_of(config);
    day.plaintext = synthetic_entries(spec.ip, spec.day, spec.records, spec.seed);
    for (const auto& e : day.plaintext) logger.append(e);
    logger.seal_day(key);
    InvestigatorBundle bundle = export_bundle(DataRoot(work_dir), key);
    day.presentation = std::move(bundle.presentation);
    day.stored_segment = read_file_bytes(DataRoot(work_dir).segment_path(key));
    out.push_back(std::move(day));
  }
  FeedStore feed(DataRoot(work_dir), std::make_shared<FileIo>(false));
  const auto published = feed.read_feed().entries;
  for (auto& d : out) d.feed = published;
  return out;
}

ChainedRecord forge_record(const FixtureDay& day, const AgencyPublicKey& agency_key, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LogEntry fake;
  fake.from_ip = day.presentation.key.ip;
  fake.to_ip = Ipv4{static_cast<std::uint32_t>(rng())};
  fake.timestamp = forged_time(day, rng);
  fake.port = static_cast<std::uint16_t>(rng());
  fake.user_id = "framed-user-" + std::to_string(rng() % 1000);
  ChainedRecord rec;
  rec.ele = encrypt_fields(fake, agency_key);
  const auto& recs = day.presentation.records;
  rec.chain = chain_link(rec.ele, recs.empty() ? genesis(day.presentation.key) : recs.back().chain);
  return rec;
}

TamperedCase mutate(Attack attack, const FixtureDay& day, const Adversary& adversary, std::uint64_t seed) {
  TamperedCase out;
  out.presentation = day.presentation;
  out.feed = day.feed;
  auto& recs = out.presentation.records;
  auto& wits = out.presentation.witnesses;
  const bool rsa = day.backend == Backend::kRsaOneWay;
  const std::size_t n = recs.size();

  auto skip = [&](std::string why) {
    out.applicable = false;
    out.notice = std::move(why);
    return out;
  };
  auto erase_at = [&](std::size_t i) {
    recs.erase(recs.begin() + static_cast<std::ptrdiff_t>(i));
    if (i < wits.size()) wits.erase(wits.begin() + static_cast<std::ptrdiff_t>(i));
  };
  auto swap_at = [&](std::size_t i, std::size_t j) {
    std::swap(recs[i], recs[j]);
    if (std::max(i, j) < wits.size()) std::swap(wits[i], wits[j]);
  };

  switch (attack) {
    case Attack::kRemoveEntry: {
      if (n == 0) return skip("empty day has nothing to remove");
      // The middle record when there is one: DBLE0, DBLE2 presented.
      erase_at(n >= 3 ? 1 : 0);
      out.expected = {Reason::kSequenceBroken};
      break;
    }
    case Attack::kReorderEntries: {
      if (n < 2) return skip("reordering needs at least two records");
      if (n >= 3) {
        swap_at(1, 2);  // DBLE0, DBLE2, DBLE1
      } else {
        swap_at(0, 1);
      }
      out.expected = {Reason::kSequenceBroken};
      break;
    }
    case Attack::kRewriteChainAfterReorder: {
      if (n < 2) return skip("reordering needs at least two records");
      const std::size_t from = n >= 3 ? 1 : 0;
      swap_at(from, from + 1);
      Digest prev = from == 0 ? genesis(out.presentation.key) : recs[from - 1].chain;
      for (std::size_t i = from; i < n; ++i) {
        recs[i].chain = chain_link(recs[i].ele, prev);
        prev = recs[i].chain;
      }
      // The rewritten records are no longer the accumulated ones.
      out.expected = rsa ? std::set<Reason>{Reason::kNotMember}
                         : std::set<Reason>{Reason::kNotMember, Reason::kSequenceBroken};
      break;
    }
    case Attack::kPlantFakeEntry: {
      recs.push_back(forge_record(day, adversary.agency_key, seed));
      if (rsa) wits.resize(recs.size());  // no witness exists for the forgery
      out.expected = rsa ? std::set<Reason>{Reason::kWitnessAbsent}
                         : std::set<Reason>{Reason::kNotMember, Reason::kSequenceBroken};
      break;
    }
    case Attack::kSubstituteFakePPL: {
      // A false state that also covers a planted record, published as a
      // self-consistent PPL under a key that is not the provider's.
      ChainedRecord fake = forge_record(day, adversary.agency_key, seed);
      out.presentation.claimed_state = accumulate(out.presentation.claimed_state, fake);
      recs.push_back(fake);
      if (rsa) {
        wits.clear();
        for (const auto& w : rsa_witnesses(recs, out.presentation.claimed_state.rsa().params)) wits.emplace_back(w);
      }
      const auto* original = [&]() -> const ProofOfPastLog* {
        for (const auto& p : day.feed) {
          if (p.key() == day.presentation.key) return &p;
        }
        return nullptr;
      }();
      if (!original) return skip("day is not published");
      replace_feed_entry(out.feed,
                         make_ppl(out.presentation.claimed_state, adversary.attacker_key, original->published_at));
      out.expected = {Reason::kBadSignature};
      break;
    }
    case Attack::kWrongKeyPPL: {
      ProofOfPastLog forged;
      bool found = false;
      for (const auto& p : day.feed) {
        if (p.key() == day.presentation.key) {
          forged = make_ppl(day.presentation.claimed_state, adversary.attacker_key, p.published_at);
          found = true;
        }
      }
      if (!found) return skip("day is not published");
      replace_feed_entry(out.feed, forged);
      out.expected = {Reason::kBadSignature};
      break;
    }
    case Attack::kCiphertextInspection:
      return skip("inspection is not a presentation mutation");
  }
  return out;
}

std::vector<LeakFinding> inspect_for_leaks(const FixtureDay& day) {
  std::vector<LeakFinding> found;
  const Bytes proof = canonical_encode(day.presentation.claimed_state);
  Bytes records;
  for (const auto& r : day.presentation.records) {
    const auto& ct = r.ele.ciphertext;
    records.insert(records.end(), ct.begin(), ct.end());
  }
  const std::pair<const char*, const Bytes*> targets[] = {
      {"stored segment", &day.stored_segment}, {"record ciphertexts", &records}, {"sealed proof", &proof}};
  for (const auto& e : day.plaintext) {
    const std::string to_text = e.to_ip.to_string();
    // A bare 4-byte address turns up by chance in a large segment; pairing it
    // with the port as plaintext lays them out keeps false hits negligible.
    ByteWriter raw;
    raw.ip(e.to_ip);
    raw.u16(e.port);
    const Bytes to_raw = std::move(raw).take();
    for (const auto& [where, hay] : targets) {
      if (contains(*hay, as_bytes(to_text))) found.push_back({where, to_text});
      if (contains(*hay, to_raw)) found.push_back({where, "raw " + to_text});
      if (contains(*hay, as_bytes(e.user_id))) found.push_back({where, e.user_id});
    }
  }
  return found;
}

double planted_acceptance_rate(const FixtureDay& day, const AgencyPublicKey& agency_key, std::size_t trials,
                               std::uint64_t seed) {
  if (trials == 0) return 0.0;
  std::mt19937_64 rng(seed);
  const auto& pres = day.presentation;
  std::size_t accepted = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    ChainedRecord fake = forge_record(day, agency_key, rng());
    std::optional<MembershipWitness> witness;
    if (day.backend == Backend::kRsaOneWay && !pres.witnesses.empty()) {
      witness = pres.witnesses[rng() % pres.witnesses.size()];
    }
    if (verify_membership(fake, pres.claimed_state, witness) == Reason::kAccepted) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(trials);
}

nlohmann::json MatrixReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  std::size_t failures = 0;
  for (const auto& r : rows) {
    failures += !r.pass;
    rows_json.push_back({{"backend", std::string(backend_name(r.backend))},
                         {"fixture", r.fixture},
                         {"outcome", r.outcome},
                         {"pass", r.pass},
                         {"properties", r.properties},
                         {"reason", r.reason},
                         {"scenario", r.scenario}});
  }
  return {{"failures", failures}, {"passed", passed}, {"rows", std::move(rows_json)}, {"total", rows.size()}};
}

MatrixReport run_matrix(std::span<const FixtureDay> fixtures, std::span<const Attack> attacks,
                        const Adversary& adversary, const ProviderVerifyingKey& provider_key, std::uint64_t seed) {
  MatrixReport report;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto& day = fixtures[f];
    {
      MatrixRow row{f, day.backend, "honest", "control", "", "", false};
      auto audit = audit_day(day.presentation, day.feed, provider_key);
      row.outcome = audit.accepted ? "accepted" : "rejected";
      row.reason = std::string(reason_code(audit.reason));
      row.pass = audit.accepted;
      report.rows.push_back(row);
    }
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      const Attack attack = attacks[a];
      MatrixRow row{f, day.backend, std::string(attack_name(attack)), std::string(attack_properties(attack)), "", "",
                    false};
      if (attack == Attack::kCiphertextInspection) {
        auto leaks = inspect_for_leaks(day);
        row.outcome = leaks.empty() ? "no-leak" : "leak";
        row.reason = leaks.empty() ? "" : leaks.front().where + ": " + leaks.front().needle;
        row.pass = leaks.empty();
        report.rows.push_back(row);
        continue;
      }
      auto tampered = mutate(attack, day, adversary, seed ^ (f * 1000003u + a));
      if (!tampered.applicable) {
        row.outcome = "skipped";
        row.reason = tampered.notice;
        row.pass = true;
        report.rows.push_back(row);
        continue;
      }
      auto audit = audit_day(tampered.presentation, tampered.feed, provider_key);
      row.outcome = audit.accepted ? "accepted" : "rejected";
      row.reason = std::string(reason_code(audit.reason));
      row.pass = !audit.accepted && tampered.expected.contains(audit.reason);
      report.rows.push_back(row);
    }
  }
  report.passed = std::all_of(report.rows.begin(), report.rows.end(), [](const MatrixRow& r) { return r.pass; });
  return report;
}

}  // namespace seclaas
