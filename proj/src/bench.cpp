#include "seclaas/bench.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

#include "seclaas/adversary.hpp"
#include "seclaas/encoding.hpp"
#include "seclaas/hash.hpp"
#include "seclaas/pipeline.hpp"
#include "seclaas/verifier.hpp"

namespace seclaas {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

BenchRow run_once(const AccumulatorConfig& config, std::size_t n, const KeyMaterial& keys,
                  const std::filesystem::path& dir, std::uint64_t seed) {
  std::filesystem::remove_all(dir);
  LoggerOptions opts;
  opts.data_root = dir;
  opts.accumulator = config;
  opts.durable = false;
  Logger logger(opts, keys.agency_public, keys.provider_signing);

  const ChainKey key{*Ipv4::parse("10.0.0.1"), Day{std::chrono::days{16'000}}};
  const auto entries = synthetic_entries(key.ip, key.day, n, seed);

  BenchRow row;
  row.backend = backend_of(config);
  row.records = n;

  auto t0 = Clock::now();
  for (const auto& e : entries) logger.append(e);
  row.insert_seconds = seconds_since(t0);

  t0 = Clock::now();
  logger.seal_day(key);
  row.seal_seconds = seconds_since(t0);

  auto bundle = export_bundle(DataRoot(dir), key);
  const auto& pres = bundle.presentation;
  row.proof_bytes = canonical_encode(pres.claimed_state).size();
  for (const auto& w : pres.witnesses) {
    if (w) row.witness_bytes += bigint_to_bytes(w->value).size();
  }

  // Per-record cost: membership plus one chain step, sampled over the day.
  const std::size_t probes = std::min<std::size_t>(n, 1000);
  const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(probes, 1));
  std::size_t checked = 0;
  std::size_t ok = 0;
  t0 = Clock::now();
  for (std::size_t i = 0; i < n && checked < probes; i += stride, ++checked) {
    std::optional<MembershipWitness> w;
    if (i < pres.witnesses.size()) w = pres.witnesses[i];
    ok += verify_membership(pres.records[i], pres.claimed_state, w) == Reason::kAccepted;
    const Digest prev = i == 0 ? genesis(key) : pres.records[i - 1].chain;
    ok += chain_link(pres.records[i].ele, prev) == pres.records[i].chain;
  }
  row.verify_seconds_per_record = checked == 0 ? 0.0 : seconds_since(t0) / static_cast<double>(checked);
  if (ok != 2 * checked) throw Error("benchmark day failed verification");
  std::filesystem::remove_all(dir);
  return row;
}

}  // namespace

std::vector<BenchRow> run_bench(const AccumulatorConfig& config, std::span<const std::size_t> sizes,
                                const KeyMaterial& keys, const BenchOptions& options) {
  std::vector<BenchRow> rows;
  const std::size_t repeats = std::max<std::size_t>(1, options.repeats);
  for (std::size_t n : sizes) {
    BenchRow best;
    for (std::size_t r = 0; r < repeats; ++r) {
      BenchRow row = run_once(config, n, keys, options.work_dir / ("run-" + std::to_string(n)), options.seed + r);
      if (r == 0) {
        best = row;
      } else {
        best.insert_seconds = std::min(best.insert_seconds, row.insert_seconds);
        best.seal_seconds = std::min(best.seal_seconds, row.seal_seconds);
        best.verify_seconds_per_record = std::min(best.verify_seconds_per_record, row.verify_seconds_per_record);
      }
    }
    rows.push_back(best);
  }
  return rows;
}

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << "backend,records,insert_s,seal_s,verify_per_record_s,proof_bytes,witness_bytes\n";
  for (const auto& r : rows) {
    os << backend_name(r.backend) << ',' << r.records << ',' << r.insert_seconds << ',' << r.seal_seconds << ','
       << r.verify_seconds_per_record << ',' << r.proof_bytes << ',' << r.witness_bytes << '\n';
  }
}

}  // namespace seclaas
