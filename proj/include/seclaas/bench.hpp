#pragma once

// Desk-scale timing of the three costs that matter operationally: appending
// a day's records, sealing it, and verifying one record of it.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "seclaas/accumulator.hpp"
#include "seclaas/crypto.hpp"

namespace seclaas {

struct BenchRow {
  Backend backend = Backend::kBloom;
  std::size_t records = 0;
  double insert_seconds = 0;              // whole day, through the logger
  double seal_seconds = 0;
  double verify_seconds_per_record = 0;   // membership + chain step
  std::size_t proof_bytes = 0;            // encoded sealed state
  std::size_t witness_bytes = 0;          // all witnesses, minimal big-endian
};

struct BenchOptions {
  std::filesystem::path work_dir;  // scratch; one data root per run
  std::size_t repeats = 1;         // minimum over repeats is reported
  std::uint64_t seed = 1;
};

/// One row per size. `config` is shared across sizes so that the Bloom
/// filter dimension stays fixed while the day grows.
std::vector<BenchRow> run_bench(const AccumulatorConfig& config, std::span<const std::size_t> sizes,
                                const KeyMaterial& keys, const BenchOptions& options);

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows);

}  // namespace seclaas
