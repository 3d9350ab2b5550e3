#pragma once

// Canonical binary encoding. Integers are big-endian and fixed width,
// variable-length fields carry a u32 length prefix, and every compound value
// starts with a one-byte type tag so encodings of different types never
// collide. Identical values always produce identical bytes.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "seclaas/types.hpp"

namespace seclaas {

enum class TypeTag : std::uint8_t {
  kLogEntry = 0x01,
  kEncryptedLogEntry = 0x02,
  kChainedRecord = 0x03,
  kSealedFields = 0x04,
  kProofOfPastLog = 0x05,
  kBloomState = 0x10,
  kRsaState = 0x11,
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void tag(TypeTag t) { u8(static_cast<std::uint8_t>(t)); }
  void raw(std::span<const std::uint8_t> bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
  void bytes(std::span<const std::uint8_t> bytes);
  void str(std::string_view s);

  void ip(Ipv4 v) { u32(v.value()); }
  void day(Day d) { i32(static_cast<std::int32_t>(d.time_since_epoch().count())); }
  void timestamp(Timestamp t) { i64(t.time_since_epoch().count()); }

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

/// Reads what ByteWriter writes; throws DecodeError on truncation or bad tags.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  void expect(TypeTag t);
  Bytes bytes();
  std::string str();
  std::span<const std::uint8_t> raw(std::size_t n);

  Ipv4 ip() { return Ipv4{u32()}; }
  Day day() { return Day{std::chrono::days{i32()}}; }
  Timestamp timestamp() { return Timestamp{Microseconds{i64()}}; }

  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }
  /// Throws unless every byte was consumed.
  void finish() const;

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Bytes canonical_encode(Ipv4 ip);
Bytes canonical_encode(Day day);
Bytes canonical_encode(const LogEntry& e);
Bytes canonical_encode(const SealedFields& f);
Bytes canonical_encode(const EncryptedLogEntry& ele);
Bytes canonical_encode(const ChainedRecord& rec);
Bytes canonical_encode(const ProofOfPastLog& ppl);

void encode_into(ByteWriter& w, const EncryptedLogEntry& ele);
void encode_into(ByteWriter& w, const ChainedRecord& rec);
EncryptedLogEntry decode_ele_from(ByteReader& r);
ChainedRecord decode_record_from(ByteReader& r);

LogEntry decode_log_entry(std::span<const std::uint8_t> bytes);
SealedFields decode_sealed_fields(std::span<const std::uint8_t> bytes);
EncryptedLogEntry decode_ele(std::span<const std::uint8_t> bytes);
ChainedRecord decode_record(std::span<const std::uint8_t> bytes);
ProofOfPastLog decode_ppl(std::span<const std::uint8_t> bytes);

}  // namespace seclaas
