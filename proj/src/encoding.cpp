#include "seclaas/encoding.hpp"

#include <bit>
#include <cstring>

#include "seclaas/errors.hpp"

namespace seclaas {

void ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bytes(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t n) const {
  if (in_.size() - pos_ < n) {
    throw DecodeError("truncated input: need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return in_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  std::uint16_t v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::expect(TypeTag t) {
  std::size_t at = pos_;
  std::uint8_t got = u8();
  if (got != static_cast<std::uint8_t>(t)) {
    throw DecodeError("unexpected type tag " + std::to_string(got) + " at offset " + std::to_string(at));
  }
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  need(n);
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

Bytes ByteReader::bytes() {
  std::uint32_t n = u32();
  auto s = raw(n);
  return Bytes(s.begin(), s.end());
}

std::string ByteReader::str() {
  std::uint32_t n = u32();
  auto s = raw(n);
  return std::string(s.begin(), s.end());
}

void ByteReader::finish() const {
  if (!done()) throw DecodeError("trailing bytes after offset " + std::to_string(pos_));
}

Bytes canonical_encode(Ipv4 ip) {
  ByteWriter w;
  w.ip(ip);
  return std::move(w).take();
}

Bytes canonical_encode(Day day) {
  ByteWriter w;
  w.day(day);
  return std::move(w).take();
}

Bytes canonical_encode(const LogEntry& e) {
  ByteWriter w;
  w.tag(TypeTag::kLogEntry);
  w.ip(e.from_ip);
  w.ip(e.to_ip);
  w.timestamp(e.timestamp);
  w.u16(e.port);
  w.str(e.user_id);
  return std::move(w).take();
}

Bytes canonical_encode(const SealedFields& f) {
  ByteWriter w;
  w.tag(TypeTag::kSealedFields);
  w.ip(f.to_ip);
  w.u16(f.port);
  w.str(f.user_id);
  return std::move(w).take();
}

void encode_into(ByteWriter& w, const EncryptedLogEntry& ele) {
  w.tag(TypeTag::kEncryptedLogEntry);
  w.bytes(ele.ciphertext);
  w.ip(ele.from_ip);
  w.timestamp(ele.timestamp);
}

void encode_into(ByteWriter& w, const ChainedRecord& rec) {
  w.tag(TypeTag::kChainedRecord);
  encode_into(w, rec.ele);
  w.raw(rec.chain);
}

Bytes canonical_encode(const EncryptedLogEntry& ele) {
  ByteWriter w;
  encode_into(w, ele);
  return std::move(w).take();
}

Bytes canonical_encode(const ChainedRecord& rec) {
  ByteWriter w;
  encode_into(w, rec);
  return std::move(w).take();
}

Bytes canonical_encode(const ProofOfPastLog& ppl) {
  ByteWriter w;
  w.tag(TypeTag::kProofOfPastLog);
  w.ip(ppl.ip);
  w.day(ppl.day);
  w.raw(ppl.ae_digest);
  w.bytes(ppl.signature);
  w.timestamp(ppl.published_at);
  return std::move(w).take();
}

EncryptedLogEntry decode_ele_from(ByteReader& r) {
  r.expect(TypeTag::kEncryptedLogEntry);
  EncryptedLogEntry ele;
  ele.ciphertext = r.bytes();
  ele.from_ip = r.ip();
  ele.timestamp = r.timestamp();
  return ele;
}

ChainedRecord decode_record_from(ByteReader& r) {
  r.expect(TypeTag::kChainedRecord);
  ChainedRecord rec;
  rec.ele = decode_ele_from(r);
  auto chain = r.raw(kDigestSize);
  std::copy(chain.begin(), chain.end(), rec.chain.begin());
  return rec;
}

LogEntry decode_log_entry(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect(TypeTag::kLogEntry);
  LogEntry e;
  e.from_ip = r.ip();
  e.to_ip = r.ip();
  e.timestamp = r.timestamp();
  e.port = r.u16();
  e.user_id = r.str();
  r.finish();
  return e;
}

SealedFields decode_sealed_fields(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect(TypeTag::kSealedFields);
  SealedFields f;
  f.to_ip = r.ip();
  f.port = r.u16();
  f.user_id = r.str();
  r.finish();
  return f;
}

EncryptedLogEntry decode_ele(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto ele = decode_ele_from(r);
  r.finish();
  return ele;
}

ChainedRecord decode_record(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto rec = decode_record_from(r);
  r.finish();
  return rec;
}

ProofOfPastLog decode_ppl(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect(TypeTag::kProofOfPastLog);
  ProofOfPastLog ppl;
  ppl.ip = r.ip();
  ppl.day = r.day();
  auto d = r.raw(kDigestSize);
  std::copy(d.begin(), d.end(), ppl.ae_digest.begin());
  ppl.signature = r.bytes();
  ppl.published_at = r.timestamp();
  r.finish();
  return ppl;
}

}  // namespace seclaas
