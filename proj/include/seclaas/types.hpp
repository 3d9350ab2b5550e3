#pragma once

// Domain values shared by every module. All of them are plain immutable
// values; none holds a resource.

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seclaas {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kDigestSize = 32;
using Digest = std::array<std::uint8_t, kDigestSize>;

using Microseconds = std::chrono::microseconds;
/// UTC instant with microsecond precision.
using Timestamp = std::chrono::sys_time<Microseconds>;
/// UTC calendar date; day boundaries fall at UTC midnight.
using Day = std::chrono::sys_days;

class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

  /// Strict dotted-quad parse: four decimal octets, no leading zeros, no whitespace.
  static std::optional<Ipv4> parse(std::string_view text);

  constexpr std::uint32_t value() const noexcept { return value_; }
  std::string to_string() const;

  friend constexpr auto operator<=>(const Ipv4&, const Ipv4&) = default;

 private:
  std::uint32_t value_ = 0;
};

/// One parsed network event.
struct LogEntry {
  Ipv4 from_ip;
  Ipv4 to_ip;
  Timestamp timestamp{};
  std::uint16_t port = 0;
  std::string user_id;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

/// The confidential triple hidden inside an EncryptedLogEntry.
struct SealedFields {
  Ipv4 to_ip;
  std::uint16_t port = 0;
  std::string user_id;

  friend bool operator==(const SealedFields&, const SealedFields&) = default;
};

/// A LogEntry with (to_ip, port, user_id) encrypted for the agencies.
struct EncryptedLogEntry {
  Bytes ciphertext;
  Ipv4 from_ip;
  Timestamp timestamp{};

  friend bool operator==(const EncryptedLogEntry&, const EncryptedLogEntry&) = default;
};

/// The persisted unit: encrypted entry plus its hash-chain link.
struct ChainedRecord {
  EncryptedLogEntry ele;
  Digest chain{};

  friend bool operator==(const ChainedRecord&, const ChainedRecord&) = default;
};

/// Identifies one accumulator / hash chain: a static IP on a UTC day.
struct ChainKey {
  Ipv4 ip;
  Day day{};

  friend auto operator<=>(const ChainKey&, const ChainKey&) = default;
};

/// Signed, timestamped daily seal over a chain's final accumulator state.
struct ProofOfPastLog {
  Ipv4 ip;
  Day day{};
  Digest ae_digest{};
  Bytes signature;
  Timestamp published_at{};

  ChainKey key() const { return {ip, day}; }
  friend bool operator==(const ProofOfPastLog&, const ProofOfPastLog&) = default;
};

Day day_of(Timestamp t);

/// RFC 3339 with microseconds and a `Z` suffix, e.g. 2013-11-19T13:43:43.222391Z.
std::string format_rfc3339(Timestamp t);
/// Accepts `Z` or a numeric offset and 0-9 fractional digits (truncated to microseconds).
std::optional<Timestamp> parse_rfc3339(std::string_view text);

/// YYYY-MM-DD
std::string format_day(Day d);
std::optional<Day> parse_day(std::string_view text);

std::string to_hex(const std::uint8_t* data, std::size_t size);
template <typename Container>
std::string to_hex(const Container& c) {
  return to_hex(c.data(), c.size());
}
std::optional<Bytes> from_hex(std::string_view hex);
std::optional<Digest> digest_from_hex(std::string_view hex);

std::string to_base64(const Bytes& data);
std::optional<Bytes> from_base64(std::string_view text);

}  // namespace seclaas
