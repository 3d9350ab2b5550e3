#pragma once

// Snort alert-header parsing and floating/fixed IP -> user resolution.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seclaas/types.hpp"

namespace seclaas {

inline constexpr std::string_view kUnknownUser = "unknown";

/// The fields carried by one Snort event header line. Snort omits the
/// year, so it is supplied by the caller.
struct SnortEvent {
  Timestamp timestamp{};
  Ipv4 src_ip;
  std::optional<std::uint16_t> src_port;
  Ipv4 dst_ip;
  std::optional<std::uint16_t> dst_port;

  friend bool operator==(const SnortEvent&, const SnortEvent&) = default;
};

enum class LineClass { kEvent, kContinuation, kBlank };

/// Event headers start with "MM/DD-"; anything else non-blank (TTL/flag
/// lines, "[**]" banners) is a continuation line and is skipped.
LineClass classify_snort_line(std::string_view line);

/// Parses "MM/DD-HH:MM:SS[.ffffff] ... SRC[:PORT] -> DST[:PORT] ...".
/// Throws ParseError carrying the line text, `line_no` and the 1-based column.
SnortEvent parse_snort_line(std::string_view line, int year, std::size_t line_no = 0);

/// Renders the canonical header "MM/DD-HH:MM:SS.ffffff SRC:PORT -> DST:PORT".
std::string format_snort_line(const SnortEvent& event);

struct IpUserMapping {
  Ipv4 floating_ip;
  Ipv4 fixed_ip;
  std::string instance_id;
  std::string user_id;
  Timestamp valid_from{};  // inclusive
  Timestamp valid_to{};    // exclusive

  friend bool operator==(const IpUserMapping&, const IpUserMapping&) = default;
};

struct Resolution {
  Ipv4 fixed_ip;
  std::string instance_id;
  std::string user_id;
};

/// Read-only lease table. Construction rejects empty/negative windows and
/// overlapping leases of one floating IP (or one fixed IP held by two users).
class MappingStore {
 public:
  MappingStore() = default;
  explicit MappingStore(std::vector<IpUserMapping> mappings);

  /// Tab-separated columns: floating_ip fixed_ip instance_id user_id valid_from valid_to.
  /// Blank lines, '#' comments and a header row starting with "floating_ip" are skipped.
  static MappingStore parse(std::string_view text);
  static MappingStore load(const std::filesystem::path& path);

  /// Matches `ip` against floating and fixed addresses at instant `at`.
  std::optional<Resolution> lookup(Ipv4 ip, Timestamp at) const;

  const std::vector<IpUserMapping>& mappings() const noexcept { return mappings_; }

 private:
  std::vector<IpUserMapping> mappings_;
};

/// Throws UnresolvedUserError when no lease covers (ip, at).
std::string resolve_user(Ipv4 ip, Timestamp at, const MappingStore& mappings);

struct ResolvedEntry {
  LogEntry entry;
  bool user_resolved = false;
};

/// Builds the LogEntry for an event: a floating source address is replaced
/// by its fixed address, and an unresolvable user becomes "unknown".
ResolvedEntry to_log_entry(const SnortEvent& event, const MappingStore& mappings);

}  // namespace seclaas
