#include "seclaas/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "seclaas/crypto.hpp"
#include "seclaas/errors.hpp"

namespace seclaas {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

class LineCursor {
 public:
  LineCursor(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& what, std::size_t pos) const {
    throw ParseError(what, std::string(line_), line_no_, pos + 1);
  }

  int digits(std::size_t& pos, std::size_t width, const char* field) const {
    int v = 0;
    for (std::size_t i = 0; i < width; ++i, ++pos) {
      if (pos >= line_.size() || !is_digit(line_[pos])) fail(std::string("expected digit in ") + field, pos);
      v = v * 10 + (line_[pos] - '0');
    }
    return v;
  }

  void literal(std::size_t& pos, char c) const {
    if (pos >= line_.size() || line_[pos] != c) fail(std::string("expected '") + c + "'", pos);
    ++pos;
  }

  std::string_view line() const { return line_; }

 private:
  std::string_view line_;
  std::size_t line_no_;
};

// Parses "A.B.C.D" or "A.B.C.D:PORT" occupying [begin, end).
void parse_endpoint(const LineCursor& cur, std::size_t begin, std::size_t end, Ipv4& ip,
                    std::optional<std::uint16_t>& port) {
  std::string_view tok = cur.line().substr(begin, end - begin);
  auto colon = tok.find(':');
  auto addr = tok.substr(0, colon);
  auto parsed = Ipv4::parse(addr);
  if (!parsed) cur.fail("invalid IPv4 address '" + std::string(addr) + "'", begin);
  ip = *parsed;
  port.reset();
  if (colon == std::string_view::npos) return;
  auto digits = tok.substr(colon + 1);
  if (digits.empty() || digits.size() > 5 || (digits.size() > 1 && digits[0] == '0')) {
    cur.fail("invalid port", begin + colon + 1);
  }
  unsigned v = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (!is_digit(digits[i])) cur.fail("invalid port", begin + colon + 1 + i);
    v = v * 10 + static_cast<unsigned>(digits[i] - '0');
  }
  if (v > 65535) cur.fail("port out of range", begin + colon + 1);
  port = static_cast<std::uint16_t>(v);
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    out.push_back(trim(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

bool overlaps(const IpUserMapping& a, const IpUserMapping& b) {
  return a.valid_from < b.valid_to && b.valid_from < a.valid_to;
}

}  // namespace

LineClass classify_snort_line(std::string_view line) {
  if (std::all_of(line.begin(), line.end(), is_space)) return LineClass::kBlank;
  if (line.size() >= 6 && is_digit(line[0]) && is_digit(line[1]) && line[2] == '/' && is_digit(line[3]) &&
      is_digit(line[4]) && line[5] == '-') {
    return LineClass::kEvent;
  }
  return LineClass::kContinuation;
}

SnortEvent parse_snort_line(std::string_view line, int year, std::size_t line_no) {
  using namespace std::chrono;
  LineCursor cur(line, line_no);
  std::size_t pos = 0;
  const int mon = cur.digits(pos, 2, "month");
  cur.literal(pos, '/');
  const int mday = cur.digits(pos, 2, "day");
  cur.literal(pos, '-');
  const int hh = cur.digits(pos, 2, "hour");
  cur.literal(pos, ':');
  const int mm = cur.digits(pos, 2, "minute");
  cur.literal(pos, ':');
  const int ss = cur.digits(pos, 2, "second");
  long long micros = 0;
  if (pos < line.size() && line[pos] == '.') {
    ++pos;
    std::size_t start = pos;
    while (pos < line.size() && is_digit(line[pos])) {
      if (pos - start < 6) micros = micros * 10 + (line[pos] - '0');
      ++pos;
    }
    if (pos == start || pos - start > 6) cur.fail("fractional seconds must have 1-6 digits", start);
    for (std::size_t i = pos - start; i < 6; ++i) micros *= 10;
  }
  if (hh > 23 || mm > 59 || ss > 59) cur.fail("time of day out of range", 6);
  year_month_day ymd{std::chrono::year{year}, month{static_cast<unsigned>(mon)}, std::chrono::day{static_cast<unsigned>(mday)}};
  if (!ymd.ok()) cur.fail("invalid calendar date", 0);
  if (pos >= line.size() || !is_space(line[pos])) cur.fail("expected whitespace after timestamp", pos);

  const auto arrow = line.find("->", pos);
  if (arrow == std::string_view::npos) cur.fail("missing '->' between source and destination", line.size());

  // Source: last token before the arrow.
  std::size_t src_end = arrow;
  while (src_end > pos && is_space(line[src_end - 1])) --src_end;
  std::size_t src_begin = src_end;
  while (src_begin > pos && !is_space(line[src_begin - 1])) --src_begin;
  if (src_begin == src_end) cur.fail("missing source address", arrow);

  // Destination: first token after the arrow.
  std::size_t dst_begin = arrow + 2;
  while (dst_begin < line.size() && is_space(line[dst_begin])) ++dst_begin;
  std::size_t dst_end = dst_begin;
  while (dst_end < line.size() && !is_space(line[dst_end])) ++dst_end;
  if (dst_begin == dst_end) cur.fail("missing destination address", dst_begin);

  SnortEvent ev;
  ev.timestamp = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} + Microseconds{micros};
  parse_endpoint(cur, src_begin, src_end, ev.src_ip, ev.src_port);
  parse_endpoint(cur, dst_begin, dst_end, ev.dst_ip, ev.dst_port);
  return ev;
}

std::string format_snort_line(const SnortEvent& ev) {
  using namespace std::chrono;
  const Day d = day_of(ev.timestamp);
  const year_month_day ymd{d};
  auto tod = ev.timestamp - d;
  const auto h = duration_cast<hours>(tod);
  tod -= h;
  const auto mi = duration_cast<minutes>(tod);
  tod -= mi;
  const auto s = duration_cast<seconds>(tod);
  tod -= s;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%02u/%02u-%02d:%02d:%02d.%06lld", static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()), static_cast<int>(mi.count()),
                static_cast<int>(s.count()), static_cast<long long>(tod.count()));
  auto endpoint = [](Ipv4 ip, const std::optional<std::uint16_t>& port) {
    return port ? ip.to_string() + ":" + std::to_string(*port) : ip.to_string();
  };
  return std::string(buf) + " " + endpoint(ev.src_ip, ev.src_port) + " -> " + endpoint(ev.dst_ip, ev.dst_port);
}

MappingStore::MappingStore(std::vector<IpUserMapping> mappings) : mappings_(std::move(mappings)) {
  std::map<std::uint32_t, std::vector<const IpUserMapping*>> by_floating;
  std::map<std::uint32_t, std::vector<const IpUserMapping*>> by_fixed;
  for (const auto& m : mappings_) {
    if (!(m.valid_from < m.valid_to)) {
      throw MappingError("lease for " + m.floating_ip.to_string() + " has valid_from >= valid_to");
    }
    if (m.user_id.empty()) throw MappingError("lease for " + m.floating_ip.to_string() + " has empty user_id");
    for (const auto* other : by_floating[m.floating_ip.value()]) {
      if (overlaps(*other, m)) throw MappingError("overlapping leases for floating IP " + m.floating_ip.to_string());
    }
    for (const auto* other : by_fixed[m.fixed_ip.value()]) {
      if (overlaps(*other, m) && other->user_id != m.user_id) {
        throw MappingError("fixed IP " + m.fixed_ip.to_string() + " held by two users at once");
      }
    }
    by_floating[m.floating_ip.value()].push_back(&m);
    by_fixed[m.fixed_ip.value()].push_back(&m);
  }
}

MappingStore MappingStore::parse(std::string_view text) {
  std::vector<IpUserMapping> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string trimmed = trim(line);
    if (trimmed.empty() || trimmed[0] == '#' || trimmed.rfind("floating_ip", 0) == 0) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 6) throw ParseError("expected 6 tab-separated columns", std::string(line), line_no, 1);
    auto floating = Ipv4::parse(cols[0]);
    auto fixed = Ipv4::parse(cols[1]);
    auto from = parse_rfc3339(cols[4]);
    auto to = parse_rfc3339(cols[5]);
    if (!floating) throw ParseError("invalid floating_ip", std::string(line), line_no, 1);
    if (!fixed) throw ParseError("invalid fixed_ip", std::string(line), line_no, 2);
    if (!from) throw ParseError("invalid valid_from timestamp", std::string(line), line_no, 5);
    if (!to) throw ParseError("invalid valid_to timestamp", std::string(line), line_no, 6);
    out.push_back(IpUserMapping{*floating, *fixed, cols[2], cols[3], *from, *to});
  }
  return MappingStore(std::move(out));
}

MappingStore MappingStore::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

std::optional<Resolution> MappingStore::lookup(Ipv4 ip, Timestamp at) const {
  for (const auto& m : mappings_) {
    if ((m.floating_ip == ip || m.fixed_ip == ip) && m.valid_from <= at && at < m.valid_to) {
      return Resolution{m.fixed_ip, m.instance_id, m.user_id};
    }
  }
  return std::nullopt;
}

std::string resolve_user(Ipv4 ip, Timestamp at, const MappingStore& mappings) {
  auto r = mappings.lookup(ip, at);
  if (!r) throw UnresolvedUserError("no lease covers " + ip.to_string() + " at " + format_rfc3339(at));
  return r->user_id;
}

ResolvedEntry to_log_entry(const SnortEvent& event, const MappingStore& mappings) {
  ResolvedEntry out;
  out.entry.from_ip = event.src_ip;
  out.entry.to_ip = event.dst_ip;
  out.entry.timestamp = event.timestamp;
  out.entry.port = event.dst_port.value_or(0);
  if (auto r = mappings.lookup(event.src_ip, event.timestamp)) {
    out.entry.from_ip = r->fixed_ip;
    out.entry.user_id = r->user_id;
    out.user_resolved = true;
  } else {
    out.entry.user_id = std::string(kUnknownUser);
  }
  return out;
}

}  // namespace seclaas
