#include "seclaas/storage.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "seclaas/encoding.hpp"
#include "seclaas/json_codec.hpp"

namespace seclaas {

namespace fs = std::filesystem;

namespace {

std::mutex& feed_mutex() {
  static std::mutex m;
  return m;
}

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
  throw StorageError(what + " " + path.string() + ": " + std::strerror(errno));
}

class Fd {
 public:
  Fd(const fs::path& path, int flags) : fd_(::open(path.c_str(), flags | O_CLOEXEC, 0644)) {
    if (fd_ < 0) io_fail("cannot open", path);
  }
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

void write_all(int fd, const std::uint8_t* data, std::size_t size, const fs::path& path) {
  while (size > 0) {
    ssize_t n = ::write(fd, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("write failed for", path);
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void sync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw StorageError("cannot create " + path.parent_path().string() + ": " + ec.message());
}

std::uint32_t crc32_of(std::span<const std::uint8_t> data) {
  return static_cast<std::uint32_t>(::crc32(0L, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace

bool FaultInjector::should_crash() {
  const std::size_t index = count_++;
  return crash_at_ && *crash_at_ == index;
}

bool FileIo::crash_now() { return faults_ && faults_->should_crash(); }

void FileIo::append(const fs::path& path, std::span<const std::uint8_t> data) {
  ensure_parent(path);
  const bool crash = crash_now();
  Fd fd(path, O_WRONLY | O_CREAT | O_APPEND);
  const std::size_t n = crash ? data.size() / 2 : data.size();
  write_all(fd.get(), data.data(), n, path);
  if (crash) throw SimulatedCrash("crash during append to " + path.string());
  if (durable_ && ::fsync(fd.get()) != 0) io_fail("fsync failed for", path);
}

void FileIo::write_atomic(const fs::path& path, std::span<const std::uint8_t> data) {
  ensure_parent(path);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    const bool crash = crash_now();
    Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
    const std::size_t n = crash ? data.size() / 2 : data.size();
    write_all(fd.get(), data.data(), n, tmp);
    if (crash) throw SimulatedCrash("crash while writing " + tmp.string());
    if (durable_ && ::fsync(fd.get()) != 0) io_fail("fsync failed for", tmp);
  }
  if (crash_now()) throw SimulatedCrash("crash before renaming " + tmp.string());
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_fail("rename failed for", tmp);
  if (durable_) sync_dir(path.parent_path());
}

void FileIo::truncate(const fs::path& path, std::uintmax_t size) {
  if (crash_now()) throw SimulatedCrash("crash before truncating " + path.string());
  if (::truncate(path.c_str(), static_cast<off_t>(size)) != 0) io_fail("truncate failed for", path);
}

Bytes read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// --- layout ---------------------------------------------------------------

fs::path DataRoot::segment_path(const ChainKey& key) const {
  return root_ / "logs" / key.ip.to_string() / (format_day(key.day) + ".seg");
}

fs::path DataRoot::proof_path(const ChainKey& key) const {
  return root_ / "proofs" / key.ip.to_string() / (format_day(key.day) + ".json");
}

std::vector<ChainKey> DataRoot::list_chains() const {
  std::set<ChainKey> found;
  auto scan = [&](const fs::path& dir, const char* ext) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return;
    for (const auto& ip_dir : fs::directory_iterator(dir, ec)) {
      auto ip = Ipv4::parse(ip_dir.path().filename().string());
      if (!ip || !ip_dir.is_directory()) continue;
      for (const auto& f : fs::directory_iterator(ip_dir.path(), ec)) {
        if (f.path().extension() != ext) continue;
        if (auto day = parse_day(f.path().stem().string())) found.insert(ChainKey{*ip, *day});
      }
    }
  };
  scan(root_ / "logs", ".seg");
  scan(root_ / "proofs", ".json");
  return {found.begin(), found.end()};
}

std::optional<AccumulatorConfig> read_accumulator_config(const DataRoot& root) {
  if (!fs::exists(root.config_path())) return std::nullopt;
  Bytes raw = read_file_bytes(root.config_path());
  try {
    return json::config_from_json(json::Json::parse(raw.begin(), raw.end()));
  } catch (const json::Json::exception& e) {
    throw StorageError("corrupt " + root.config_path().string() + ": " + e.what());
  }
}

void write_accumulator_config(const DataRoot& root, FileIo& io, const AccumulatorConfig& config) {
  std::string text = json::canonical(json::to_json(config)) + "\n";
  io.write_atomic(root.config_path(), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// --- log segments ---------------------------------------------------------

Bytes frame_record(const ChainedRecord& record) {
  Bytes body = canonical_encode(record);
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.u32(crc32_of(body));
  w.raw(body);
  return std::move(w).take();
}

SegmentScan scan_segment(std::span<const std::uint8_t> image) {
  SegmentScan out;
  out.file_bytes = image.size();
  if (image.empty()) return out;
  if (image.size() < kSegmentMagic.size() ||
      std::memcmp(image.data(), kSegmentMagic.data(), kSegmentMagic.size()) != 0) {
    out.damage = "bad or truncated segment header";
    return out;
  }
  std::size_t pos = kSegmentMagic.size();
  out.valid_bytes = pos;
  while (pos < image.size()) {
    if (image.size() - pos < 8) {
      out.damage = "truncated frame header at offset " + std::to_string(pos);
      break;
    }
    ByteReader hdr(image.subspan(pos, 8));
    const std::uint32_t len = hdr.u32();
    const std::uint32_t crc = hdr.u32();
    if (image.size() - pos - 8 < len) {
      out.damage = "truncated frame body at offset " + std::to_string(pos);
      break;
    }
    auto body = image.subspan(pos + 8, len);
    if (crc32_of(body) != crc) {
      out.damage = "checksum mismatch at offset " + std::to_string(pos);
      break;
    }
    try {
      out.records.push_back(decode_record(body));
    } catch (const DecodeError& e) {
      out.damage = "undecodable frame at offset " + std::to_string(pos) + ": " + e.what();
      break;
    }
    pos += 8 + len;
    out.valid_bytes = pos;
  }
  return out;
}

void LogStore::put_record(const ChainKey& key, const ChainedRecord& record) {
  const fs::path path = root_.segment_path(key);
  Bytes frame = frame_record(record);
  std::error_code ec;
  if (!fs::exists(path, ec) || fs::file_size(path, ec) == 0) {
    Bytes first(kSegmentMagic.begin(), kSegmentMagic.end());
    first.insert(first.end(), frame.begin(), frame.end());
    frame = std::move(first);
  }
  io_->append(path, frame);
}

SegmentScan LogStore::scan(const ChainKey& key) const { return scan_segment(read_file_bytes(root_.segment_path(key))); }

std::vector<ChainedRecord> LogStore::get_records(const ChainKey& key) const { return scan(key).records; }

void LogStore::truncate_records(const ChainKey& key, std::size_t count) {
  const fs::path path = root_.segment_path(key);
  SegmentScan s = scan(key);
  if (s.file_bytes == 0) return;
  std::uintmax_t keep = s.valid_bytes;
  if (count < s.records.size()) {
    keep = kSegmentMagic.size();
    for (std::size_t i = 0; i < count; ++i) keep += frame_record(s.records[i]).size();
  }
  // A segment reduced to its header is dropped to zero bytes.
  if (count == 0 || s.records.empty()) keep = 0;
  if (keep != s.file_bytes) io_->truncate(path, keep);
}

// --- proof store ----------------------------------------------------------

std::optional<ProofStoreEntry> ProofStore::load(const ChainKey& key) const {
  const fs::path path = root_.proof_path(key);
  if (!fs::exists(path)) return std::nullopt;
  Bytes raw = read_file_bytes(path);
  try {
    auto entry = json::proof_entry_from_json(json::Json::parse(raw.begin(), raw.end()));
    if (entry.state.key != key) throw StorageError("proof entry " + path.string() + " names another chain");
    return entry;
  } catch (const json::Json::exception& e) {
    throw StorageError("corrupt proof entry " + path.string() + ": " + e.what());
  } catch (const DecodeError& e) {
    throw StorageError("corrupt proof entry " + path.string() + ": " + e.what());
  }
}

void ProofStore::store(const ProofStoreEntry& entry) {
  std::string text = json::canonical(json::to_json(entry)) + "\n";
  io_->write_atomic(root_.proof_path(entry.state.key),
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

AccumulatorState ProofStore::load_accumulator(const ChainKey& key, const AccumulatorConfig& config) const {
  if (auto e = load(key)) return e->state;
  return empty_state(config, key);
}

void ProofStore::store_accumulator(const AccumulatorState& state) { store(ProofStoreEntry{state, false, {}, {}}); }

// --- feed -----------------------------------------------------------------

const ProofOfPastLog* PublishedFeed::find(const ChainKey& key) const {
  for (const auto& p : entries) {
    if (p.key() == key) return &p;
  }
  return nullptr;
}

PublishedFeed FeedStore::read_feed() const {
  PublishedFeed feed;
  Bytes raw = read_file_bytes(root_.feed_path());
  std::string_view text(reinterpret_cast<const char*>(raw.data()), raw.size());
  std::size_t start = 0;
  std::size_t line_no = 0;
  for (;;) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) break;
    ++line_no;
    auto line = text.substr(start, nl - start);
    start = nl + 1;
    if (line.empty()) continue;
    try {
      feed.entries.push_back(json::ppl_from_json(json::Json::parse(line)));
    } catch (const std::exception& e) {
      throw StorageError("corrupt feed line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (fs::exists(root_.provider_key_path())) feed.provider_key_pem = read_text_file(root_.provider_key_path());
  return feed;
}

void FeedStore::publish_ppl(const ProofOfPastLog& ppl) {
  std::lock_guard lock(feed_mutex());
  if (read_feed().find(ppl.key())) {
    throw DuplicatePublicationError("PPL for " + ppl.ip.to_string() + " " + format_day(ppl.day) +
                                    " already published");
  }
  std::string line = json::canonical(json::to_json(ppl)) + "\n";
  io_->append(root_.feed_path(), std::span(reinterpret_cast<const std::uint8_t*>(line.data()), line.size()));
}

void FeedStore::publish_key(const ProviderVerifyingKey& key) {
  std::lock_guard lock(feed_mutex());
  const std::string pem = key.to_pem();
  const fs::path path = root_.provider_key_path();
  if (fs::exists(path)) {
    if (read_text_file(path) != pem) throw StorageError("a different provider key is already published");
    return;
  }
  io_->write_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(pem.data()), pem.size()));
}

std::uintmax_t FeedStore::recover() {
  std::lock_guard lock(feed_mutex());
  const fs::path path = root_.feed_path();
  Bytes raw = read_file_bytes(path);
  std::size_t keep = raw.size();
  while (keep > 0 && raw[keep - 1] != '\n') --keep;
  if (keep == raw.size()) return 0;
  io_->truncate(path, keep);
  return raw.size() - keep;
}

}  // namespace seclaas
