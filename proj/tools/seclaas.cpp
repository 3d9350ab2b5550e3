// seclaas: operator and auditor command line.
//
// Exit codes: 0 success or accepted audit, 1 audit rejection (or a failed
// attack matrix), 2 usage, I/O or crypto error.

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seclaas/adversary.hpp"
#include "seclaas/bench.hpp"
#include "seclaas/errors.hpp"
#include "seclaas/ingest.hpp"
#include "seclaas/json_codec.hpp"
#include "seclaas/pipeline.hpp"
#include "seclaas/verifier.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;
using namespace seclaas;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRejected = 1;
constexpr int kExitError = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Globals {
  bool json_output = false;
  std::string config_path;
  std::string data_root_flag;
  std::string backend_flag;
  std::string keys_flag;

  Json config = Json::object();
};

// flag > environment > config file
std::optional<std::string> resolve(const std::string& flag, const char* env, const Json& config, const char* key) {
  if (!flag.empty()) return flag;
  if (const char* v = std::getenv(env); v != nullptr && *v != '\0') return std::string(v);
  if (auto it = config.find(key); it != config.end() && it->is_string()) return it->get<std::string>();
  return std::nullopt;
}

fs::path data_root(const Globals& g) {
  auto v = resolve(g.data_root_flag, "SECLAAS_DATA_ROOT", g.config, "data_root");
  if (!v) throw UsageError("no data root: pass --data-root, set SECLAAS_DATA_ROOT or add data_root to the config file");
  return *v;
}

std::optional<Backend> backend(const Globals& g) {
  auto v = resolve(g.backend_flag, "SECLAAS_BACKEND", g.config, "backend");
  if (!v) return std::nullopt;
  auto b = parse_backend(*v);
  if (!b) throw UsageError("unknown backend '" + *v + "' (expected bloom or rsa)");
  return b;
}

fs::path keys_dir(const Globals& g) {
  if (!g.keys_flag.empty()) return g.keys_flag;
  if (auto it = g.config.find("keys"); it != g.config.end() && it->is_string()) return it->get<std::string>();
  throw UsageError("no key directory: pass --keys or add keys to the config file");
}

ChainKey chain_key(const std::string& ip_text, const std::string& day_text) {
  auto ip = Ipv4::parse(ip_text);
  if (!ip) throw UsageError("malformed --ip '" + ip_text + "'");
  auto day = parse_day(day_text);
  if (!day) throw UsageError("malformed --day '" + day_text + "' (expected YYYY-MM-DD)");
  return {*ip, *day};
}

Json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

struct BackendTuning {
  std::uint64_t capacity = 10'000;
  double fp_rate = 0.01;
  unsigned prime_bits = 64;
};

AccumulatorConfig make_config(Backend b, const BackendTuning& t) {
  if (b == Backend::kBloom) return derive_bloom_params(t.capacity, t.fp_rate);
  return generate_rsa_params(t.prime_bits);
}

void add_tuning(CLI::App* cmd, BackendTuning& t) {
  cmd->add_option("--capacity", t.capacity, "Bloom: expected records per day")->capture_default_str();
  cmd->add_option("--fp-rate", t.fp_rate, "Bloom: target false-positive rate")->capture_default_str();
  cmd->add_option("--prime-bits", t.prime_bits, "RSA: bits per modulus prime")->capture_default_str();
}

void emit(const Globals& g, const Json& j, const std::string& text) {
  if (g.json_output) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

// keygen ------------------------------------------------------------------

int cmd_keygen(const Globals& g, const fs::path& out_dir, bool force) {
  KeyMaterial keys = KeyMaterial::generate();

  // Self-test before anything is written.
  LogEntry probe{*Ipv4::parse("192.0.2.1"), *Ipv4::parse("198.51.100.7"), Timestamp{}, 443, "self-test"};
  const auto sealed = decrypt_fields(encrypt_fields(probe, keys.agency_public), keys.agency_private);
  const Bytes msg{'o', 'k'};
  if (sealed.to_ip != probe.to_ip || sealed.user_id != probe.user_id ||
      !verify_signature(msg, sign(msg, keys.provider_signing), keys.provider_verifying)) {
    throw CryptoError("generated keys failed the round-trip self-test");
  }

  write_key_files(keys, out_dir, force);
  Json files = Json::array();
  std::ostringstream text;
  for (const char* name : {KeyFileNames::kAgencyPublic, KeyFileNames::kAgencyPrivate, KeyFileNames::kProviderPublic,
                           KeyFileNames::kProviderPrivate}) {
    files.push_back((out_dir / name).string());
    text << "wrote " << (out_dir / name).string() << "\n";
  }
  emit(g, {{"files", files}, {"self_test", "passed"}}, text.str());
  return kExitOk;
}

// ingest ------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string mappings;
  int year = 0;
  BackendTuning tuning;
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
  const fs::path root = data_root(g);
  const fs::path kdir = keys_dir(g);
  const auto agency = AgencyPublicKey::from_pem(read_text_file(kdir / KeyFileNames::kAgencyPublic));
  const MappingStore mappings = a.mappings.empty() ? MappingStore{} : MappingStore::load(a.mappings);

  int year = a.year;
  if (year == 0) {
    const auto today = std::chrono::year_month_day{std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now())};
    year = static_cast<int>(today.year());
  }

  std::ifstream in(a.input);
  if (!in) throw StorageError("cannot read " + a.input);

  LoggerOptions opts;
  opts.data_root = root;
  opts.accumulator = load_or_init_config(root, backend(g), [&](Backend b) { return make_config(b, a.tuning); });
  Logger logger(opts, agency);
  logger.recover_all();

  std::size_t appended = 0, skipped = 0, unresolved = 0, sealed = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (classify_snort_line(line) != LineClass::kEvent) continue;
    try {
      const auto resolved = to_log_entry(parse_snort_line(line, year, line_no), mappings);
      logger.append(resolved.entry);
      ++appended;
      unresolved += !resolved.user_resolved;
    } catch (const ParseError& e) {
      ++skipped;
      std::cerr << a.input << ":" << e.line() << ":" << e.column() << ": skipped: " << e.what() << "\n";
    } catch (const SealedChainError& e) {
      ++sealed;
      std::cerr << a.input << ":" << line_no << ": rejected: " << e.what() << "\n";
    }
  }

  std::ostringstream text;
  text << "appended " << appended << ", skipped " << skipped << ", unresolved users " << unresolved;
  if (sealed > 0) text << ", rejected for sealed days " << sealed;
  text << "\n";
  emit(g,
       {{"appended", appended},
        {"backend", std::string(backend_name(backend_of(opts.accumulator)))},
        {"rejected_sealed", sealed},
        {"skipped", skipped},
        {"unresolved_users", unresolved}},
       text.str());
  return kExitOk;
}

// seal --------------------------------------------------------------------

int cmd_seal(const Globals& g, const std::string& ip, const std::string& day, const BackendTuning& tuning) {
  const fs::path root = data_root(g);
  const ChainKey key = chain_key(ip, day);
  const fs::path kdir = keys_dir(g);

  LoggerOptions opts;
  opts.data_root = root;
  opts.accumulator = load_or_init_config(root, backend(g), [&](Backend b) { return make_config(b, tuning); });
  Logger logger(opts, AgencyPublicKey::from_pem(read_text_file(kdir / KeyFileNames::kAgencyPublic)),
                ProviderSigningKey::from_pem(read_text_file(kdir / KeyFileNames::kProviderPrivate)));
  logger.recover_all();

  ProofOfPastLog ppl;
  bool already = false;
  try {
    ppl = logger.seal_day(key);
  } catch (const AlreadySealedError& e) {
    ppl = e.ppl();
    already = true;
    std::cerr << "notice: " << e.what() << "; existing proof of past log follows\n";
  }
  Json j = seclaas::json::to_json(ppl);
  j["already_sealed"] = already;
  j["records"] = logger.accumulator(key).record_count;
  std::cout << (g.json_output ? j.dump(2) : seclaas::json::to_json(ppl).dump(2)) << "\n";
  return kExitOk;
}

// export ------------------------------------------------------------------

int cmd_export(const Globals& g, const std::string& ip, const std::string& day, const std::string& out) {
  const DataRoot root(data_root(g));
  const auto bundle = export_bundle(root, chain_key(ip, day));
  const std::string text = to_json(bundle).dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return kExitOk;
  }
  FileIo io;
  io.write_atomic(out, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  emit(g, {{"bundle", out}, {"records", bundle.presentation.records.size()}},
       "wrote " + out + " (" + std::to_string(bundle.presentation.records.size()) + " records)\n");
  return kExitOk;
}

// verify ------------------------------------------------------------------

int cmd_verify(const Globals& g, const std::string& ip, const std::string& day, const std::string& records,
               const std::string& provider_key_path) {
  const DataRoot root(data_root(g));
  const ChainKey key = chain_key(ip, day);
  FeedStore feed_store(root, std::make_shared<FileIo>(false));
  const PublishedFeed feed = feed_store.read_feed();

  std::string key_pem;
  if (!provider_key_path.empty()) {
    key_pem = read_text_file(provider_key_path);
  } else if (feed.provider_key_pem) {
    key_pem = *feed.provider_key_pem;
  }

  InvestigatorBundle bundle = bundle_from_json(read_json_file(records));
  bundle.presentation.key = key;

  AuditReport report;
  if (key_pem.empty()) {
    // Nothing has been published, so no day can be.
    report.key = key;
    report.reason = report.ppl = Reason::kUnpublishedDay;
  } else {
    report = audit_day(bundle.presentation, feed.entries, ProviderVerifyingKey::from_pem(key_pem));
  }
  emit(g, to_json(report), format_report(report));
  return report.accepted ? kExitOk : kExitRejected;
}

// decrypt -----------------------------------------------------------------

int cmd_decrypt(const Globals& g, const std::string& bundle_path, const std::string& key_path) {
  const auto key = AgencyPrivateKey::from_pem(read_text_file(key_path));
  const InvestigatorBundle bundle = bundle_from_json(read_json_file(bundle_path));
  Json rows = Json::array();
  std::ostringstream text;
  const auto& recs = bundle.presentation.records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const SealedFields f = decrypt_fields(recs[i].ele, key);
    rows.push_back({{"from_ip", recs[i].ele.from_ip.to_string()},
                    {"index", i},
                    {"port", f.port},
                    {"timestamp", format_rfc3339(recs[i].ele.timestamp)},
                    {"to_ip", f.to_ip.to_string()},
                    {"user_id", f.user_id}});
    text << i << "\t" << format_rfc3339(recs[i].ele.timestamp) << "\t" << recs[i].ele.from_ip.to_string() << " -> "
         << f.to_ip.to_string() << ":" << f.port << "\t" << f.user_id << "\n";
  }
  emit(g, {{"records", rows}}, text.str());
  return kExitOk;
}

// bench -------------------------------------------------------------------

struct ScratchDir {
  fs::path path;
  ScratchDir() {
    std::string tmpl = (fs::temp_directory_path() / "seclaas-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw StorageError("cannot create a scratch directory");
    path = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int cmd_bench(const Globals& g, const std::vector<std::size_t>& sizes, std::size_t repeats,
              const BackendTuning& tuning) {
  const Backend b = backend(g).value_or(Backend::kBloom);
  ScratchDir scratch;
  const KeyMaterial keys = KeyMaterial::generate();
  BenchOptions opts{scratch.path, repeats, 1};
  const auto rows = run_bench(make_config(b, tuning), sizes, keys, opts);
  if (g.json_output) {
    Json arr = Json::array();
    for (const auto& r : rows) {
      arr.push_back({{"backend", std::string(backend_name(r.backend))},
                     {"insert_s", r.insert_seconds},
                     {"proof_bytes", r.proof_bytes},
                     {"records", r.records},
                     {"seal_s", r.seal_seconds},
                     {"verify_per_record_s", r.verify_seconds_per_record},
                     {"witness_bytes", r.witness_bytes}});
    }
    std::cout << arr.dump(2) << "\n";
  } else {
    write_bench_csv(std::cout, rows);
  }
  return kExitOk;
}

// attack-sim --------------------------------------------------------------

struct AttackArgs {
  bool matrix = false;
  std::size_t fixtures = 5;
  std::size_t records = 12;
  std::size_t trials = 10'000;
  std::uint64_t seed = 7;
  BackendTuning tuning;
};

int cmd_attack_sim(const Globals& g, AttackArgs a) {
  if (!a.matrix) throw UsageError("attack-sim currently supports only --matrix");
  std::vector<Backend> backends;
  if (auto b = backend(g)) {
    backends = {*b};
  } else {
    backends = {Backend::kBloom, Backend::kRsaOneWay};
  }

  ScratchDir scratch;
  const KeyMaterial keys = KeyMaterial::generate();
  const Adversary adversary{keys.agency_public, ProviderSigningKey::generate()};
  const auto attacks = all_attacks();

  Json out = {{"backends", Json::array()}, {"passed", true}};
  std::ostringstream text;
  bool passed = true;
  for (Backend b : backends) {
    // An empty day and a singleton precede the ordinary days so that the
    // skip paths are exercised too.
    std::vector<FixtureSpec> specs;
    for (std::size_t i = 0; i < a.fixtures + 2; ++i) {
      const std::size_t n = i == 0 ? 0 : i == 1 ? 1 : a.records + i;
      specs.push_back({n, Ipv4{0x0B010000u + static_cast<std::uint32_t>(i + 2)},
                       Day{std::chrono::days{16'000 + static_cast<int>(i)}}, a.seed + i});
    }
    AccumulatorConfig config = derive_bloom_params(a.tuning.capacity, a.tuning.fp_rate);
    if (b == Backend::kRsaOneWay) config = generate_rsa_params(a.tuning.prime_bits, a.seed);
    const auto days = build_fixture_days(scratch.path / std::string(backend_name(b)), config, keys, specs);
    MatrixReport report = run_matrix(days, attacks, adversary, keys.provider_verifying, a.seed);

    const FixtureDay& largest = days.back();
    const double rate = planted_acceptance_rate(largest, keys.agency_public, a.trials, a.seed);
    const double bound = b == Backend::kBloom ? 2.0 * a.tuning.fp_rate : 0.0;
    const bool rate_ok = rate <= bound;
    passed = passed && report.passed && rate_ok;

    Json section = report.to_json();
    section["backend"] = std::string(backend_name(b));
    section["planted_acceptance"] = {{"bound", bound}, {"rate", rate}, {"trials", a.trials}, {"pass", rate_ok}};
    out["backends"].push_back(section);

    text << "== " << backend_name(b) << " ==\n";
    for (const auto& r : report.rows) {
      text << (r.pass ? "PASS " : "FAIL ") << "fixture " << r.fixture << "  " << r.scenario << " [" << r.properties
           << "]  " << r.outcome;
      if (!r.reason.empty()) text << " (" << r.reason << ")";
      text << "\n";
    }
    text << (rate_ok ? "PASS " : "FAIL ") << "planted-record acceptance " << rate << " over " << a.trials
         << " trials (bound " << bound << ")\n";
  }
  out["passed"] = passed;
  text << (passed ? "matrix passed\n" : "matrix FAILED\n");
  emit(g, out, text.str());
  return passed ? kExitOk : kExitRejected;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure logging as a service: tamper-evident, confidential cloud logs"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json_output, "Machine-readable output");
  app.add_option("--config", g.config_path, "JSON config file (data_root, backend, keys)");
  app.add_option("--data-root", g.data_root_flag, "Data directory [env SECLAAS_DATA_ROOT]");
  app.add_option("--backend", g.backend_flag, "Accumulator backend: bloom or rsa [env SECLAAS_BACKEND]");
  app.add_option("--keys", g.keys_flag, "Key directory written by keygen");

  std::function<int()> run;

  auto* keygen = app.add_subcommand("keygen", "Generate agency and provider key pairs");
  std::string out_dir;
  bool force = false;
  keygen->add_option("--out-dir", out_dir, "Destination directory")->required();
  keygen->add_flag("--force", force, "Overwrite existing key files");
  keygen->callback([&] { run = [&] { return cmd_keygen(g, out_dir, force); }; });

  auto* ingest = app.add_subcommand("ingest", "Append Snort alert lines to the day chains");
  IngestArgs ia;
  ingest->add_option("--input", ia.input, "Snort fast-alert log")->required();
  ingest->add_option("--mappings", ia.mappings, "IP to user mapping TSV");
  ingest->add_option("--year", ia.year, "Year for the year-less timestamps (default: current)");
  add_tuning(ingest, ia.tuning);
  ingest->callback([&] { run = [&] { return cmd_ingest(g, ia); }; });

  auto* seal = app.add_subcommand("seal", "Seal a day and publish its proof of past log");
  std::string ip, day;
  BackendTuning seal_tuning;
  seal->add_option("--ip", ip, "Static IP")->required();
  seal->add_option("--day", day, "UTC day, YYYY-MM-DD")->required();
  add_tuning(seal, seal_tuning);
  seal->callback([&] { run = [&] { return cmd_seal(g, ip, day, seal_tuning); }; });

  auto* exp = app.add_subcommand("export", "Write an investigator bundle for a sealed day");
  std::string export_out;
  exp->add_option("--ip", ip, "Static IP")->required();
  exp->add_option("--day", day, "UTC day, YYYY-MM-DD")->required();
  exp->add_option("--out", export_out, "Bundle file (default: stdout)");
  exp->callback([&] { run = [&] { return cmd_export(g, ip, day, export_out); }; });

  auto* verify = app.add_subcommand("verify", "Audit a bundle against the published feed");
  std::string records, provider_key;
  verify->add_option("--ip", ip, "Static IP")->required();
  verify->add_option("--day", day, "UTC day, YYYY-MM-DD")->required();
  verify->add_option("--records", records, "Investigator bundle")->required();
  verify->add_option("--provider-key", provider_key, "Provider public key (default: the one in the feed)");
  verify->callback([&] { run = [&] { return cmd_verify(g, ip, day, records, provider_key); }; });

  auto* decrypt = app.add_subcommand("decrypt", "Show a bundle's records in plaintext (agency only)");
  std::string bundle_path, agency_key;
  decrypt->add_option("--bundle", bundle_path, "Investigator bundle")->required();
  decrypt->add_option("--agency-key", agency_key, "Agency private key")->required();
  decrypt->callback([&] { run = [&] { return cmd_decrypt(g, bundle_path, agency_key); }; });

  auto* bench = app.add_subcommand("bench", "Time insert, seal and verify per day size (CSV)");
  std::vector<std::size_t> sizes{1000, 2000, 5000, 10000};
  std::size_t repeats = 1;
  BackendTuning bench_tuning;
  bench->add_option("--sizes", sizes, "Records per day")->delimiter(',')->capture_default_str();
  bench->add_option("--repeats", repeats, "Runs per size; the minimum is reported")->capture_default_str();
  add_tuning(bench, bench_tuning);
  bench->callback([&] { run = [&] { return cmd_bench(g, sizes, repeats, bench_tuning); }; });

  auto* attack = app.add_subcommand("attack-sim", "Run the tampering scenarios against honest fixture days");
  AttackArgs aa;
  attack->add_flag("--matrix", aa.matrix, "Every scenario on every fixture day");
  attack->add_option("--fixtures", aa.fixtures, "Ordinary fixture days per backend (plus an empty and a one-record day)")->capture_default_str();
  attack->add_option("--records", aa.records, "Base records per fixture day")->capture_default_str();
  attack->add_option("--trials", aa.trials, "Forged records for the acceptance-rate check")->capture_default_str();
  attack->add_option("--seed", aa.seed)->capture_default_str();
  add_tuning(attack, aa.tuning);
  attack->callback([&] { run = [&] { return cmd_attack_sim(g, aa); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (!g.config_path.empty()) {
      g.config = read_json_file(g.config_path);
      if (!g.config.is_object()) throw DecodeError(g.config_path + ": config must be a JSON object");
    }
    return run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (g.json_output) std::cout << Json{{"error", e.what()}}.dump() << "\n";
    return kExitError;
  }
}
