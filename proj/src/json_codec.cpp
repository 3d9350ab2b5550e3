#include "seclaas/json_codec.hpp"

#include "seclaas/errors.hpp"

namespace seclaas::json {

namespace {

std::string b64_bigint(const mpz_class& v) { return to_base64(bigint_to_bytes(v)); }

mpz_class bigint_field(const Json& j, const char* name) { return bigint_from_bytes(base64_field(j, name)); }

Ipv4 ip_field(const Json& j, const char* name) {
  auto ip = Ipv4::parse(string_field(j, name));
  if (!ip) throw DecodeError(std::string("field '") + name + "' is not an IPv4 address");
  return *ip;
}

Day day_field(const Json& j, const char* name) {
  auto d = parse_day(string_field(j, name));
  if (!d) throw DecodeError(std::string("field '") + name + "' is not a YYYY-MM-DD date");
  return *d;
}

Digest digest_field(const Json& j, const char* name) {
  auto d = digest_from_hex(string_field(j, name));
  if (!d) throw DecodeError(std::string("field '") + name + "' is not a 64-char hex digest");
  return *d;
}

template <typename T>
T number_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_number()) throw DecodeError(std::string("field '") + name + "' is not a number");
  return v.get<T>();
}

}  // namespace

const Json& field(const Json& j, const char* name) {
  if (!j.is_object()) throw DecodeError(std::string("expected an object holding '") + name + "'");
  auto it = j.find(name);
  if (it == j.end()) throw DecodeError(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_string()) throw DecodeError(std::string("field '") + name + "' is not a string");
  return v.get<std::string>();
}

Bytes base64_field(const Json& j, const char* name) {
  auto b = from_base64(string_field(j, name));
  if (!b) throw DecodeError(std::string("field '") + name + "' is not base64");
  return *b;
}

std::string canonical(const Json& j) { return j.dump(); }

Json to_json(const ProofOfPastLog& ppl) {
  return Json{{"ae_digest", to_hex(ppl.ae_digest)},
              {"day", format_day(ppl.day)},
              {"ip", ppl.ip.to_string()},
              {"published_at", format_rfc3339(ppl.published_at)},
              {"signature", to_base64(ppl.signature)}};
}

ProofOfPastLog ppl_from_json(const Json& j) {
  ProofOfPastLog ppl;
  ppl.ae_digest = digest_field(j, "ae_digest");
  ppl.day = day_field(j, "day");
  ppl.ip = ip_field(j, "ip");
  auto t = parse_rfc3339(string_field(j, "published_at"));
  if (!t) throw DecodeError("field 'published_at' is not RFC 3339");
  ppl.published_at = *t;
  ppl.signature = base64_field(j, "signature");
  return ppl;
}

Json to_json(const AccumulatorState& s) {
  Json j{{"backend", std::string(backend_name(s.backend()))},
         {"day", format_day(s.key.day)},
         {"head", to_hex(s.head)},
         {"ip", s.key.ip.to_string()},
         {"record_count", s.record_count}};
  if (s.backend() == Backend::kBloom) {
    const auto& f = s.bloom();
    j["bloom"] = Json{{"bit_array", to_base64(f.bits)},
                      {"bits", f.params.bits},
                      {"capacity", f.params.capacity},
                      {"fp_rate", f.params.fp_rate},
                      {"hashes", f.params.hashes}};
  } else {
    const auto& a = s.rsa();
    j["rsa"] = Json{{"modulus", b64_bigint(a.params.modulus)},
                    {"prime_bits", a.params.prime_bits},
                    {"seed", b64_bigint(a.params.seed)},
                    {"value", b64_bigint(a.value)}};
  }
  return j;
}

AccumulatorState state_from_json(const Json& j) {
  AccumulatorState s;
  auto backend = parse_backend(string_field(j, "backend"));
  if (!backend) throw DecodeError("unknown accumulator backend");
  s.key = ChainKey{ip_field(j, "ip"), day_field(j, "day")};
  s.head = digest_field(j, "head");
  s.record_count = number_field<std::uint64_t>(j, "record_count");
  if (*backend == Backend::kBloom) {
    const Json& b = field(j, "bloom");
    BloomFilter f;
    f.params.capacity = number_field<std::uint64_t>(b, "capacity");
    f.params.fp_rate = number_field<double>(b, "fp_rate");
    f.params.bits = number_field<std::uint64_t>(b, "bits");
    f.params.hashes = number_field<std::uint32_t>(b, "hashes");
    f.bits = base64_field(b, "bit_array");
    if (f.params.bits == 0 || f.params.hashes == 0 || f.params.hashes > 64 ||
        f.bits.size() != (f.params.bits + 7) / 8) {
      throw DecodeError("inconsistent bloom parameters");
    }
    s.payload = std::move(f);
  } else {
    const Json& r = field(j, "rsa");
    RsaAccumulator a;
    a.params.modulus = bigint_field(r, "modulus");
    a.params.seed = bigint_field(r, "seed");
    a.params.prime_bits = number_field<unsigned>(r, "prime_bits");
    a.value = bigint_field(r, "value");
    if (a.params.modulus < 3 || a.value < 1 || a.value >= a.params.modulus) {
      throw DecodeError("accumulator value outside [1, N)");
    }
    s.payload = std::move(a);
  }
  return s;
}

Json to_json(const AccumulatorConfig& config) {
  if (const auto* b = std::get_if<BloomParams>(&config)) {
    return Json{{"backend", "bloom"},
                {"bloom", Json{{"bits", b->bits}, {"capacity", b->capacity}, {"fp_rate", b->fp_rate},
                               {"hashes", b->hashes}}}};
  }
  const auto& r = std::get<RsaParams>(config);
  return Json{{"backend", "rsa"},
              {"rsa", Json{{"modulus", b64_bigint(r.modulus)}, {"prime_bits", r.prime_bits},
                           {"seed", b64_bigint(r.seed)}}}};
}

AccumulatorConfig config_from_json(const Json& j) {
  auto backend = parse_backend(string_field(j, "backend"));
  if (!backend) throw DecodeError("unknown accumulator backend");
  if (*backend == Backend::kBloom) {
    const Json& b = field(j, "bloom");
    BloomParams p;
    p.bits = number_field<std::uint64_t>(b, "bits");
    p.capacity = number_field<std::uint64_t>(b, "capacity");
    p.fp_rate = number_field<double>(b, "fp_rate");
    p.hashes = number_field<std::uint32_t>(b, "hashes");
    if (p.bits == 0 || p.hashes == 0 || p.hashes > 64) throw DecodeError("inconsistent bloom parameters");
    return p;
  }
  const Json& r = field(j, "rsa");
  try {
    return make_rsa_params(bigint_field(r, "modulus"), bigint_field(r, "seed"), number_field<unsigned>(r, "prime_bits"));
  } catch (const ParamError& e) {
    throw DecodeError(e.what());
  }
}

Json to_json(const MembershipWitness& w) {
  return Json{{"record_index", w.record_index}, {"value", b64_bigint(w.value)}};
}

MembershipWitness witness_from_json(const Json& j) {
  return MembershipWitness{number_field<std::uint64_t>(j, "record_index"), bigint_field(j, "value")};
}

Json to_json(const ProofStoreEntry& e) {
  Json witnesses = Json::array();
  for (const auto& w : e.witnesses) witnesses.push_back(to_json(w));
  return Json{{"format", "seclaas-proof-v1"},
              {"ppl", e.ppl ? to_json(*e.ppl) : Json(nullptr)},
              {"sealed", e.sealed},
              {"state", to_json(e.state)},
              {"witnesses", std::move(witnesses)}};
}

ProofStoreEntry proof_entry_from_json(const Json& j) {
  if (string_field(j, "format") != "seclaas-proof-v1") throw DecodeError("unknown proof entry format");
  ProofStoreEntry e;
  const Json& sealed = field(j, "sealed");
  if (!sealed.is_boolean()) throw DecodeError("field 'sealed' is not a boolean");
  e.sealed = sealed.get<bool>();
  e.state = state_from_json(field(j, "state"));
  const Json& ws = field(j, "witnesses");
  if (!ws.is_array()) throw DecodeError("field 'witnesses' is not an array");
  for (const auto& w : ws) e.witnesses.push_back(witness_from_json(w));
  const Json& ppl = field(j, "ppl");
  if (!ppl.is_null()) e.ppl = ppl_from_json(ppl);
  return e;
}

}  // namespace seclaas::json
