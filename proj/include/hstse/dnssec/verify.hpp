#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "hstse/dns/records.hpp"
#include "hstse/dnssec/keys.hpp"
#include "hstse/util/bytes.hpp"

namespace hstse::dnssec {

/// An RRset together with the single RRSIG covering it.
struct RrsetWithProof {
  dns::Rrset rrset;
  dns::RrsigData rrsig;
};

// RFC 4034 appendix B key tag over DNSKEY RDATA.
inline std::uint16_t key_tag(std::span<const std::uint8_t> dnskey_rdata) {
  std::uint32_t acc = 0;
  for (std::size_t i = 0; i < dnskey_rdata.size(); ++i)
    acc += (i & 1) ? dnskey_rdata[i] : (std::uint32_t{dnskey_rdata[i]} << 8);
  acc += (acc >> 16) & 0xffff;
  return static_cast<std::uint16_t>(acc & 0xffff);
}

// DS digest (SHA-256): hash of canonical owner wire form followed by the
// DNSKEY RDATA.
inline Bytes ds_digest(const dns::Name& owner, std::span<const std::uint8_t> dnskey_rdata) {
  BytesWriter w;
  owner.to_wire(w, /*lowercase=*/true);
  w.raw(dnskey_rdata);
  return sha256(w.bytes());
}

inline dns::DsData make_ds(const dns::Name& owner, const dns::DnskeyData& key) {
  Bytes rdata = key.encode();
  return dns::DsData{key_tag(rdata), key.algorithm, 2, ds_digest(owner, rdata)};
}

/// The byte sequence an RRSIG signs: RRSIG RDATA prefix, then each RR of the
/// set in canonical form and canonical order (RFC 4034 section 3.1.8.1).
inline Bytes rrsig_signed_data(const dns::Rrset& rrset, const dns::RrsigData& sig) {
  BytesWriter w;
  sig.encode_prefix(w);
  Bytes owner_wire = rrset.owner.wire(/*lowercase=*/true);
  std::vector<Bytes> sorted = rrset.rdatas;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& rdata : sorted) {
    w.raw(owner_wire);
    w.u16(rrset.type);
    w.u16(rrset.rr_class);
    w.u32(sig.original_ttl);
    w.u16(static_cast<std::uint16_t>(rdata.size()));
    w.raw(rdata);
  }
  return w.take();
}

enum class VerifyStatus {
  Ok,
  Fail,
  UnsupportedAlgorithm,
};

/// Checks one RRSIG against one DNSKEY at a given time. Key tag, signer
/// name, algorithm, validity window and the signature itself must all line
/// up. Unsupported algorithms are reported distinctly so callers can decide
/// whether that means Bogus.
inline VerifyStatus verify_rrset(const RrsetWithProof& proofed, const dns::DnskeyData& key,
                                 std::int64_t now) {
  const dns::RrsigData& sig = proofed.rrsig;
  if (!algorithm_supported(sig.algorithm) || !algorithm_supported(key.algorithm))
    return VerifyStatus::UnsupportedAlgorithm;
  if (sig.algorithm != key.algorithm) return VerifyStatus::Fail;
  if (sig.type_covered != proofed.rrset.type) return VerifyStatus::Fail;
  if (sig.key_tag != key_tag(key.encode())) return VerifyStatus::Fail;
  if (!proofed.rrset.owner.is_subdomain_of(sig.signer)) return VerifyStatus::Fail;
  if (sig.labels != proofed.rrset.owner.label_count()) return VerifyStatus::Fail;
  if (now < static_cast<std::int64_t>(sig.inception) ||
      now > static_cast<std::int64_t>(sig.expiration))
    return VerifyStatus::Fail;
  if (proofed.rrset.empty()) return VerifyStatus::Fail;

  PublicKey pub(algorithm_from_code(key.algorithm), key.public_key);
  Bytes data = rrsig_signed_data(proofed.rrset, sig);
  return pub.verify(data, sig.signature) ? VerifyStatus::Ok : VerifyStatus::Fail;
}

/// Convenience: try every key in a DNSKEY RRset whose tag matches.
inline VerifyStatus verify_with_keyset(const RrsetWithProof& proofed, const dns::Rrset& dnskey_set,
                                       std::int64_t now) {
  bool saw_unsupported = false;
  for (const auto& rdata : dnskey_set.rdatas) {
    dns::DnskeyData key;
    try {
      key = dns::DnskeyData::decode(rdata);
    } catch (const WireError&) {
      continue;
    }
    switch (verify_rrset(proofed, key, now)) {
      case VerifyStatus::Ok: return VerifyStatus::Ok;
      case VerifyStatus::UnsupportedAlgorithm: saw_unsupported = true; break;
      case VerifyStatus::Fail: break;
    }
  }
  return saw_unsupported ? VerifyStatus::UnsupportedAlgorithm : VerifyStatus::Fail;
}

}  // namespace hstse::dnssec
