#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hstse/dns/records.hpp"
#include "hstse/dnssec/chain.hpp"
#include "hstse/dnssec/keys.hpp"
#include "hstse/dnssec/verify.hpp"

namespace hstse::sim {

struct ZoneBuildError : std::runtime_error {
  explicit ZoneBuildError(const std::string& what) : std::runtime_error(what) {}
};

/// A fully signed zone: every authoritative RRset carries an RRSIG and the
/// NSEC chain is closed over all names. This is the signing oracle the
/// validator tests are checked against.
class SignedZone {
public:
  struct Delegation {
    dns::Name child;
    std::optional<dns::DsData> ds;  // absent = unsigned delegation
  };

  const dns::Name& apex() const { return apex_; }
  std::uint32_t default_ttl() const { return ttl_; }
  const dnssec::SigningKey& key() const { return key_; }
  const dns::DnskeyData& dnskey() const { return dnskey_; }

  // DS RDATA the parent zone publishes for this zone.
  dns::DsData ds_for_parent() const { return dnssec::make_ds(apex_, dnskey_); }

  const dnssec::RrsetWithProof* find(const dns::Name& owner, std::uint16_t type) const {
    for (const auto& p : signed_rrsets_)
      if (p.rrset.type == type && p.rrset.owner == owner) return &p;
    return nullptr;
  }

  const dns::Rrset* find_unsigned(const dns::Name& owner, std::uint16_t type) const {
    for (const auto& s : unsigned_rrsets_)
      if (s.type == type && s.owner == owner) return &s;
    return nullptr;
  }

  bool name_exists(const dns::Name& name) const {
    return std::any_of(names_.begin(), names_.end(), [&](const dns::Name& n) { return n == name; });
  }

  const dnssec::RrsetWithProof& soa_proof() const { return *find(apex_, dns::rrtype::SOA); }
  const dnssec::RrsetWithProof& dnskey_proof() const { return *find(apex_, dns::rrtype::DNSKEY); }

  // NSEC proving `qname`/`qtype` absent: the NSEC at the name when it
  // exists (type bitmap proof), otherwise the NSEC whose span covers it.
  const dnssec::RrsetWithProof& covering_nsec(const dns::Name& qname) const {
    for (const auto& p : signed_rrsets_) {
      if (p.rrset.type != dns::rrtype::NSEC) continue;
      if (p.rrset.owner == qname) return p;
    }
    for (const auto& p : signed_rrsets_) {
      if (p.rrset.type != dns::rrtype::NSEC) continue;
      auto nsec = dns::NsecData::decode(p.rrset.rdatas.front());
      if (dnssec::detail::nsec_covers_name(p.rrset.owner, nsec.next, qname)) return p;
    }
    // A closed chain always covers every name; reaching here means the
    // zone is degenerate (single self-pointing NSEC), which covers all.
    for (const auto& p : signed_rrsets_)
      if (p.rrset.type == dns::rrtype::NSEC) return p;
    throw ZoneBuildError("zone has no NSEC records");
  }

  const std::vector<dnssec::RrsetWithProof>& signed_rrsets() const { return signed_rrsets_; }
  const std::vector<dns::Rrset>& unsigned_rrsets() const { return unsigned_rrsets_; }
  const std::vector<dns::Name>& names() const { return names_; }

private:
  friend class ZoneBuilder;
  SignedZone(dns::Name apex, dnssec::SigningKey key, dns::DnskeyData dk, std::uint32_t ttl)
      : apex_(std::move(apex)), key_(std::move(key)), dnskey_(std::move(dk)), ttl_(ttl) {}

  dns::Name apex_;
  dnssec::SigningKey key_;
  dns::DnskeyData dnskey_;
  std::uint32_t ttl_;
  std::vector<dnssec::RrsetWithProof> signed_rrsets_;
  std::vector<dns::Rrset> unsigned_rrsets_;
  std::vector<dns::Name> names_;
};

/// Assembles and signs a test zone: SOA + apex NS + DNSKEY, optional
/// HTTPREQ records, delegations with or without DS, then a closed NSEC
/// chain and RRSIGs over every authoritative RRset.
class ZoneBuilder {
public:
  explicit ZoneBuilder(const dns::Name& apex,
                       dnssec::Algorithm alg = dnssec::Algorithm::EcdsaP256Sha256)
      : apex_(apex), algorithm_(alg) {}

  ZoneBuilder& ttl(std::uint32_t seconds) {
    ttl_ = seconds;
    return *this;
  }

  ZoneBuilder& soa_minimum(std::uint32_t seconds) {
    soa_minimum_ = seconds;
    return *this;
  }

  ZoneBuilder& httpreq(const dns::Name& owner, bool include_subdomains) {
    if (!owner.is_subdomain_of(apex_))
      throw ZoneBuildError("HTTPREQ owner " + owner.text() + " outside zone " + apex_.text());
    for (const auto& [o, f] : httpreq_)
      if (o == owner) throw ZoneBuildError("duplicate HTTPREQ at " + owner.text());
    httpreq_.emplace_back(owner, include_subdomains);
    return *this;
  }

  ZoneBuilder& delegate(const dns::Name& child, std::optional<dns::DsData> ds) {
    if (!child.is_subdomain_of(apex_) || child == apex_)
      throw ZoneBuildError("delegation " + child.text() + " outside zone " + apex_.text());
    delegations_.push_back({child, std::move(ds)});
    return *this;
  }

  // Signature validity window around `now`; generous so clock-advance
  // scenarios stay inside it.
  ZoneBuilder& signature_window(std::int64_t inception, std::int64_t expiration) {
    inception_ = inception;
    expiration_ = expiration;
    return *this;
  }

  SignedZone build(std::int64_t now) const {
    auto key = dnssec::SigningKey::generate(algorithm_);
    dns::DnskeyData dnskey;
    dnskey.flags = 257;
    dnskey.protocol = 3;
    dnskey.algorithm = static_cast<std::uint8_t>(algorithm_);
    dnskey.public_key = key.public_bytes();

    SignedZone zone(apex_, std::move(key), dnskey, ttl_);

    std::int64_t inception = inception_ ? *inception_ : now - 3600;
    std::int64_t expiration = expiration_ ? *expiration_ : now + 120 * 86400;

    // name -> types present (authoritative + delegation), for NSEC bitmaps
    std::map<dns::Name, std::vector<std::uint16_t>> type_map;
    std::vector<dns::Rrset> to_sign;

    auto add_set = [&](const dns::Name& owner, std::uint16_t type, std::vector<Bytes> rdatas,
                       std::uint32_t ttl) {
      dns::Rrset s;
      s.owner = owner;
      s.type = type;
      s.ttl = ttl;
      s.rdatas = std::move(rdatas);
      to_sign.push_back(std::move(s));
      type_map[owner].push_back(type);
    };

    dns::Name ns_host = prefixed("ns");
    dns::SoaData soa;
    soa.mname = ns_host;
    soa.rname = prefixed("hostmaster");
    soa.minimum = soa_minimum_;
    add_set(apex_, dns::rrtype::SOA, {soa.encode()}, ttl_);
    add_set(apex_, dns::rrtype::NS, {dns::encode_ns(ns_host)}, ttl_);
    add_set(apex_, dns::rrtype::DNSKEY, {dnskey.encode()}, ttl_);

    for (const auto& [owner, include_subdomains] : httpreq_)
      add_set(owner, dns::rrtype::HTTPREQ, {dns::HttpreqData{include_subdomains}.encode()}, ttl_);

    for (const auto& d : delegations_) {
      // Delegation NS is not authoritative and stays unsigned.
      dns::Rrset ns;
      ns.owner = d.child;
      ns.type = dns::rrtype::NS;
      ns.ttl = ttl_;
      ns.rdatas.push_back(dns::encode_ns(child_ns_host(d.child)));
      zone.unsigned_rrsets_.push_back(std::move(ns));
      type_map[d.child].push_back(dns::rrtype::NS);
      if (d.ds) add_set(d.child, dns::rrtype::DS, {d.ds->encode()}, ttl_);
    }

    // Closed NSEC chain in canonical name order.
    std::vector<dns::Name> names;
    for (const auto& [name, types] : type_map) names.push_back(name);
    std::sort(names.begin(), names.end());
    for (std::size_t i = 0; i < names.size(); ++i) {
      dns::NsecData nsec;
      nsec.next = names[(i + 1) % names.size()];
      nsec.types = type_map[names[i]];
      nsec.types.push_back(dns::rrtype::NSEC);
      nsec.types.push_back(dns::rrtype::RRSIG);
      std::sort(nsec.types.begin(), nsec.types.end());
      nsec.types.erase(std::unique(nsec.types.begin(), nsec.types.end()), nsec.types.end());
      dns::Rrset s;
      s.owner = names[i];
      s.type = dns::rrtype::NSEC;
      s.ttl = soa_minimum_;
      s.rdatas.push_back(nsec.encode());
      to_sign.push_back(std::move(s));
    }
    zone.names_ = names;

    for (auto& rrset : to_sign) {
      auto sorted = rrset.rdatas;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ZoneBuildError("duplicate RDATA in RRset at " + rrset.owner.text());
      zone.signed_rrsets_.push_back(sign_rrset(zone.key_, dnskey, apex_, rrset, inception, expiration));
    }
    return zone;
  }

  /// Signs a single RRset with a zone key; exposed so tests can build
  /// hand-crafted proofs.
  static dnssec::RrsetWithProof sign_rrset(const dnssec::SigningKey& key,
                                           const dns::DnskeyData& dnskey, const dns::Name& signer,
                                           const dns::Rrset& rrset, std::int64_t inception,
                                           std::int64_t expiration) {
    dns::RrsigData sig;
    sig.type_covered = rrset.type;
    sig.algorithm = dnskey.algorithm;
    sig.labels = static_cast<std::uint8_t>(rrset.owner.label_count());
    sig.original_ttl = rrset.ttl;
    sig.inception = static_cast<std::uint32_t>(inception);
    sig.expiration = static_cast<std::uint32_t>(expiration);
    sig.key_tag = dnssec::key_tag(dnskey.encode());
    sig.signer = signer;
    dnssec::RrsetWithProof proofed{rrset, sig};
    proofed.rrsig.signature = key.sign(dnssec::rrsig_signed_data(rrset, sig));
    return proofed;
  }

private:
  dns::Name prefixed(const std::string& label) const {
    std::vector<std::string> labels;
    labels.push_back(label);
    for (const auto& l : apex_.labels()) labels.push_back(l);
    return dns::Name{std::move(labels)};
  }

  static dns::Name child_ns_host(const dns::Name& child) {
    std::vector<std::string> labels;
    labels.push_back("ns");
    for (const auto& l : child.labels()) labels.push_back(l);
    return dns::Name{std::move(labels)};
  }

  dns::Name apex_;
  dnssec::Algorithm algorithm_;
  std::uint32_t ttl_ = 3600;
  std::uint32_t soa_minimum_ = 300;
  std::vector<std::pair<dns::Name, bool>> httpreq_;
  std::vector<SignedZone::Delegation> delegations_;
  std::optional<std::int64_t> inception_;
  std::optional<std::int64_t> expiration_;
};

}  // namespace hstse::sim
