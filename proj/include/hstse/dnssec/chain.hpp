#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hstse/dns/records.hpp"
#include "hstse/dnssec/anchors.hpp"
#include "hstse/dnssec/verify.hpp"

namespace hstse::dnssec {

/// One zone on the path from an anchor to the target: the zone's DNSKEY
/// RRset (self-signed) plus the downward linkage toward the next zone —
/// either a signed DS RRset or an NSEC proof that the delegation is
/// unsigned. The last link carries neither.
struct ZoneLink {
  RrsetWithProof dnskeys;
  std::optional<RrsetWithProof> child_ds;
  std::optional<RrsetWithProof> child_ds_absent_nsec;

  const dns::Name& apex() const { return dnskeys.rrset.owner; }
};

/// Signed negative answer: NSEC at/covering the name plus the zone SOA.
struct NegativeProof {
  RrsetWithProof nsec;
  RrsetWithProof soa;
};

struct DnsChain {
  dns::Name target;
  std::vector<ZoneLink> links;  // anchor zone first, descending toward target
  std::optional<RrsetWithProof> httpreq;
  std::optional<NegativeProof> absence;
};

enum class ValidationState { SecurePresent, SecureAbsent, Insecure, Bogus };

struct ValidationResult {
  ValidationState state = ValidationState::Bogus;
  bool include_subdomains = false;      // meaningful for SecurePresent
  AnchorKind anchor_kind = AnchorKind::Root;  // meaningful for Secure*
  std::string diagnostic;

  static ValidationResult bogus(std::string why) {
    return {ValidationState::Bogus, false, AnchorKind::Root, std::move(why)};
  }
};

inline const char* validation_state_name(ValidationState s) {
  switch (s) {
    case ValidationState::SecurePresent: return "secure_present";
    case ValidationState::SecureAbsent: return "secure_absent";
    case ValidationState::Insecure: return "insecure";
    case ValidationState::Bogus: return "bogus";
  }
  return "?";
}

namespace detail {

// True when `name` falls in the span proven empty by an NSEC record
// (canonical order, wrapping at the zone apex).
inline bool nsec_covers_name(const dns::Name& owner, const dns::Name& next, const dns::Name& name) {
  int on = dns::Name::canonical_compare(owner, name);
  int nn = dns::Name::canonical_compare(name, next);
  int wrap = dns::Name::canonical_compare(next, owner);
  if (wrap > 0) return on < 0 && nn < 0;
  // next <= owner: chain wraps; covered when past the owner or before next.
  return on < 0 || nn < 0;
}

inline ValidationResult walk_from(const DnsChain& chain, const TrustAnchor& anchor,
                                  std::size_t start, std::int64_t now) {
  for (std::size_t i = start; i < chain.links.size(); ++i) {
    const ZoneLink& link = chain.links[i];
    const dns::Rrset& keyset = link.dnskeys.rrset;
    if (keyset.type != dns::rrtype::DNSKEY)
      return ValidationResult::bogus("link keyset is not DNSKEY");
    if (!(link.dnskeys.rrsig.signer == link.apex()))
      return ValidationResult::bogus("DNSKEY RRset not signed at its own apex");

    // Establish trust in this zone's keys.
    if (i == start) {
      bool anchored = false;
      for (const auto& rdata : keyset.rdatas) {
        dns::DnskeyData key;
        try {
          key = dns::DnskeyData::decode(rdata);
        } catch (const WireError&) {
          continue;
        }
        if (anchor.matches_dnskey(link.apex(), key) &&
            verify_rrset(link.dnskeys, key, now) == VerifyStatus::Ok) {
          anchored = true;
          break;
        }
      }
      if (!anchored)
        return ValidationResult::bogus("DNSKEY set at " + link.apex().text() +
                                       " does not match the trust anchor");
    } else {
      const ZoneLink& parent = chain.links[i - 1];
      if (!parent.child_ds)
        return ValidationResult::bogus("missing DS linkage above " + link.apex().text());
      bool linked = false;
      for (const auto& ds_rdata : parent.child_ds->rrset.rdatas) {
        dns::DsData ds;
        try {
          ds = dns::DsData::decode(ds_rdata);
        } catch (const WireError&) {
          continue;
        }
        if (ds.digest_type != 2) continue;
        for (const auto& key_rdata : keyset.rdatas) {
          dns::DnskeyData key;
          try {
            key = dns::DnskeyData::decode(key_rdata);
          } catch (const WireError&) {
            continue;
          }
          if (ds.key_tag == key_tag(key_rdata) && ds.algorithm == key.algorithm &&
              ds.digest == ds_digest(link.apex(), key_rdata) &&
              verify_rrset(link.dnskeys, key, now) == VerifyStatus::Ok) {
            linked = true;
            break;
          }
        }
        if (linked) break;
      }
      if (!linked)
        return ValidationResult::bogus("DS/DNSKEY mismatch at " + link.apex().text());
    }

    bool last = i + 1 == chain.links.size();
    if (!last) {
      const dns::Name& child_apex = chain.links[i + 1].apex();
      if (!child_apex.is_subdomain_of(link.apex()) || child_apex == link.apex())
        return ValidationResult::bogus("zone apexes do not descend toward the target");
      if (link.child_ds) {
        if (!(link.child_ds->rrset.owner == child_apex) ||
            link.child_ds->rrset.type != dns::rrtype::DS)
          return ValidationResult::bogus("DS RRset does not cover the child apex");
        if (verify_with_keyset(*link.child_ds, keyset, now) != VerifyStatus::Ok)
          return ValidationResult::bogus("DS RRset verification failed at " + link.apex().text());
      } else {
        return ValidationResult::bogus("no downward linkage at " + link.apex().text());
      }
      continue;
    }

    // Last link: unsigned-delegation proof or a terminal answer.
    if (link.child_ds_absent_nsec) {
      const RrsetWithProof& proof = *link.child_ds_absent_nsec;
      if (proof.rrset.type != dns::rrtype::NSEC || proof.rrset.rdatas.size() != 1)
        return ValidationResult::bogus("malformed DS-absence proof");
      if (verify_with_keyset(proof, keyset, now) != VerifyStatus::Ok)
        return ValidationResult::bogus("DS-absence NSEC verification failed");
      dns::NsecData nsec;
      try {
        nsec = dns::NsecData::decode(proof.rrset.rdatas.front());
      } catch (const WireError&) {
        return ValidationResult::bogus("undecodable NSEC in DS-absence proof");
      }
      if (!chain.target.is_subdomain_of(proof.rrset.owner))
        return ValidationResult::bogus("DS-absence NSEC does not cover the target path");
      if (!nsec.covers_type(dns::rrtype::NS) || nsec.covers_type(dns::rrtype::DS))
        return ValidationResult::bogus("NSEC does not prove an unsigned delegation");
      return {ValidationState::Insecure, false, anchor.kind,
              "unsigned delegation at " + proof.rrset.owner.text()};
    }

    if (chain.httpreq) {
      const RrsetWithProof& answer = *chain.httpreq;
      if (answer.rrset.type != dns::rrtype::HTTPREQ || answer.rrset.rdatas.size() != 1)
        return ValidationResult::bogus("terminal HTTPREQ RRset malformed");
      if (!answer.rrset.owner.is_subdomain_of(link.apex()))
        return ValidationResult::bogus("HTTPREQ owner outside the terminal zone");
      dns::HttpreqData flags;
      try {
        flags = dns::HttpreqData::decode(answer.rrset.rdatas.front());
      } catch (const WireError& e) {
        return ValidationResult::bogus(std::string("bad HTTPREQ RDATA: ") + e.what());
      }
      if (!(answer.rrset.owner == chain.target)) {
        bool ancestor = chain.target.is_subdomain_of(answer.rrset.owner);
        if (!ancestor || !flags.include_subdomains)
          return ValidationResult::bogus("HTTPREQ record does not apply to the target name");
      }
      if (verify_with_keyset(answer, keyset, now) != VerifyStatus::Ok)
        return ValidationResult::bogus("HTTPREQ RRset verification failed");
      return {ValidationState::SecurePresent, flags.include_subdomains, anchor.kind, {}};
    }

    if (chain.absence) {
      const NegativeProof& neg = *chain.absence;
      if (neg.soa.rrset.type != dns::rrtype::SOA || !(neg.soa.rrset.owner == link.apex()))
        return ValidationResult::bogus("negative proof SOA missing or misplaced");
      if (verify_with_keyset(neg.soa, keyset, now) != VerifyStatus::Ok)
        return ValidationResult::bogus("SOA verification failed in negative proof");
      if (neg.nsec.rrset.type != dns::rrtype::NSEC || neg.nsec.rrset.rdatas.size() != 1)
        return ValidationResult::bogus("negative proof NSEC malformed");
      if (verify_with_keyset(neg.nsec, keyset, now) != VerifyStatus::Ok)
        return ValidationResult::bogus("NSEC verification failed in negative proof");
      dns::NsecData nsec;
      try {
        nsec = dns::NsecData::decode(neg.nsec.rrset.rdatas.front());
      } catch (const WireError&) {
        return ValidationResult::bogus("undecodable NSEC in negative proof");
      }
      if (neg.nsec.rrset.owner == chain.target) {
        if (nsec.covers_type(dns::rrtype::HTTPREQ))
          return ValidationResult::bogus("NSEC claims HTTPREQ exists at the target");
      } else if (!nsec_covers_name(neg.nsec.rrset.owner, nsec.next, chain.target)) {
        return ValidationResult::bogus("NSEC does not cover the target name");
      }
      return {ValidationState::SecureAbsent, false, anchor.kind, {}};
    }

    return ValidationResult::bogus("chain has no terminal proof");
  }
  return ValidationResult::bogus("empty chain");
}

}  // namespace detail

/// Validates a chain bottom-anchored at the best in-scope trust anchor.
/// Every failure mode folds into the result enum; callers upstream treat
/// anything but SecurePresent/SecureAbsent/Insecure-as-designed as "no
/// indicator" (fail secure).
inline ValidationResult validate_chain(const DnsChain& chain,
                                       const std::vector<TrustAnchor>& anchors, std::int64_t now) {
  int terminals = (chain.httpreq ? 1 : 0) + (chain.absence ? 1 : 0) +
                  ((!chain.links.empty() && chain.links.back().child_ds_absent_nsec) ? 1 : 0);
  if (terminals != 1) return ValidationResult::bogus("chain must terminate in exactly one proof");
  if (chain.links.empty()) return ValidationResult::bogus("empty chain");

  std::string last_diag = "no trust anchor in scope for " + chain.target.text();
  for (const auto& anchor : select_anchors(anchors, chain.target)) {
    for (std::size_t i = 0; i < chain.links.size(); ++i) {
      if (!(chain.links[i].apex() == anchor.scope)) continue;
      ValidationResult r = detail::walk_from(chain, anchor, i, now);
      if (r.state != ValidationState::Bogus) return r;
      last_diag = std::move(r.diagnostic);
    }
  }
  return ValidationResult::bogus(last_diag);
}

}  // namespace hstse::dnssec
