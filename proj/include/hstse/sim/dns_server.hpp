#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hstse/dns/message.hpp"
#include "hstse/resolver/stub.hpp"
#include "hstse/sim/clock.hpp"
#include "hstse/sim/zone.hpp"

namespace hstse::sim {

/// Recursive resolver model: it holds every zone and answers validating
/// stub queries with full RRSIG (and NSEC/SOA for negatives) material. A
/// zone may be registered as unsigned, in which case its answers carry no
/// signatures, exactly like a zone whose operator never deployed DNSSEC.
class RecursiveServer {
public:
  void add_zone(SignedZone zone, bool serve_signed = true) {
    zones_.push_back({std::move(zone), serve_signed});
  }

  dns::DnsMessage answer(const dns::DnsMessage& query) const {
    dns::DnsMessage resp;
    resp.id = query.id;
    resp.qr = true;
    resp.rd = query.rd;
    resp.ra = true;
    resp.ad = true;
    resp.questions = query.questions;
    resp.additional.push_back(dns::make_opt_record(true));
    if (query.questions.empty()) {
      resp.rcode = dns::rcode::SERVFAIL;
      return resp;
    }
    const dns::Question& q = query.questions.front();
    const Entry* entry = zone_for(q.qname, q.qtype);
    if (entry == nullptr) {
      resp.rcode = dns::rcode::SERVFAIL;
      return resp;
    }
    const SignedZone& zone = entry->zone;
    bool with_sigs = entry->serve_signed;

    if (const auto* proofed = zone.find(q.qname, q.qtype)) {
      append_rrset(resp.answers, *proofed, with_sigs);
      return resp;
    }
    // Subdomain coverage: an ancestor HTTPREQ record flagged for
    // subdomains answers queries for names beneath it.
    if (q.qtype == dns::rrtype::HTTPREQ) {
      for (dns::Name owner = q.qname.parent(); owner.is_subdomain_of(zone.apex());
           owner = owner.parent()) {
        if (const auto* rec = zone.find(owner, dns::rrtype::HTTPREQ)) {
          dns::HttpreqData flags = dns::HttpreqData::decode(rec->rrset.rdatas.front());
          if (flags.include_subdomains) {
            append_rrset(resp.answers, *rec, with_sigs);
            return resp;
          }
        }
        if (owner == zone.apex()) break;
      }
    }
    if (const auto* delegation_ns = zone.find_unsigned(q.qname, q.qtype)) {
      // Delegation NS sets are served unsigned from the parent.
      for (const auto& rdata : delegation_ns->rdatas)
        resp.answers.push_back(
            {delegation_ns->owner, delegation_ns->type, dns::kClassIn, delegation_ns->ttl, rdata});
      return resp;
    }

    // Negative answer with proof of absence.
    if (!zone.name_exists(q.qname)) resp.rcode = dns::rcode::NXDOMAIN;
    append_rrset(resp.authority, zone.soa_proof(), with_sigs);
    append_rrset(resp.authority, zone.covering_nsec(q.qname), with_sigs);
    return resp;
  }

private:
  struct Entry {
    SignedZone zone;
    bool serve_signed;
  };

  // Deepest apex containing the name; DS queries at a zone apex are owned
  // by the delegating parent.
  const Entry* zone_for(const dns::Name& qname, std::uint16_t qtype) const {
    const Entry* best = nullptr;
    for (const auto& e : zones_) {
      if (!qname.is_subdomain_of(e.zone.apex())) continue;
      if (qtype == dns::rrtype::DS && qname == e.zone.apex()) continue;
      if (best == nullptr || e.zone.apex().label_count() > best->zone.apex().label_count())
        best = &e;
    }
    return best;
  }

  static void append_rrset(std::vector<dns::ResourceRecord>& section,
                           const dnssec::RrsetWithProof& proofed, bool with_sigs) {
    for (const auto& rdata : proofed.rrset.rdatas)
      section.push_back(
          {proofed.rrset.owner, proofed.rrset.type, proofed.rrset.rr_class, proofed.rrset.ttl, rdata});
    if (with_sigs)
      section.push_back({proofed.rrset.owner, dns::rrtype::RRSIG, proofed.rrset.rr_class,
                         proofed.rrset.ttl, proofed.rrsig.encode()});
  }

  std::vector<Entry> zones_;
};

/// On-path attacker capabilities against the DNS leg.
struct DnsAttacker {
  bool drop_dns = false;       // drop every response
  bool tamper_rrsig = false;   // flip a signature byte in transit
  bool strip_httpreq = false;  // remove HTTPREQ answers from responses
};

/// Virtual-clock datagram link between the stub and the recursive server.
/// Each exchange costs one RTT plus a fixed server processing budget; a
/// dropped response costs the caller's full timeout.
class SimDnsTransport : public resolver::Transport {
public:
  SimDnsTransport(const RecursiveServer& server, ClockPtr clock, std::int64_t rtt_ms,
                  std::int64_t processing_ms = 2, DnsAttacker attacker = {})
      : server_(server),
        clock_(std::move(clock)),
        rtt_ms_(rtt_ms),
        processing_ms_(processing_ms),
        attacker_(attacker) {}

  std::optional<Bytes> exchange(const Bytes& query_bytes, std::int64_t timeout_ms) override {
    dns::DnsMessage query;
    try {
      query = dns::DnsMessage::decode(query_bytes);
    } catch (const WireError&) {
      clock_->advance_ms(timeout_ms);
      return std::nullopt;
    }
    if (attacker_.drop_dns) {
      clock_->advance_ms(timeout_ms);
      return std::nullopt;
    }
    dns::DnsMessage resp = server_.answer(query);
    if (attacker_.strip_httpreq && !query.questions.empty() &&
        query.questions.front().qtype == dns::rrtype::HTTPREQ) {
      resp.answers.clear();
      resp.authority.clear();
    }
    if (attacker_.tamper_rrsig) tamper_first_signature(resp);
    clock_->advance_ms(rtt_ms_ + processing_ms_);
    return resp.encode();
  }

  std::int64_t rtt_ms() const { return rtt_ms_; }

private:
  static void tamper_first_signature(dns::DnsMessage& resp) {
    for (auto* section : {&resp.answers, &resp.authority})
      for (auto& rr : *section)
        if (rr.type == dns::rrtype::RRSIG && !rr.rdata.empty()) {
          rr.rdata.back() ^= 0x01;  // inside the signature field
          return;
        }
  }

  const RecursiveServer& server_;
  ClockPtr clock_;
  std::int64_t rtt_ms_;
  std::int64_t processing_ms_;
  DnsAttacker attacker_;
};

}  // namespace hstse::sim
