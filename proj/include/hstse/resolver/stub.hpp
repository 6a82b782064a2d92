#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hstse/dns/message.hpp"
#include "hstse/dnssec/chain.hpp"
#include "hstse/resolver/cache.hpp"

namespace hstse::resolver {

/// Datagram path to a recursive resolver. Implementations block for at most
/// `timeout_ms` and return nothing on timeout or drop.
class Transport {
public:
  virtual ~Transport() = default;
  virtual std::optional<Bytes> exchange(const Bytes& query, std::int64_t timeout_ms) = 0;
};

struct StubConfig {
  std::int64_t query_timeout_ms = 2000;
  int retries = 1;  // one retry, then fail secure
  std::uint16_t first_message_id = 0x1000;
};

struct ResolutionMetrics {
  struct Message {
    std::uint16_t qtype = 0;
    bool response = false;
    std::size_t size_bytes = 0;
    int rtt_index = 0;  // 1-based query step
  };

  int round_trips = 0;  // cache-missing query steps executed
  std::vector<Message> messages;
  std::int64_t wall_ms = 0;
  std::size_t domain_length = 0;

  std::optional<std::size_t> response_size(std::uint16_t qtype, const std::string& = {}) const {
    for (const auto& m : messages)
      if (m.response && m.qtype == qtype) return m.size_bytes;
    return std::nullopt;
  }

  std::string to_csv() const {
    std::string out = "query_type,size_bytes,rtt_index\n";
    for (const auto& m : messages) {
      if (!m.response) continue;
      out += dns::rrtype_name(m.qtype) + "," + std::to_string(m.size_bytes) + "," +
             std::to_string(m.rtt_index) + "\n";
    }
    return out;
  }
};

struct ResolutionQuery {
  dns::Name qname;
  std::uint16_t qtype = 0;
};

/// Validating stub for the HTTP-Required indicator: plans the minimal
/// query sequence against the cache, executes it sequentially, verifies the
/// resulting chain locally, and only then caches anything.
class StubResolver {
public:
  explicit StubResolver(std::vector<dnssec::TrustAnchor> anchors, StubConfig config = {})
      : anchors_(std::move(anchors)), config_(config), id_counter_(config.first_message_id) {}

  const std::vector<dnssec::TrustAnchor>& anchors() const { return anchors_; }

  /// Bottom-up need-driven plan: the indicator record itself, then key/DS
  /// material for every zone cut between the target's zone and the nearest
  /// in-scope anchor zone. Zone cuts are assumed at every label boundary
  /// until answers prove otherwise; resolve() re-plans as signer names
  /// come in.
  std::vector<ResolutionQuery> plan_queries(const dns::Name& target, const CacheStore& cache,
                                            std::int64_t now) const {
    return plan_from(target, target, cache, now);
  }

  struct Answer {
    dnssec::ValidationResult validation;
    ResolutionMetrics metrics;
  };

  /// Executes the plan over `transport`, validating via the chain walker.
  /// Every transport failure, SERVFAIL, or unverifiable answer collapses to
  /// Bogus; callers upstream treat that as "HSTS stays enabled".
  Answer resolve_httpreq(const dns::Name& target, CacheStore& cache, Transport& transport,
                         const std::function<std::int64_t()>& now_ms) {
    ResolutionMetrics metrics;
    metrics.domain_length = target.text().size();
    std::int64_t start_ms = now_ms();
    auto finish = [&](dnssec::ValidationResult r) {
      metrics.wall_ms = now_ms() - start_ms;
      return Answer{std::move(r), std::move(metrics)};
    };

    std::int64_t now_s = now_ms() / 1000;

    // A still-live verified answer ends the resolution immediately.
    if (auto cached = cache.get(target, dns::rrtype::HTTPREQ, now_s)) {
      if (cached->positive) {
        dns::HttpreqData flags;
        try {
          flags = dns::HttpreqData::decode(cached->positive->rrset.rdatas.front());
        } catch (const WireError&) {
          return finish(dnssec::ValidationResult::bogus("cached HTTPREQ undecodable"));
        }
        return finish({dnssec::ValidationState::SecurePresent, flags.include_subdomains,
                       cached->anchor_kind, "cache"});
      }
      return finish(
          {dnssec::ValidationState::SecureAbsent, false, cached->anchor_kind, "cache"});
    }

    // Working state gathered from answers.
    WorkingState state;
    state.bottom_zone = target;

    int step = 0;
    for (;;) {
      std::vector<ResolutionQuery> plan = pending_queries(target, cache, state, now_s);
      if (plan.empty()) break;
      const ResolutionQuery& q = plan.front();
      ++step;
      ++metrics.round_trips;

      dns::DnsMessage query = dns::make_query(next_id(), q.qname, q.qtype);
      Bytes query_bytes = query.encode();
      metrics.messages.push_back({q.qtype, false, query_bytes.size(), step});

      std::optional<Bytes> reply;
      for (int attempt = 0; attempt <= config_.retries && !reply; ++attempt)
        reply = transport.exchange(query_bytes, config_.query_timeout_ms);
      if (!reply)
        return finish(dnssec::ValidationResult::bogus("query timeout for " + q.qname.text()));
      metrics.messages.push_back({q.qtype, true, reply->size(), step});

      dns::DnsMessage response;
      try {
        response = dns::DnsMessage::decode(*reply);
      } catch (const WireError& e) {
        return finish(dnssec::ValidationResult::bogus(std::string("undecodable response: ") + e.what()));
      }
      if (response.rcode != dns::rcode::NOERROR && response.rcode != dns::rcode::NXDOMAIN)
        return finish(dnssec::ValidationResult::bogus("server failure for " + q.qname.text()));

      if (!ingest_answer(q, response, state))
        return finish(dnssec::ValidationResult::bogus("unusable answer for " + q.qname.text()));
    }
    const auto& fetched = state.fetched;
    const auto& httpreq_answer = state.httpreq_answer;
    const auto& httpreq_negative = state.httpreq_negative;
    const auto& ds_absence = state.ds_absence;
    const dns::Name& bottom_zone = state.bottom_zone;

    // Assemble the chain from the anchor zone down to the bottom zone.
    dnssec::DnsChain chain;
    chain.target = target;
    dns::Name anchor_zone = nearest_anchor_zone(target);
    std::vector<dns::Name> zones;
    for (dns::Name z = bottom_zone;; z = z.parent()) {
      zones.push_back(z);
      if (z == anchor_zone || z.is_root()) break;
    }
    std::reverse(zones.begin(), zones.end());
    for (std::size_t i = 0; i < zones.size(); ++i) {
      auto dnskeys = lookup_state(zones[i], dns::rrtype::DNSKEY, cache, fetched, now_s);
      if (!dnskeys)
        return finish(dnssec::ValidationResult::bogus("missing DNSKEY for " + zones[i].text()));
      dnssec::ZoneLink link{*dnskeys, std::nullopt, std::nullopt};
      if (i + 1 < zones.size()) {
        auto ds = lookup_state(zones[i + 1], dns::rrtype::DS, cache, fetched, now_s);
        if (!ds)
          return finish(dnssec::ValidationResult::bogus("missing DS for " + zones[i + 1].text()));
        link.child_ds = *ds;
      } else if (ds_absence) {
        link.child_ds_absent_nsec = *ds_absence;
      }
      chain.links.push_back(std::move(link));
    }
    if (!ds_absence) {
      if (httpreq_answer)
        chain.httpreq = *httpreq_answer;
      else if (httpreq_negative)
        chain.absence = *httpreq_negative;
      else
        return finish(dnssec::ValidationResult::bogus("no terminal answer gathered"));
    }

    dnssec::ValidationResult result = dnssec::validate_chain(chain, anchors_, now_ms() / 1000);

    // Populate the cache only after full validation.
    if (result.state == dnssec::ValidationState::SecurePresent ||
        result.state == dnssec::ValidationState::SecureAbsent) {
      for (const auto& link : chain.links) {
        cache.put(link.apex(), dns::rrtype::DNSKEY, link.dnskeys, result.anchor_kind, now_s);
        if (link.child_ds)
          cache.put(link.child_ds->rrset.owner, dns::rrtype::DS, *link.child_ds,
                    result.anchor_kind, now_s);
      }
      if (chain.httpreq)
        cache.put(target, dns::rrtype::HTTPREQ, *chain.httpreq, result.anchor_kind, now_s);
      else if (chain.absence)
        cache.put_negative(target, dns::rrtype::HTTPREQ, *chain.absence, result.anchor_kind,
                           now_s);
    }
    return finish(std::move(result));
  }

private:
  // The deepest anchor scope that contains the target; planning stops there.
  dns::Name nearest_anchor_zone(const dns::Name& target) const {
    auto in_scope = dnssec::select_anchors(anchors_, target);
    if (in_scope.empty()) return dns::Name::root();
    return in_scope.front().scope;
  }

  std::vector<ResolutionQuery> plan_from(const dns::Name& target, const dns::Name& bottom_zone,
                                         const CacheStore& cache, std::int64_t now) const {
    std::vector<ResolutionQuery> out;
    auto cached_positive = [&](const dns::Name& n, std::uint16_t t) {
      auto e = cache.get(n, t, now);
      return e && e->positive;
    };
    if (cache.get(target, dns::rrtype::HTTPREQ, now)) return out;
    out.push_back({target, dns::rrtype::HTTPREQ});
    dns::Name anchor_zone = nearest_anchor_zone(target);
    for (dns::Name z = bottom_zone;; z = z.parent()) {
      if (!cached_positive(z, dns::rrtype::DNSKEY)) out.push_back({z, dns::rrtype::DNSKEY});
      if (z == anchor_zone || z.is_root()) break;
      if (!cached_positive(z, dns::rrtype::DS)) out.push_back({z, dns::rrtype::DS});
    }
    return out;
  }

  struct WorkingState {
    std::map<std::pair<std::string, std::uint16_t>, dnssec::RrsetWithProof> fetched;
    std::optional<dnssec::RrsetWithProof> httpreq_answer;
    std::optional<dnssec::NegativeProof> httpreq_negative;
    // The target's zone (or its delegation point) answered without
    // signatures; true security state hinges on a DS-absence proof above.
    bool unsigned_terminal = false;
    std::optional<dnssec::RrsetWithProof> ds_absence;
    dns::Name bottom_zone;
    bool bottom_known = false;
  };

  // Remaining queries given everything fetched so far.
  std::vector<ResolutionQuery> pending_queries(const dns::Name& target, const CacheStore& cache,
                                               const WorkingState& state, std::int64_t now) const {
    std::vector<ResolutionQuery> out;
    auto have = [&](const dns::Name& n, std::uint16_t t) {
      if (state.fetched.count({n.lowered().text(), t})) return true;
      auto e = cache.get(n, t, now);
      return e && e->positive;
    };
    bool terminal_known =
        state.httpreq_answer || state.httpreq_negative || state.unsigned_terminal;
    if (!terminal_known) {
      out.push_back({target, dns::rrtype::HTTPREQ});
      return out;
    }
    dns::Name anchor_zone = nearest_anchor_zone(target);
    if (state.unsigned_terminal && !state.ds_absence) {
      // Probe for the delegation's DS to learn whether the missing
      // signatures are legitimate (insecure zone) or stripped. A DS that
      // does exist means the zone is signed and the answer cannot be
      // trusted; nothing more to ask.
      if (!have(state.bottom_zone, dns::rrtype::DS))
        out.push_back({state.bottom_zone, dns::rrtype::DS});
      return out;
    }
    for (dns::Name z = state.bottom_zone;; z = z.parent()) {
      if (!have(z, dns::rrtype::DNSKEY)) out.push_back({z, dns::rrtype::DNSKEY});
      if (z == anchor_zone || z.is_root()) break;
      if (!have(z, dns::rrtype::DS)) out.push_back({z, dns::rrtype::DS});
    }
    return out;
  }

  bool ingest_answer(const ResolutionQuery& q, const dns::DnsMessage& response,
                     WorkingState& state) {
    auto answer = dns::group_rrsets(response.answers);
    auto authority = dns::group_rrsets(response.authority);

    auto proof_for = [](const dns::SectionRrsets& section,
                        const dns::Rrset& rrset) -> std::optional<dns::RrsigData> {
      for (const auto& sig_rr : section.rrsigs) {
        if (!(sig_rr.owner == rrset.owner)) continue;
        dns::RrsigData sig;
        try {
          sig = dns::RrsigData::decode(sig_rr.rdata);
        } catch (const WireError&) {
          continue;
        }
        if (sig.type_covered == rrset.type) return sig;
      }
      return std::nullopt;
    };

    // Positive answer: exact owner, or an ancestor-owned HTTPREQ record
    // (the validator checks its subdomain flag).
    for (const auto& rrset : answer.rrsets) {
      if (rrset.type != q.qtype) continue;
      bool owner_ok = rrset.owner == q.qname ||
                      (q.qtype == dns::rrtype::HTTPREQ && q.qname.is_subdomain_of(rrset.owner));
      if (!owner_ok) continue;
      auto sig = proof_for(answer, rrset);
      if (!sig) {
        if (q.qtype == dns::rrtype::HTTPREQ && !state.unsigned_terminal) {
          state.unsigned_terminal = true;  // possibly a legitimately unsigned zone
          return true;
        }
        return false;
      }
      dnssec::RrsetWithProof proofed{rrset, *sig};
      if (q.qtype == dns::rrtype::HTTPREQ) {
        state.httpreq_answer = proofed;
        // The signer name reveals the target's true zone.
        if (!state.bottom_known) {
          state.bottom_zone = sig->signer;
          state.bottom_known = true;
        }
      }
      state.fetched[{rrset.owner.lowered().text(), rrset.type}] = std::move(proofed);
      return true;
    }

    // Negative answer: SOA + NSEC in the authority section.
    std::optional<dnssec::RrsetWithProof> soa;
    std::optional<dnssec::RrsetWithProof> nsec;
    bool saw_unsigned_soa = false;
    for (const auto& rrset : authority.rrsets) {
      auto sig = proof_for(authority, rrset);
      if (!sig) {
        if (rrset.type == dns::rrtype::SOA) saw_unsigned_soa = true;
        continue;
      }
      if (rrset.type == dns::rrtype::SOA) soa = dnssec::RrsetWithProof{rrset, *sig};
      if (rrset.type == dns::rrtype::NSEC && !nsec) nsec = dnssec::RrsetWithProof{rrset, *sig};
    }

    if (!soa || !nsec) {
      if (q.qtype == dns::rrtype::HTTPREQ && saw_unsigned_soa && !state.unsigned_terminal) {
        state.unsigned_terminal = true;
        return true;
      }
      return false;
    }

    if (q.qtype == dns::rrtype::HTTPREQ) {
      state.httpreq_negative = dnssec::NegativeProof{*nsec, *soa};
      if (!state.bottom_known) {
        state.bottom_zone = soa->rrset.owner;
        state.bottom_known = true;
      }
      return true;
    }
    if (q.qtype == dns::rrtype::DS) {
      state.ds_absence = *nsec;
      // The NSEC's signer is the delegating parent; the chain is built
      // down to that zone.
      state.bottom_zone = nsec->rrsig.signer;
      state.bottom_known = true;
      return true;
    }
    return false;  // negative DNSKEY answers leave the chain unbuildable
  }

  std::optional<dnssec::RrsetWithProof> lookup_state(
      const dns::Name& name, std::uint16_t type, const CacheStore& cache,
      const std::map<std::pair<std::string, std::uint16_t>, dnssec::RrsetWithProof>& fetched,
      std::int64_t now) const {
    auto it = fetched.find({name.lowered().text(), type});
    if (it != fetched.end()) return it->second;
    auto e = cache.get(name, type, now);
    if (e && e->positive) return e->positive;
    return std::nullopt;
  }

  std::uint16_t next_id() { return id_counter_++; }

  std::vector<dnssec::TrustAnchor> anchors_;
  StubConfig config_;
  std::uint16_t id_counter_ = 0x1000;
};

}  // namespace hstse::resolver
