#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "hstse/dnssec/chain.hpp"

namespace hstse::resolver {

/// TTL-bounded store of verified answers, keyed by (name, type). Positive
/// entries hold the proofed RRset; negative entries hold the NSEC+SOA
/// proof and live for the SOA minimum. Only validated material may be
/// inserted, so the cache can never serve an attacker-injected record.
class CacheStore {
public:
  struct Entry {
    std::optional<dnssec::RrsetWithProof> positive;
    std::optional<dnssec::NegativeProof> negative;
    dnssec::AnchorKind anchor_kind = dnssec::AnchorKind::Root;
    std::int64_t inserted_at = 0;
    std::int64_t ttl = 0;

    bool live(std::int64_t now) const { return now < inserted_at + ttl; }
  };

  void put(const dns::Name& name, std::uint16_t type, dnssec::RrsetWithProof proofed,
           dnssec::AnchorKind anchor_kind, std::int64_t now) {
    Entry e;
    e.ttl = proofed.rrset.ttl;
    e.positive = std::move(proofed);
    e.anchor_kind = anchor_kind;
    e.inserted_at = now;
    std::unique_lock lock(mutex_);
    entries_[key(name, type)] = std::move(e);
  }

  void put_negative(const dns::Name& name, std::uint16_t type, dnssec::NegativeProof proof,
                    dnssec::AnchorKind anchor_kind, std::int64_t now) {
    Entry e;
    std::uint32_t soa_minimum = 0;
    try {
      soa_minimum = dns::SoaData::decode(proof.soa.rrset.rdatas.front()).minimum;
    } catch (const WireError&) {
    }
    e.ttl = std::min<std::int64_t>(soa_minimum, proof.soa.rrset.ttl);
    e.negative = std::move(proof);
    e.anchor_kind = anchor_kind;
    e.inserted_at = now;
    std::unique_lock lock(mutex_);
    entries_[key(name, type)] = std::move(e);
  }

  std::optional<Entry> get(const dns::Name& name, std::uint16_t type, std::int64_t now) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key(name, type));
    if (it == entries_.end() || !it->second.live(now)) return std::nullopt;
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  void purge_expired(std::int64_t now) {
    std::unique_lock lock(mutex_);
    for (auto it = entries_.begin(); it != entries_.end();)
      it = it->second.live(now) ? std::next(it) : entries_.erase(it);
  }

private:
  static std::pair<std::string, std::uint16_t> key(const dns::Name& name, std::uint16_t type) {
    return {name.lowered().text(), type};
  }

  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::uint16_t>, Entry> entries_;
};

}  // namespace hstse::resolver
