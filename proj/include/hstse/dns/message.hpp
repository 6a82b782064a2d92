#pragma once

#include <cstdint>
#include <vector>

#include "hstse/dns/name.hpp"
#include "hstse/dns/records.hpp"
#include "hstse/util/bytes.hpp"

namespace hstse::dns {

namespace rcode {
inline constexpr std::uint8_t NOERROR = 0;
inline constexpr std::uint8_t SERVFAIL = 2;
inline constexpr std::uint8_t NXDOMAIN = 3;
}  // namespace rcode

struct Question {
  Name qname;
  std::uint16_t qtype = 0;
  std::uint16_t qclass = kClassIn;
};

/// Full DNS message. Names are written uncompressed; the stub resolver and
/// the simulated recursive share this codec, so sizes measured on either
/// side agree.
struct DnsMessage {
  std::uint16_t id = 0;
  bool qr = false;
  bool aa = false;
  bool tc = false;
  bool rd = true;
  bool ra = false;
  bool ad = false;
  bool cd = false;
  std::uint8_t opcode = 0;
  std::uint8_t rcode = rcode::NOERROR;

  std::vector<Question> questions;
  std::vector<ResourceRecord> answers;
  std::vector<ResourceRecord> authority;
  std::vector<ResourceRecord> additional;

  Bytes encode() const {
    BytesWriter w;
    w.u16(id);
    std::uint16_t flags = 0;
    if (qr) flags |= 0x8000;
    flags |= static_cast<std::uint16_t>((opcode & 0xf) << 11);
    if (aa) flags |= 0x0400;
    if (tc) flags |= 0x0200;
    if (rd) flags |= 0x0100;
    if (ra) flags |= 0x0080;
    if (ad) flags |= 0x0020;
    if (cd) flags |= 0x0010;
    flags |= rcode & 0xf;
    w.u16(flags);
    w.u16(static_cast<std::uint16_t>(questions.size()));
    w.u16(static_cast<std::uint16_t>(answers.size()));
    w.u16(static_cast<std::uint16_t>(authority.size()));
    w.u16(static_cast<std::uint16_t>(additional.size()));
    for (const auto& q : questions) {
      q.qname.to_wire(w);
      w.u16(q.qtype);
      w.u16(q.qclass);
    }
    for (const auto* section : {&answers, &authority, &additional})
      for (const auto& rr : *section) {
        rr.owner.to_wire(w);
        w.u16(rr.type);
        w.u16(rr.rr_class);
        w.u32(rr.ttl);
        w.u16(static_cast<std::uint16_t>(rr.rdata.size()));
        w.raw(rr.rdata);
      }
    return w.take();
  }

  static DnsMessage decode(std::span<const std::uint8_t> wire) {
    BytesReader r(wire);
    DnsMessage m;
    m.id = r.u16();
    std::uint16_t flags = r.u16();
    m.qr = flags & 0x8000;
    m.opcode = static_cast<std::uint8_t>((flags >> 11) & 0xf);
    m.aa = flags & 0x0400;
    m.tc = flags & 0x0200;
    m.rd = flags & 0x0100;
    m.ra = flags & 0x0080;
    m.ad = flags & 0x0020;
    m.cd = flags & 0x0010;
    m.rcode = static_cast<std::uint8_t>(flags & 0xf);
    std::uint16_t qd = r.u16(), an = r.u16(), ns = r.u16(), ar = r.u16();
    for (std::uint16_t i = 0; i < qd; ++i) {
      Question q;
      q.qname = Name::from_wire(r);
      q.qtype = r.u16();
      q.qclass = r.u16();
      m.questions.push_back(std::move(q));
    }
    auto read_section = [&](std::uint16_t count, std::vector<ResourceRecord>& out) {
      for (std::uint16_t i = 0; i < count; ++i) {
        ResourceRecord rr;
        rr.owner = Name::from_wire(r);
        rr.type = r.u16();
        rr.rr_class = r.u16();
        rr.ttl = r.u32();
        std::uint16_t rdlen = r.u16();
        rr.rdata = r.raw(rdlen);
        out.push_back(std::move(rr));
      }
    };
    read_section(an, m.answers);
    read_section(ns, m.authority);
    read_section(ar, m.additional);
    return m;
  }
};

inline constexpr std::uint16_t kEdnsUdpSize = 1232;

inline ResourceRecord make_opt_record(bool dnssec_ok) {
  ResourceRecord opt;
  opt.owner = Name::root();
  opt.type = rrtype::OPT;
  opt.rr_class = kEdnsUdpSize;          // requestor's UDP payload size
  opt.ttl = dnssec_ok ? 0x00008000u : 0;  // DO bit
  return opt;
}

inline DnsMessage make_query(std::uint16_t id, const Name& qname, std::uint16_t qtype) {
  DnsMessage q;
  q.id = id;
  q.rd = true;
  q.questions.push_back({qname, qtype, kClassIn});
  q.additional.push_back(make_opt_record(/*dnssec_ok=*/true));
  return q;
}

// Pulls answer-section RRsets and their RRSIGs out of a response.
struct SectionRrsets {
  std::vector<Rrset> rrsets;
  std::vector<ResourceRecord> rrsigs;
};

inline SectionRrsets group_rrsets(const std::vector<ResourceRecord>& section) {
  SectionRrsets out;
  for (const auto& rr : section) {
    if (rr.type == rrtype::OPT) continue;
    if (rr.type == rrtype::RRSIG) {
      out.rrsigs.push_back(rr);
      continue;
    }
    auto it = std::find_if(out.rrsets.begin(), out.rrsets.end(), [&](const Rrset& s) {
      return s.type == rr.type && s.rr_class == rr.rr_class && s.owner == rr.owner;
    });
    if (it == out.rrsets.end()) {
      Rrset s;
      s.owner = rr.owner;
      s.type = rr.type;
      s.rr_class = rr.rr_class;
      s.ttl = rr.ttl;
      s.rdatas.push_back(rr.rdata);
      out.rrsets.push_back(std::move(s));
    } else {
      it->ttl = std::min(it->ttl, rr.ttl);
      it->rdatas.push_back(rr.rdata);
    }
  }
  return out;
}

}  // namespace hstse::dns
