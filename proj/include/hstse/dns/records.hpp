#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hstse/dns/name.hpp"
#include "hstse/util/bytes.hpp"

namespace hstse::dns {

// RR type codes used by the indicator chain.
namespace rrtype {
inline constexpr std::uint16_t NS = 2;
inline constexpr std::uint16_t SOA = 6;
inline constexpr std::uint16_t OPT = 41;
inline constexpr std::uint16_t DS = 43;
inline constexpr std::uint16_t RRSIG = 46;
inline constexpr std::uint16_t NSEC = 47;
inline constexpr std::uint16_t DNSKEY = 48;
// First private-use RR type; carries the HTTP-Required flag octet.
inline constexpr std::uint16_t HTTPREQ = 65280;
}  // namespace rrtype

inline constexpr std::uint16_t kClassIn = 1;

inline std::string rrtype_name(std::uint16_t t) {
  switch (t) {
    case rrtype::NS: return "NS";
    case rrtype::SOA: return "SOA";
    case rrtype::DS: return "DS";
    case rrtype::RRSIG: return "RRSIG";
    case rrtype::NSEC: return "NSEC";
    case rrtype::DNSKEY: return "DNSKEY";
    case rrtype::OPT: return "OPT";
    case rrtype::HTTPREQ: return "HTTPREQ";
    default: return "TYPE" + std::to_string(t);
  }
}

struct ResourceRecord {
  Name owner;
  std::uint16_t type = 0;
  std::uint16_t rr_class = kClassIn;
  std::uint32_t ttl = 0;
  Bytes rdata;
};

/// All records sharing owner/type/class/ttl; rdatas kept in insertion order,
/// sorted canonically only when signing or verifying.
struct Rrset {
  Name owner;
  std::uint16_t type = 0;
  std::uint16_t rr_class = kClassIn;
  std::uint32_t ttl = 0;
  std::vector<Bytes> rdatas;

  bool empty() const { return rdatas.empty(); }
};

// ---- RDATA codecs ----------------------------------------------------------

class RecordFormatError : public WireError {
public:
  explicit RecordFormatError(const std::string& what) : WireError(what) {}
};

/// HTTPREQ RDATA: exactly one flags octet. Bit 0 = include_subdomains,
/// bits 1-7 reserved and must be zero.
struct HttpreqData {
  bool include_subdomains = false;

  Bytes encode() const { return Bytes{static_cast<std::uint8_t>(include_subdomains ? 0x01 : 0x00)}; }

  static HttpreqData decode(std::span<const std::uint8_t> rdata) {
    if (rdata.size() != 1)
      throw RecordFormatError("HTTPREQ RDATA must be exactly one octet, got " +
                              std::to_string(rdata.size()));
    if ((rdata[0] & 0xfe) != 0)
      throw RecordFormatError("HTTPREQ reserved flag bits set");
    return HttpreqData{(rdata[0] & 0x01) != 0};
  }
};

struct DnskeyData {
  std::uint16_t flags = 257;  // single signing key per zone, SEP set
  std::uint8_t protocol = 3;
  std::uint8_t algorithm = 0;
  Bytes public_key;

  Bytes encode() const {
    BytesWriter w;
    w.u16(flags);
    w.u8(protocol);
    w.u8(algorithm);
    w.raw(public_key);
    return w.take();
  }

  static DnskeyData decode(std::span<const std::uint8_t> rdata) {
    BytesReader r(rdata);
    DnskeyData d;
    d.flags = r.u16();
    d.protocol = r.u8();
    d.algorithm = r.u8();
    d.public_key = r.raw(r.remaining());
    return d;
  }
};

struct DsData {
  std::uint16_t key_tag = 0;
  std::uint8_t algorithm = 0;
  std::uint8_t digest_type = 2;  // SHA-256
  Bytes digest;

  Bytes encode() const {
    BytesWriter w;
    w.u16(key_tag);
    w.u8(algorithm);
    w.u8(digest_type);
    w.raw(digest);
    return w.take();
  }

  static DsData decode(std::span<const std::uint8_t> rdata) {
    BytesReader r(rdata);
    DsData d;
    d.key_tag = r.u16();
    d.algorithm = r.u8();
    d.digest_type = r.u8();
    d.digest = r.raw(r.remaining());
    return d;
  }
};

struct RrsigData {
  std::uint16_t type_covered = 0;
  std::uint8_t algorithm = 0;
  std::uint8_t labels = 0;
  std::uint32_t original_ttl = 0;
  std::uint32_t expiration = 0;  // epoch seconds
  std::uint32_t inception = 0;
  std::uint16_t key_tag = 0;
  Name signer;
  Bytes signature;

  Bytes encode() const {
    BytesWriter w;
    encode_prefix(w);
    w.raw(signature);
    return w.take();
  }

  // RDATA minus the signature field: the leading part of the signed data.
  void encode_prefix(BytesWriter& w) const {
    w.u16(type_covered);
    w.u8(algorithm);
    w.u8(labels);
    w.u32(original_ttl);
    w.u32(expiration);
    w.u32(inception);
    w.u16(key_tag);
    signer.to_wire(w, /*lowercase=*/true);
  }

  static RrsigData decode(std::span<const std::uint8_t> rdata) {
    BytesReader r(rdata);
    RrsigData d;
    d.type_covered = r.u16();
    d.algorithm = r.u8();
    d.labels = r.u8();
    d.original_ttl = r.u32();
    d.expiration = r.u32();
    d.inception = r.u32();
    d.key_tag = r.u16();
    d.signer = Name::from_wire(r);
    d.signature = r.raw(r.remaining());
    return d;
  }
};

struct NsecData {
  Name next;
  std::vector<std::uint16_t> types;  // present types at the owner, ascending

  Bytes encode() const {
    BytesWriter w;
    next.to_wire(w, /*lowercase=*/true);
    // Type bitmap windows per RFC 4034 section 4.1.2.
    std::vector<std::uint16_t> sorted = types;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::uint8_t window = static_cast<std::uint8_t>(sorted[i] >> 8);
      std::uint8_t bitmap[32] = {};
      std::uint8_t max_octet = 0;
      while (i < sorted.size() && (sorted[i] >> 8) == window) {
        std::uint8_t low = static_cast<std::uint8_t>(sorted[i] & 0xff);
        bitmap[low / 8] |= static_cast<std::uint8_t>(0x80 >> (low % 8));
        max_octet = static_cast<std::uint8_t>(low / 8);
        ++i;
      }
      w.u8(window);
      w.u8(static_cast<std::uint8_t>(max_octet + 1));
      w.raw(std::span<const std::uint8_t>(bitmap, max_octet + 1u));
    }
    return w.take();
  }

  static NsecData decode(std::span<const std::uint8_t> rdata) {
    BytesReader r(rdata);
    NsecData d;
    d.next = Name::from_wire(r);
    while (r.remaining() > 0) {
      std::uint8_t window = r.u8();
      std::uint8_t len = r.u8();
      if (len == 0 || len > 32) throw RecordFormatError("bad NSEC bitmap window length");
      auto bits = r.view(len);
      for (std::size_t octet = 0; octet < bits.size(); ++octet)
        for (int bit = 0; bit < 8; ++bit)
          if (bits[octet] & (0x80 >> bit))
            d.types.push_back(static_cast<std::uint16_t>(window << 8 | (octet * 8 + bit)));
    }
    return d;
  }

  bool covers_type(std::uint16_t t) const {
    return std::find(types.begin(), types.end(), t) != types.end();
  }
};

struct SoaData {
  Name mname;
  Name rname;
  std::uint32_t serial = 1;
  std::uint32_t refresh = 3600;
  std::uint32_t retry = 1800;
  std::uint32_t expire = 1209600;
  std::uint32_t minimum = 300;  // negative-caching TTL

  Bytes encode() const {
    BytesWriter w;
    mname.to_wire(w, /*lowercase=*/true);
    rname.to_wire(w, /*lowercase=*/true);
    w.u32(serial);
    w.u32(refresh);
    w.u32(retry);
    w.u32(expire);
    w.u32(minimum);
    return w.take();
  }

  static SoaData decode(std::span<const std::uint8_t> rdata) {
    BytesReader r(rdata);
    SoaData d;
    d.mname = Name::from_wire(r);
    d.rname = Name::from_wire(r);
    d.serial = r.u32();
    d.refresh = r.u32();
    d.retry = r.u32();
    d.expire = r.u32();
    d.minimum = r.u32();
    return d;
  }
};

// NS RDATA is a single name.
inline Bytes encode_ns(const Name& host) { return host.wire(true); }

}  // namespace hstse::dns
