#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hstse/dns/name.hpp"
#include "hstse/dns/records.hpp"
#include "hstse/dnssec/verify.hpp"

namespace hstse::dnssec {

enum class AnchorKind { Root, Custom };

/// A validation starting point. The root anchor has scope "."; custom
/// anchors are consulted only for names inside their scope. The key may be
/// given either as a DS digest or as the DNSKEY public key itself.
struct TrustAnchor {
  dns::Name scope;
  std::uint8_t algorithm = 0;
  // DS form carries the full DS RDATA; key form the raw public key bytes.
  std::variant<dns::DsData, Bytes> key;
  AnchorKind kind = AnchorKind::Custom;

  bool is_ds_form() const { return std::holds_alternative<dns::DsData>(key); }

  bool matches_dnskey(const dns::Name& owner, const dns::DnskeyData& dnskey) const {
    if (dnskey.algorithm != algorithm) return false;
    if (is_ds_form()) {
      const auto& ds = std::get<dns::DsData>(key);
      Bytes rdata = dnskey.encode();
      return ds.key_tag == key_tag(rdata) && ds.digest_type == 2 &&
             ds.digest == ds_digest(owner, rdata);
    }
    return std::get<Bytes>(key) == dnskey.public_key;
  }
};

/// Anchors applicable to `target`, deepest scope first, root last.
inline std::vector<TrustAnchor> select_anchors(const std::vector<TrustAnchor>& anchors,
                                               const dns::Name& target) {
  std::vector<TrustAnchor> out;
  for (const auto& a : anchors)
    if (target.is_subdomain_of(a.scope)) out.push_back(a);
  std::stable_sort(out.begin(), out.end(), [](const TrustAnchor& a, const TrustAnchor& b) {
    if (a.scope.label_count() != b.scope.label_count())
      return a.scope.label_count() > b.scope.label_count();
    return a.kind == AnchorKind::Custom && b.kind == AnchorKind::Root;
  });
  return out;
}

// ---- anchor file: one per line, `scope algorithm key-or-ds-hex kind` ------
//
// The hex column is self-describing by length: 72 hex digits is a full DS
// RDATA (tag+alg+digest-type+SHA-256 digest), anything else is a raw public
// key for the stated algorithm.

inline TrustAnchor parse_anchor_line(const std::string& line) {
  std::istringstream in(line);
  std::string scope_text, hex, kind_text;
  unsigned alg = 0;
  if (!(in >> scope_text >> alg >> hex >> kind_text))
    throw WireError("malformed trust-anchor line: '" + line + "'");
  TrustAnchor a;
  a.scope = dns::Name::parse(scope_text);
  a.algorithm = static_cast<std::uint8_t>(alg);
  Bytes raw = from_hex(hex);
  if (raw.size() == 36) {
    a.key = dns::DsData::decode(raw);
  } else {
    a.key = std::move(raw);
  }
  if (kind_text == "root")
    a.kind = AnchorKind::Root;
  else if (kind_text == "custom")
    a.kind = AnchorKind::Custom;
  else
    throw WireError("anchor kind must be 'root' or 'custom': '" + kind_text + "'");
  if (a.kind == AnchorKind::Custom && a.scope.is_root())
    throw WireError("custom anchors must have a non-root scope");
  return a;
}

inline std::string format_anchor_line(const TrustAnchor& a) {
  std::string hex = a.is_ds_form() ? to_hex(std::get<dns::DsData>(a.key).encode())
                                   : to_hex(std::get<Bytes>(a.key));
  return a.scope.text() + " " + std::to_string(a.algorithm) + " " + hex + " " +
         (a.kind == AnchorKind::Root ? "root" : "custom");
}

inline std::vector<TrustAnchor> load_anchor_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw WireError("cannot open trust-anchor file: " + path);
  std::vector<TrustAnchor> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_anchor_line(line));
  }
  return out;
}

}  // namespace hstse::dnssec
