#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hstse::policy {

class UrlError : public std::invalid_argument {
public:
  explicit UrlError(const std::string& what) : std::invalid_argument(what) {}
};

enum class Scheme { Http, Https, None };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Http: return "http";
    case Scheme::Https: return "https";
    case Scheme::None: return "none";
  }
  return "?";
}

struct UrlTarget {
  Scheme scheme = Scheme::None;
  std::string host;  // lowercase domain, IP literal, or localhost
  std::optional<std::uint16_t> port;
  std::string path = "/";

  std::uint16_t http_port() const { return port.value_or(80); }
  std::uint16_t https_port() const { return port.value_or(443); }
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; });
  return s;
}

inline bool is_ipv4_literal(std::string_view host) {
  int octets = 0;
  std::size_t i = 0;
  while (i < host.size()) {
    if (!isdigit(static_cast<unsigned char>(host[i]))) return false;
    std::size_t start = i;
    int value = 0;
    while (i < host.size() && isdigit(static_cast<unsigned char>(host[i]))) {
      value = value * 10 + (host[i] - '0');
      if (value > 255 || i - start >= 3) return false;
      ++i;
    }
    ++octets;
    if (i == host.size()) break;
    if (host[i] != '.') return false;
    ++i;
    if (i == host.size()) return false;
  }
  return octets == 4;
}

inline bool is_ipv6_literal(std::string_view host) {
  // Syntactic check only: hex groups and colons, at least two colons or one
  // "::"; enough to separate literals from domain names.
  if (host.find(':') == std::string_view::npos) return false;
  int colons = 0;
  for (char c : host) {
    if (c == ':') {
      ++colons;
      continue;
    }
    bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
    if (!hex && c != '.') return false;  // allow v4-mapped tails
  }
  return colons >= 2 || host.find("::") != std::string_view::npos;
}

inline bool valid_domain_host(std::string_view host) {
  if (host.empty() || host.size() > 253) return false;
  std::size_t label_len = 0;
  char prev = '.';
  for (char c : host) {
    if (c == '.') {
      if (label_len == 0 || prev == '-') return false;
      label_len = 0;
      prev = c;
      continue;
    }
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
    if (c == '-' && prev == '.') return false;  // labels are LDH: no edge hyphens
    if (++label_len > 63) return false;
    prev = c;
  }
  return label_len > 0 && prev != '-';
}

}  // namespace detail

/// Parses `[scheme://]host[:port][/path]`. A missing scheme is meaningful:
/// it selects the default connection flow.
inline UrlTarget parse_url(std::string_view input) {
  UrlTarget t;
  std::string_view rest = input;
  if (rest.rfind("http://", 0) == 0) {
    t.scheme = Scheme::Http;
    rest.remove_prefix(7);
  } else if (rest.rfind("https://", 0) == 0) {
    t.scheme = Scheme::Https;
    rest.remove_prefix(8);
  } else if (rest.find("://") != std::string_view::npos) {
    throw UrlError("unsupported URL scheme in '" + std::string(input) + "'");
  }

  std::size_t slash = rest.find('/');
  std::string_view authority = slash == std::string_view::npos ? rest : rest.substr(0, slash);
  t.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (authority.empty()) throw UrlError("URL has no host: '" + std::string(input) + "'");

  std::string_view host_part = authority;
  std::string_view port_part;
  if (authority.front() == '[') {
    std::size_t close = authority.find(']');
    if (close == std::string_view::npos) throw UrlError("unterminated IPv6 literal");
    host_part = authority.substr(1, close - 1);
    std::string_view after = authority.substr(close + 1);
    if (!after.empty()) {
      if (after.front() != ':') throw UrlError("junk after IPv6 literal");
      port_part = after.substr(1);
    }
    if (!detail::is_ipv6_literal(host_part)) throw UrlError("invalid IPv6 literal");
  } else {
    std::size_t colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(':') == colon) {
      host_part = authority.substr(0, colon);
      port_part = authority.substr(colon + 1);
    } else if (colon != std::string_view::npos) {
      // More than one colon outside brackets: a bare IPv6 literal.
      if (!detail::is_ipv6_literal(authority)) throw UrlError("invalid host");
    }
  }

  if (!port_part.empty()) {
    std::uint32_t port = 0;
    for (char c : port_part) {
      if (!isdigit(static_cast<unsigned char>(c))) throw UrlError("invalid port");
      port = port * 10 + static_cast<std::uint32_t>(c - '0');
      if (port > 65535) throw UrlError("port out of range");
    }
    if (port == 0) throw UrlError("port out of range");
    t.port = static_cast<std::uint16_t>(port);
  }

  t.host = detail::lower(std::string(host_part));
  if (t.host.empty()) throw UrlError("URL has no host");
  if (!detail::is_ipv4_literal(t.host) && !detail::is_ipv6_literal(t.host) &&
      !detail::valid_domain_host(t.host))
    throw UrlError("invalid host '" + t.host + "'");
  return t;
}

enum class AuthorityClass { IpLiteral, Localhost, Mdns, Reserved, PublicDomain };

inline const char* authority_class_name(AuthorityClass c) {
  switch (c) {
    case AuthorityClass::IpLiteral: return "ip_literal";
    case AuthorityClass::Localhost: return "localhost";
    case AuthorityClass::Mdns: return "mdns";
    case AuthorityClass::Reserved: return "reserved";
    case AuthorityClass::PublicDomain: return "public_domain";
  }
  return "?";
}

/// Names that never get certificates and therefore never carry the
/// enforced-HTTPS default. Seeded from the IANA special-use registry;
/// deployments can override the set. Entries are suffix rules; an entry
/// prefixed with '=' matches only the exact name (the documentation
/// domains reserve the apex, not the tree underneath).
class ReservedNames {
public:
  static ReservedNames defaults() {
    return ReservedNames({"test", "invalid", "example", "home.arpa", "localhost", "local",
                          "=example.com", "=example.net", "=example.org"});
  }

  explicit ReservedNames(std::vector<std::string> entries) {
    for (auto& raw : entries) {
      std::string e = detail::lower(std::move(raw));
      if (!e.empty() && e[0] == '=')
        exact_.push_back(e.substr(1));
      else
        suffixes_.push_back(std::move(e));
    }
  }

  bool matches(std::string_view host) const {
    for (const auto& name : exact_)
      if (host == name) return true;
    for (const auto& suffix : suffixes_) {
      if (host == suffix) return true;
      if (host.size() > suffix.size() && host.ends_with(suffix) &&
          host[host.size() - suffix.size() - 1] == '.')
        return true;
    }
    return false;
  }

private:
  std::vector<std::string> suffixes_;
  std::vector<std::string> exact_;
};

/// Total classification of a syntactically valid host. Everything that is
/// not a public domain is exempt from enforcement.
inline AuthorityClass classify_authority(std::string_view host, const ReservedNames& reserved) {
  std::string h = detail::lower(std::string(host));
  if (h.empty()) throw UrlError("empty host");
  if (detail::is_ipv4_literal(h) || detail::is_ipv6_literal(h)) return AuthorityClass::IpLiteral;
  if (!detail::valid_domain_host(h)) throw UrlError("malformed host '" + h + "'");
  if (h == "localhost" || h.ends_with(".localhost")) return AuthorityClass::Localhost;
  if (h.ends_with(".local")) return AuthorityClass::Mdns;
  if (reserved.matches(h)) return AuthorityClass::Reserved;
  return AuthorityClass::PublicDomain;
}

}  // namespace hstse::policy
