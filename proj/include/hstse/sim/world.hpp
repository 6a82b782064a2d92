#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hstse/policy/engine.hpp"
#include "hstse/resolver/cache.hpp"
#include "hstse/resolver/stub.hpp"
#include "hstse/sim/clock.hpp"
#include "hstse/sim/dns_server.hpp"
#include "hstse/sim/zone.hpp"

namespace hstse::sim {

enum class ServerKind { HttpOnly, UntrustedHttps, TrustedHttps };
enum class IndicatorKind { None, Preload, Httpreq, HttpreqCustomAnchor };
enum class AttackerCapability { BlockHttps, DropDns, TamperRrsig, StripHttpreq };

struct ScenarioError : std::runtime_error {
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

/// One simulated world, declaratively. `domain` names the site under test;
/// the DNS tree beneath it is derived (root -> TLD -> site zone).
struct ScenarioConfig {
  std::set<ServerKind> servers = {ServerKind::TrustedHttps};
  policy::Scheme scheme = policy::Scheme::None;
  IndicatorKind indicator = IndicatorKind::None;
  std::set<AttackerCapability> attacker;
  std::int64_t rtt_ms = 20;
  std::uint32_t seed = 1;
  std::int64_t clock_offset_s = 0;
  std::string domain = "httponly.site";

  void validate() const {
    if (servers.empty()) throw ScenarioError("servers must be non-empty");
    if (servers.count(ServerKind::TrustedHttps) && servers.count(ServerKind::UntrustedHttps))
      throw ScenarioError("a site serves one HTTPS endpoint: trusted or untrusted, not both");
    if (rtt_ms < 0) throw ScenarioError("rtt_ms must be >= 0");
  }
};

struct Observed {
  policy::ConnectionOutcome outcome;
  resolver::ResolutionMetrics metrics;  // of the last HTTPREQ resolution, if any
  std::vector<std::pair<std::size_t, std::uint16_t>> dns_message_log;  // (size, type)
  std::string plaintext_tap;  // request bytes visible to the on-path attacker
  std::string untrusted_tap;  // request bytes sent over untrusted TLS
};

/// Wires simulated web servers, the signed DNS tree, the attacker, and a
/// virtual clock into a policy::Environment. One world = one scenario; its
/// resolver cache persists across runs on the same instance.
class SimWorld : public policy::Environment {
public:
  explicit SimWorld(ScenarioConfig config) : config_(std::move(config)) {
    config_.validate();
    base_epoch_s_ = VirtualClock::kDefaultBaseEpochSeconds;
    clock_ = std::make_shared<VirtualClock>(base_epoch_s_ + config_.clock_offset_s);

    site_ = dns::Name::parse(config_.domain);
    if (site_.label_count() < 2)
      throw ScenarioError("scenario domain needs at least two labels: " + config_.domain);
    build_dns();
    if (config_.indicator == IndicatorKind::Preload)
      preload_ = preload::build({{config_.domain, false, false}}, base_epoch_s_);

    resolver::StubConfig stub_config;
    std::mt19937 rng(config_.seed);
    stub_config.first_message_id = static_cast<std::uint16_t>(rng());
    stub_ = std::make_unique<resolver::StubResolver>(anchors_, stub_config);

    DnsAttacker dns_attacker;
    dns_attacker.drop_dns = config_.attacker.count(AttackerCapability::DropDns) > 0;
    dns_attacker.tamper_rrsig = config_.attacker.count(AttackerCapability::TamperRrsig) > 0;
    dns_attacker.strip_httpreq = config_.attacker.count(AttackerCapability::StripHttpreq) > 0;
    transport_ = std::make_unique<SimDnsTransport>(server_, clock_, config_.rtt_ms, 2, dns_attacker);
  }

  // ---- policy::Environment --------------------------------------------

  std::int64_t now_ms() override { return clock_->now_ms(); }

  policy::HttpsProbeResult probe_https(const std::string& host, std::uint16_t) override {
    clock_->advance_ms(config_.rtt_ms);
    if (host != config_.domain) return policy::HttpsProbeResult::NoListener;
    if (config_.attacker.count(AttackerCapability::BlockHttps))
      return policy::HttpsProbeResult::Timeout;
    if (config_.servers.count(ServerKind::TrustedHttps)) return policy::HttpsProbeResult::TrustedOk;
    if (config_.servers.count(ServerKind::UntrustedHttps))
      return policy::HttpsProbeResult::UntrustedCert;
    return policy::HttpsProbeResult::NoListener;
  }

  policy::HttpProbeResult probe_http(const std::string& host, std::uint16_t) override {
    clock_->advance_ms(config_.rtt_ms);
    if (host != config_.domain) return policy::HttpProbeResult::Absent;
    return config_.servers.count(ServerKind::HttpOnly) ? policy::HttpProbeResult::Present
                                                       : policy::HttpProbeResult::Absent;
  }

  const preload::PreloadArtifact* preload_snapshot() override {
    return preload_ ? &*preload_ : nullptr;
  }

  policy::HttpreqAnswer resolve_httpreq(const std::string& domain) override {
    auto answer = stub_->resolve_httpreq(dns::Name::parse(domain), cache_, *transport_,
                                         [this] { return clock_->now_ms(); });
    last_metrics_ = answer.metrics;
    for (const auto& m : answer.metrics.messages)
      if (m.response) dns_message_log_.emplace_back(m.size_bytes, m.qtype);
    return {answer.validation.state, answer.validation.include_subdomains,
            answer.validation.anchor_kind, answer.metrics.round_trips, answer.metrics.wall_ms};
  }

  const policy::ReservedNames& reserved_names() override { return reserved_; }

  void connect_http(const std::string& host, std::uint16_t) override {
    clock_->advance_ms(config_.rtt_ms);
    plaintext_tap_ += "GET / HTTP/1.1\r\nHost: " + host + "\r\n\r\n";
  }

  void connect_https(const std::string& host, std::uint16_t, bool trusted) override {
    clock_->advance_ms(config_.rtt_ms);
    if (!trusted) untrusted_tap_ += "GET / HTTP/1.1\r\nHost: " + host + "\r\n\r\n";
  }

  // ---- scenario API -----------------------------------------------------

  Observed run() {
    policy::UrlTarget target;
    target.scheme = config_.scheme;
    target.host = config_.domain;
    Observed observed;
    observed.outcome = policy::plan_connection(target, *this);
    observed.metrics = last_metrics_;
    observed.dns_message_log = dns_message_log_;
    observed.plaintext_tap = plaintext_tap_;
    observed.untrusted_tap = untrusted_tap_;
    return observed;
  }

  // Serves plain-HTTP response headers for registry vantage probes.
  void set_http_required_header(const std::string& domain, const std::string& value) {
    http_headers_[domain] = value;
  }
  void clear_http_required_header(const std::string& domain) { http_headers_.erase(domain); }

  std::optional<std::map<std::string, std::string>> vantage_fetch(const std::string& domain) {
    clock_->advance_ms(config_.rtt_ms);
    bool http_listener = domain == config_.domain && config_.servers.count(ServerKind::HttpOnly);
    bool extra_site = http_headers_.count(domain) > 0;
    if (!http_listener && !extra_site) return std::nullopt;  // unreachable
    std::map<std::string, std::string> headers;
    auto it = http_headers_.find(domain);
    if (it != http_headers_.end()) headers["HTTP-Required"] = it->second;
    return headers;
  }

  const ScenarioConfig& config() const { return config_; }
  ClockPtr clock() { return clock_; }
  resolver::CacheStore& cache() { return cache_; }
  resolver::StubResolver& stub() { return *stub_; }
  RecursiveServer& dns() { return server_; }
  const std::vector<dnssec::TrustAnchor>& anchors() const { return anchors_; }
  std::int64_t base_epoch_s() const { return base_epoch_s_; }

private:
  void build_dns() {
    dns::Name tld = site_.parent();
    bool has_httpreq = config_.indicator == IndicatorKind::Httpreq ||
                       config_.indicator == IndicatorKind::HttpreqCustomAnchor;
    bool custom = config_.indicator == IndicatorKind::HttpreqCustomAnchor;

    ZoneBuilder site_builder(site_);
    if (has_httpreq) site_builder.httpreq(site_, false);
    site_builder.signature_window(base_epoch_s_ - 3600, base_epoch_s_ + 120 * 86400);
    SignedZone site_zone = site_builder.build(base_epoch_s_);

    // Under a custom anchor the public tree does not vouch for the site
    // zone: the TLD delegates it without a DS record.
    SignedZone tld_zone =
        ZoneBuilder(tld)
            .signature_window(base_epoch_s_ - 3600, base_epoch_s_ + 120 * 86400)
            .delegate(site_, custom ? std::nullopt : std::optional(site_zone.ds_for_parent()))
            .build(base_epoch_s_);
    SignedZone root_zone = ZoneBuilder(dns::Name::root())
                               .signature_window(base_epoch_s_ - 3600, base_epoch_s_ + 120 * 86400)
                               .delegate(tld, tld_zone.ds_for_parent())
                               .build(base_epoch_s_);

    anchors_.push_back(dnssec::TrustAnchor{dns::Name::root(),
                                           static_cast<std::uint8_t>(root_zone.key().algorithm()),
                                           root_zone.ds_for_parent(), dnssec::AnchorKind::Root});
    if (custom)
      anchors_.push_back(dnssec::TrustAnchor{site_, static_cast<std::uint8_t>(site_zone.key().algorithm()),
                                             site_zone.key().public_bytes(),
                                             dnssec::AnchorKind::Custom});

    server_.add_zone(std::move(site_zone));
    server_.add_zone(std::move(tld_zone));
    server_.add_zone(std::move(root_zone));
  }

  ScenarioConfig config_;
  std::int64_t base_epoch_s_;
  ClockPtr clock_;
  dns::Name site_;
  RecursiveServer server_;
  std::vector<dnssec::TrustAnchor> anchors_;
  std::optional<preload::PreloadArtifact> preload_;
  policy::ReservedNames reserved_ = policy::ReservedNames::defaults();
  resolver::CacheStore cache_;
  std::unique_ptr<resolver::StubResolver> stub_;
  std::unique_ptr<SimDnsTransport> transport_;
  resolver::ResolutionMetrics last_metrics_;
  std::vector<std::pair<std::size_t, std::uint16_t>> dns_message_log_;
  std::string plaintext_tap_;
  std::string untrusted_tap_;
  std::map<std::string, std::string> http_headers_;
};

inline Observed run_scenario(const ScenarioConfig& config) {
  SimWorld world(config);
  return world.run();
}

// ---- scenario text files ---------------------------------------------------
//
// One `key = value` pair per line mirroring ScenarioConfig; '#' comments
// and blank lines allowed. Durations accept s/m/h/d suffixes.

class ScenarioParseError : public std::runtime_error {
public:
  ScenarioParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::int64_t parse_duration_s(const std::string& text, std::size_t line) {
  if (text.empty()) throw ScenarioParseError(line, "empty duration");
  std::int64_t sign = 1;
  std::size_t i = 0;
  if (text[0] == '+' || text[0] == '-') {
    sign = text[0] == '-' ? -1 : 1;
    i = 1;
  }
  std::int64_t value = 0;
  std::size_t digits = 0;
  while (i < text.size() && isdigit(static_cast<unsigned char>(text[i]))) {
    value = value * 10 + (text[i] - '0');
    ++i;
    ++digits;
  }
  if (digits == 0) throw ScenarioParseError(line, "bad duration '" + text + "'");
  std::int64_t unit = 1;
  if (i < text.size()) {
    switch (text[i]) {
      case 's': unit = 1; break;
      case 'm': unit = 60; break;
      case 'h': unit = 3600; break;
      case 'd': unit = 86400; break;
      default: throw ScenarioParseError(line, "bad duration unit '" + text + "'");
    }
    if (i + 1 != text.size()) throw ScenarioParseError(line, "bad duration '" + text + "'");
  }
  return sign * value * unit;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#') continue;
    std::size_t eq = text.find('=');
    if (eq == std::string::npos) throw ScenarioParseError(line_no, "expected 'key = value'");
    std::string key = detail::trim(text.substr(0, eq));
    std::string value = detail::trim(text.substr(eq + 1));

    if (key == "servers") {
      config.servers.clear();
      for (const auto& item : detail::split_list(value)) {
        if (item == "http")
          config.servers.insert(ServerKind::HttpOnly);
        else if (item == "untrusted_https")
          config.servers.insert(ServerKind::UntrustedHttps);
        else if (item == "trusted_https")
          config.servers.insert(ServerKind::TrustedHttps);
        else
          throw ScenarioParseError(line_no, "unknown server kind '" + item + "'");
      }
    } else if (key == "scheme") {
      if (value == "http")
        config.scheme = policy::Scheme::Http;
      else if (value == "https")
        config.scheme = policy::Scheme::Https;
      else if (value == "none")
        config.scheme = policy::Scheme::None;
      else
        throw ScenarioParseError(line_no, "unknown scheme '" + value + "'");
    } else if (key == "indicator") {
      if (value == "none")
        config.indicator = IndicatorKind::None;
      else if (value == "preload")
        config.indicator = IndicatorKind::Preload;
      else if (value == "httpreq")
        config.indicator = IndicatorKind::Httpreq;
      else if (value == "httpreq_custom_anchor")
        config.indicator = IndicatorKind::HttpreqCustomAnchor;
      else
        throw ScenarioParseError(line_no, "unknown indicator '" + value + "'");
    } else if (key == "attacker") {
      config.attacker.clear();
      for (const auto& item : detail::split_list(value)) {
        if (item == "block_https")
          config.attacker.insert(AttackerCapability::BlockHttps);
        else if (item == "drop_dns")
          config.attacker.insert(AttackerCapability::DropDns);
        else if (item == "tamper_rrsig")
          config.attacker.insert(AttackerCapability::TamperRrsig);
        else if (item == "strip_httpreq")
          config.attacker.insert(AttackerCapability::StripHttpreq);
        else
          throw ScenarioParseError(line_no, "unknown attacker capability '" + item + "'");
      }
    } else if (key == "rtt_ms") {
      try {
        config.rtt_ms = std::stoll(value);
      } catch (const std::exception&) {
        throw ScenarioParseError(line_no, "bad rtt_ms '" + value + "'");
      }
    } else if (key == "seed") {
      try {
        config.seed = static_cast<std::uint32_t>(std::stoul(value));
      } catch (const std::exception&) {
        throw ScenarioParseError(line_no, "bad seed '" + value + "'");
      }
    } else if (key == "clock_offset") {
      config.clock_offset_s = detail::parse_duration_s(value, line_no);
    } else if (key == "domain") {
      config.domain = value;
    } else {
      throw ScenarioParseError(line_no, "unknown scenario key '" + key + "'");
    }
  }
  try {
    config.validate();
  } catch (const ScenarioError& e) {
    throw ScenarioParseError(line_no, e.what());
  }
  return config;
}

}  // namespace hstse::sim
