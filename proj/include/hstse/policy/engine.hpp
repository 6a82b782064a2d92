#pragma once

#include <optional>
#include <string>

#include "hstse/dnssec/chain.hpp"
#include "hstse/policy/transcript.hpp"
#include "hstse/policy/url.hpp"
#include "hstse/preload/list.hpp"

namespace hstse::policy {

enum class HttpProbeResult { Present, Absent, Timeout };
enum class HttpsProbeResult { TrustedOk, UntrustedCert, NoListener, Timeout };

inline const char* probe_name(HttpProbeResult r) {
  switch (r) {
    case HttpProbeResult::Present: return "present";
    case HttpProbeResult::Absent: return "absent";
    case HttpProbeResult::Timeout: return "timeout";
  }
  return "?";
}

inline const char* probe_name(HttpsProbeResult r) {
  switch (r) {
    case HttpsProbeResult::TrustedOk: return "trusted_ok";
    case HttpsProbeResult::UntrustedCert: return "untrusted_cert";
    case HttpsProbeResult::NoListener: return "no_listener";
    case HttpsProbeResult::Timeout: return "timeout";
  }
  return "?";
}

enum class HstsState { Enabled, Disabled };
enum class DisableSource { None, Exemption, PreloadList, HttpreqRecord, CustomAnchorHttpreq };

struct HstsStatus {
  HstsState state = HstsState::Enabled;
  DisableSource source = DisableSource::None;

  static HstsStatus enabled() { return {HstsState::Enabled, DisableSource::None}; }
  static HstsStatus disabled(DisableSource source) { return {HstsState::Disabled, source}; }
};

inline const char* disable_source_name(DisableSource s) {
  switch (s) {
    case DisableSource::None: return "none";
    case DisableSource::Exemption: return "exemption";
    case DisableSource::PreloadList: return "preload_list";
    case DisableSource::HttpreqRecord: return "httpreq_record";
    case DisableSource::CustomAnchorHttpreq: return "custom_anchor_httpreq";
  }
  return "?";
}

/// Outcome of one HTTPREQ resolution as seen by the policy layer.
struct HttpreqAnswer {
  dnssec::ValidationState state = dnssec::ValidationState::Bogus;
  bool include_subdomains = false;
  dnssec::AnchorKind anchor_kind = dnssec::AnchorKind::Root;
  int round_trips = 0;
  std::int64_t wall_ms = 0;
};

/// Everything the decision core touches in the outside world. The engine
/// itself performs no I/O; simulators and the CLI provide implementations.
class Environment {
public:
  virtual ~Environment() = default;

  virtual std::int64_t now_ms() = 0;

  // Transport-level existence checks; no request data is sent.
  virtual HttpsProbeResult probe_https(const std::string& host, std::uint16_t port) = 0;
  virtual HttpProbeResult probe_http(const std::string& host, std::uint16_t port) = 0;

  // nullptr when no artifact is available; treated as an expired list.
  virtual const preload::PreloadArtifact* preload_snapshot() = 0;

  virtual HttpreqAnswer resolve_httpreq(const std::string& domain) = 0;

  virtual const ReservedNames& reserved_names() = 0;

  // Called once the policy authorizes sending request data.
  virtual void connect_http(const std::string& host, std::uint16_t port) {
    (void)host;
    (void)port;
  }
  virtual void connect_https(const std::string& host, std::uint16_t port, bool trusted) {
    (void)host;
    (void)port;
    (void)trusted;
  }
};

/// The enforced-HSTS status check: exemptions first, then the preload
/// list, then HTTPREQ resolution. Anything ambiguous resolves to Enabled.
inline HstsStatus hsts_status(const std::string& domain, Environment& env, Transcript& transcript) {
  auto log_status = [&](const HstsStatus& s) {
    std::string detail = domain + " -> ";
    if (s.state == HstsState::Enabled)
      detail += "enabled";
    else
      detail += std::string("disabled source=") + disable_source_name(s.source);
    transcript.add(env.now_ms(), "status", detail);
    return s;
  };

  AuthorityClass cls = classify_authority(domain, env.reserved_names());
  if (cls != AuthorityClass::PublicDomain) return log_status(HstsStatus::disabled(DisableSource::Exemption));

  const preload::PreloadArtifact* artifact = env.preload_snapshot();
  if (artifact == nullptr) {
    transcript.add(env.now_ms(), "preload", domain + " -> unavailable");
  } else {
    auto r = preload::lookup(*artifact, domain, env.now_ms() / 1000);
    switch (r.state) {
      case preload::LookupState::Hit:
        transcript.add(env.now_ms(), "preload", domain + " -> hit");
        return log_status(HstsStatus::disabled(DisableSource::PreloadList));
      case preload::LookupState::Miss:
        transcript.add(env.now_ms(), "preload", domain + " -> miss");
        break;
      case preload::LookupState::Expired:
        transcript.add(env.now_ms(), "preload", domain + " -> expired");
        break;
    }
  }

  HttpreqAnswer answer = env.resolve_httpreq(domain);
  transcript.add(env.now_ms(), "httpreq",
                 domain + " -> " + dnssec::validation_state_name(answer.state) +
                     " rtts=" + std::to_string(answer.round_trips) +
                     " wall_ms=" + std::to_string(answer.wall_ms));
  if (answer.state == dnssec::ValidationState::SecurePresent)
    return log_status(HstsStatus::disabled(answer.anchor_kind == dnssec::AnchorKind::Custom
                                               ? DisableSource::CustomAnchorHttpreq
                                               : DisableSource::HttpreqRecord));
  return log_status(HstsStatus::enabled());
}

enum class ConnectionResult { TrustedHttps, Http, UntrustedHttps, Blocked };

inline const char* connection_result_name(ConnectionResult r) {
  switch (r) {
    case ConnectionResult::TrustedHttps: return "trusted_https";
    case ConnectionResult::Http: return "http";
    case ConnectionResult::UntrustedHttps: return "untrusted_https";
    case ConnectionResult::Blocked: return "blocked";
  }
  return "?";
}

struct ConnectionOutcome {
  ConnectionResult result = ConnectionResult::Blocked;
  DisableSource indicator = DisableSource::None;  // what authorized an unsecure connection
  Transcript transcript;
};

/// The connection planner. Status checks are delayed until right before an
/// unsecure connection would be made; the check result is computed at most
/// once per run.
inline ConnectionOutcome plan_connection(const UrlTarget& target, Environment& env) {
  Transcript transcript(env.now_ms());
  std::optional<HstsStatus> memo;
  const std::string& host = target.host;

  auto status = [&]() -> const HstsStatus& {
    if (!memo) memo = hsts_status(host, env, transcript);
    return *memo;
  };
  auto finish = [&](ConnectionResult r) {
    transcript.add(env.now_ms(), "outcome", connection_result_name(r));
    DisableSource indicator = DisableSource::None;
    if (r == ConnectionResult::Http || r == ConnectionResult::UntrustedHttps)
      indicator = memo ? memo->source : DisableSource::None;
    return ConnectionOutcome{r, indicator, std::move(transcript)};
  };
  auto endpoint = [&](std::uint16_t port) { return host + " " + std::to_string(port); };

  auto probe_https = [&]() {
    auto r = env.probe_https(host, target.https_port());
    transcript.add(env.now_ms(), "probe",
                   "https " + endpoint(target.https_port()) + " -> " + probe_name(r));
    return r;
  };
  auto probe_http = [&]() {
    auto r = env.probe_http(host, target.http_port());
    transcript.add(env.now_ms(), "probe",
                   "http " + endpoint(target.http_port()) + " -> " + probe_name(r));
    return r;
  };
  auto connect_http = [&]() {
    env.connect_http(host, target.http_port());
    transcript.add(env.now_ms(), "connect", "http " + endpoint(target.http_port()));
    return finish(ConnectionResult::Http);
  };
  auto connect_https = [&](bool trusted) {
    env.connect_https(host, target.https_port(), trusted);
    transcript.add(env.now_ms(), "connect",
                   std::string(trusted ? "trusted_https " : "untrusted_https ") +
                       endpoint(target.https_port()));
    return finish(trusted ? ConnectionResult::TrustedHttps : ConnectionResult::UntrustedHttps);
  };

  // Default flow: trusted HTTPS first, unsecure fallbacks only when the
  // enforced policy is off for this host.
  auto https_flow = [&]() -> ConnectionOutcome {
    switch (probe_https()) {
      case HttpsProbeResult::TrustedOk:
        return connect_https(true);
      case HttpsProbeResult::UntrustedCert:
        if (status().state == HstsState::Disabled) return connect_https(false);
        return finish(ConnectionResult::Blocked);
      case HttpsProbeResult::NoListener:
      case HttpsProbeResult::Timeout:
        if (status().state == HstsState::Enabled) return finish(ConnectionResult::Blocked);
        transcript.add(env.now_ms(), "fallback", "https_to_http");
        if (probe_http() == HttpProbeResult::Present) return connect_http();
        return finish(ConnectionResult::Blocked);
    }
    return finish(ConnectionResult::Blocked);
  };

  if (target.scheme != Scheme::Http) return https_flow();

  // Explicit http scheme: honor it when allowed, otherwise switch to the
  // secure flow. The existence probe sends no request data.
  switch (probe_http()) {
    case HttpProbeResult::Present:
      if (status().state == HstsState::Disabled) return connect_http();
      transcript.add(env.now_ms(), "fallback", "http_to_https");
      return https_flow();
    case HttpProbeResult::Absent:
    case HttpProbeResult::Timeout:
      break;
  }
  // No HTTP listener: go straight for trusted HTTPS, no status check needed.
  transcript.add(env.now_ms(), "fallback", "http_to_https");
  switch (probe_https()) {
    case HttpsProbeResult::TrustedOk:
      return connect_https(true);
    case HttpsProbeResult::UntrustedCert:
      if (status().state == HstsState::Disabled) return connect_https(false);
      return finish(ConnectionResult::Blocked);
    case HttpsProbeResult::NoListener:
    case HttpsProbeResult::Timeout:
      return finish(ConnectionResult::Blocked);
  }
  return finish(ConnectionResult::Blocked);
}

}  // namespace hstse::policy
