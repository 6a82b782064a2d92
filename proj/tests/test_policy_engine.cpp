#include <gtest/gtest.h>

#include "hstse/policy/engine.hpp"
#include "hstse/policy/url.hpp"

using namespace hstse;
using namespace hstse::policy;

namespace {

constexpr std::int64_t kT0Ms = 1767225600000;

struct ScriptedEnv : Environment {
  std::int64_t t = kT0Ms;
  HttpsProbeResult https = HttpsProbeResult::NoListener;
  HttpProbeResult http = HttpProbeResult::Absent;
  const preload::PreloadArtifact* artifact = nullptr;
  HttpreqAnswer httpreq;
  ReservedNames reserved = ReservedNames::defaults();

  int https_probes = 0;
  int http_probes = 0;
  int resolves = 0;
  int http_sends = 0;
  int untrusted_sends = 0;

  std::int64_t now_ms() override { return t; }
  HttpsProbeResult probe_https(const std::string&, std::uint16_t) override {
    ++https_probes;
    t += 20;
    return https;
  }
  HttpProbeResult probe_http(const std::string&, std::uint16_t) override {
    ++http_probes;
    t += 20;
    return http;
  }
  const preload::PreloadArtifact* preload_snapshot() override { return artifact; }
  HttpreqAnswer resolve_httpreq(const std::string&) override {
    ++resolves;
    t += httpreq.wall_ms;
    return httpreq;
  }
  const ReservedNames& reserved_names() override { return reserved; }
  void connect_http(const std::string&, std::uint16_t) override { ++http_sends; }
  void connect_https(const std::string&, std::uint16_t, bool trusted) override {
    if (!trusted) ++untrusted_sends;
  }
};

HttpreqAnswer secure_present(bool custom = false) {
  return {dnssec::ValidationState::SecurePresent, false,
          custom ? dnssec::AnchorKind::Custom : dnssec::AnchorKind::Root, 6, 132};
}

HttpreqAnswer bogus() { return {dnssec::ValidationState::Bogus, false, dnssec::AnchorKind::Root, 2, 4000}; }

UrlTarget target(Scheme scheme, const std::string& host = "httponly.site") {
  UrlTarget t;
  t.scheme = scheme;
  t.host = host;
  return t;
}

}  // namespace

// ---- URL parsing -------------------------------------------------------

TEST(Url, SchemeHostPortPath) {
  UrlTarget t = parse_url("http://shop.example.com:8080/cart?x=1");
  EXPECT_EQ(t.scheme, Scheme::Http);
  EXPECT_EQ(t.host, "shop.example.com");
  EXPECT_EQ(t.port, 8080);
  EXPECT_EQ(t.path, "/cart?x=1");

  UrlTarget bare = parse_url("Example.Com/path");
  EXPECT_EQ(bare.scheme, Scheme::None);
  EXPECT_EQ(bare.host, "example.com");
  EXPECT_FALSE(bare.port.has_value());

  UrlTarget v6 = parse_url("https://[::1]:8443/");
  EXPECT_EQ(v6.host, "::1");
  EXPECT_EQ(v6.port, 8443);

  EXPECT_EQ(parse_url("https://a.b").https_port(), 443);
  EXPECT_EQ(parse_url("http://a.b").http_port(), 80);

  EXPECT_THROW(parse_url("ftp://x.y"), UrlError);
  EXPECT_THROW(parse_url("http://"), UrlError);
  EXPECT_THROW(parse_url("http://bad_port.example:0"), UrlError);
  EXPECT_THROW(parse_url("http://x.y:77777"), UrlError);
  EXPECT_THROW(parse_url("http://-not/valid host"), UrlError);
}

// ---- classify_authority -------------------------------------------------

TEST(Classify, SpecExamples) {
  ReservedNames reserved = ReservedNames::defaults();
  EXPECT_EQ(classify_authority("192.168.1.1", reserved), AuthorityClass::IpLiteral);
  EXPECT_EQ(classify_authority("localhost", reserved), AuthorityClass::Localhost);
  EXPECT_EQ(classify_authority("printer.local", reserved), AuthorityClass::Mdns);
  EXPECT_EQ(classify_authority("shop.example.com", reserved), AuthorityClass::PublicDomain);
}

TEST(Classify, CoverageOfReservedRules) {
  ReservedNames reserved = ReservedNames::defaults();
  EXPECT_EQ(classify_authority("::1", reserved), AuthorityClass::IpLiteral);
  EXPECT_EQ(classify_authority("2001:db8::2:1", reserved), AuthorityClass::IpLiteral);
  EXPECT_EQ(classify_authority("app.localhost", reserved), AuthorityClass::Localhost);
  EXPECT_EQ(classify_authority("anything.test", reserved), AuthorityClass::Reserved);
  EXPECT_EQ(classify_authority("router.home.arpa", reserved), AuthorityClass::Reserved);
  EXPECT_EQ(classify_authority("host.invalid", reserved), AuthorityClass::Reserved);
  EXPECT_EQ(classify_authority("local", reserved), AuthorityClass::Reserved);
  // Exact documentation names are reserved; their subdomains are not.
  EXPECT_EQ(classify_authority("example.com", reserved), AuthorityClass::Reserved);
  EXPECT_EQ(classify_authority("example.org", reserved), AuthorityClass::Reserved);
  EXPECT_EQ(classify_authority("httponly.site", reserved), AuthorityClass::PublicDomain);
  EXPECT_THROW(classify_authority("not a host", reserved), UrlError);

  ReservedNames custom({"corp"});
  EXPECT_EQ(classify_authority("wiki.corp", custom), AuthorityClass::Reserved);
  EXPECT_EQ(classify_authority("wiki.corp.net", custom), AuthorityClass::PublicDomain);
}

// ---- hsts_status ---------------------------------------------------------

TEST(HstsStatusCheck, ExemptionShortCircuitsIndicators) {
  ScriptedEnv env;
  Transcript tr(env.now_ms());
  HstsStatus s = hsts_status("router.local", env, tr);
  EXPECT_EQ(s.state, HstsState::Disabled);
  EXPECT_EQ(s.source, DisableSource::Exemption);
  EXPECT_EQ(env.resolves, 0);
  EXPECT_EQ(tr.count("preload"), 0u);
  EXPECT_EQ(tr.count("httpreq"), 0u);
}

TEST(HstsStatusCheck, PreloadHitStopsBeforeDns) {
  ScriptedEnv env;
  auto artifact = preload::build({{"httponly.site", false, false}}, kT0Ms / 1000 - 10);
  env.artifact = &artifact;
  Transcript tr(env.now_ms());
  HstsStatus s = hsts_status("httponly.site", env, tr);
  EXPECT_EQ(s.source, DisableSource::PreloadList);
  EXPECT_EQ(env.resolves, 0) << "no DNS traffic on a preload hit";
  EXPECT_EQ(tr.count("preload", "hit"), 1u);
}

TEST(HstsStatusCheck, ValidHttpreqDisables) {
  ScriptedEnv env;
  env.httpreq = secure_present();
  Transcript tr(env.now_ms());
  EXPECT_EQ(hsts_status("httponly.site", env, tr).source, DisableSource::HttpreqRecord);

  env.httpreq = secure_present(/*custom=*/true);
  Transcript tr2(env.now_ms());
  EXPECT_EQ(hsts_status("wiki.corp.internal", env, tr2).source,
            DisableSource::CustomAnchorHttpreq);
}

TEST(HstsStatusCheck, EverythingElseFailsSecure) {
  for (auto state : {dnssec::ValidationState::SecureAbsent, dnssec::ValidationState::Insecure,
                     dnssec::ValidationState::Bogus}) {
    ScriptedEnv env;
    env.httpreq = {state, false, dnssec::AnchorKind::Root, 1, 20};
    Transcript tr(env.now_ms());
    HstsStatus s = hsts_status("httponly.site", env, tr);
    EXPECT_EQ(s.state, HstsState::Enabled);
    EXPECT_EQ(s.source, DisableSource::None);
  }
}

TEST(HstsStatusCheck, ExpiredOrMissingPreloadFallsThrough) {
  ScriptedEnv env;
  auto artifact = preload::build({{"httponly.site", false, false}}, kT0Ms / 1000 - 10, 5);
  env.artifact = &artifact;  // expired five seconds after issue
  env.httpreq = bogus();
  Transcript tr(env.now_ms());
  EXPECT_EQ(hsts_status("httponly.site", env, tr).state, HstsState::Enabled);
  EXPECT_EQ(tr.count("preload", "expired"), 1u);
  EXPECT_EQ(env.resolves, 1);

  ScriptedEnv no_artifact;
  no_artifact.httpreq = bogus();
  Transcript tr2(no_artifact.now_ms());
  EXPECT_EQ(hsts_status("httponly.site", no_artifact, tr2).state, HstsState::Enabled);
  EXPECT_EQ(tr2.count("preload", "unavailable"), 1u);
}

// ---- plan_connection: spec examples ---------------------------------------

TEST(PlanConnection, DefaultSchemeBothServersNoIndicatorIsTrusted) {
  ScriptedEnv env;
  env.https = HttpsProbeResult::TrustedOk;
  env.http = HttpProbeResult::Present;
  auto out = plan_connection(target(Scheme::None), env);
  EXPECT_EQ(out.result, ConnectionResult::TrustedHttps);
  EXPECT_EQ(out.transcript.count("status"), 0u);
}

TEST(PlanConnection, HttpSchemeWithIndicatorUsesHttp) {
  ScriptedEnv env;
  env.https = HttpsProbeResult::TrustedOk;
  env.http = HttpProbeResult::Present;
  env.httpreq = secure_present();
  auto out = plan_connection(target(Scheme::Http), env);
  EXPECT_EQ(out.result, ConnectionResult::Http);
  EXPECT_EQ(out.indicator, DisableSource::HttpreqRecord);
  EXPECT_EQ(env.http_sends, 1);
}

TEST(PlanConnection, HttpsSchemeHttpOnlyNoIndicatorBlocks) {
  ScriptedEnv env;
  env.https = HttpsProbeResult::NoListener;
  env.http = HttpProbeResult::Present;
  env.httpreq = bogus();
  auto out = plan_connection(target(Scheme::Https), env);
  EXPECT_EQ(out.result, ConnectionResult::Blocked);
  EXPECT_EQ(env.http_sends, 0);
  EXPECT_EQ(out.transcript.count("connect"), 0u);
}

TEST(PlanConnection, HttpSchemeUntrustedOnlyWithIndicatorIsUntrusted) {
  ScriptedEnv env;
  env.https = HttpsProbeResult::UntrustedCert;
  env.http = HttpProbeResult::Absent;
  env.httpreq = secure_present();
  auto out = plan_connection(target(Scheme::Http), env);
  EXPECT_EQ(out.result, ConnectionResult::UntrustedHttps);
  EXPECT_EQ(env.untrusted_sends, 1);
  // HTTP probe found nothing, so exactly one status check guarded the
  // untrusted connection.
  EXPECT_EQ(out.transcript.count("status", "disabled"), 1u);
}

TEST(PlanConnection, HttpSchemeTrustedOnlySkipsStatusCheck) {
  ScriptedEnv env;
  env.https = HttpsProbeResult::TrustedOk;
  env.http = HttpProbeResult::Absent;
  env.httpreq = bogus();
  auto out = plan_connection(target(Scheme::Http), env);
  EXPECT_EQ(out.result, ConnectionResult::TrustedHttps);
  EXPECT_EQ(out.transcript.count("status"), 0u);
  EXPECT_EQ(env.resolves, 0);
}

// ---- invariants over the full cross-product --------------------------------

TEST(PlanConnection, FailSecureTotality) {
  const Scheme schemes[] = {Scheme::Http, Scheme::Https, Scheme::None};
  const HttpProbeResult https_http[] = {HttpProbeResult::Present, HttpProbeResult::Absent,
                                        HttpProbeResult::Timeout};
  const HttpsProbeResult https_results[] = {HttpsProbeResult::TrustedOk,
                                            HttpsProbeResult::UntrustedCert,
                                            HttpsProbeResult::NoListener, HttpsProbeResult::Timeout};
  for (Scheme scheme : schemes)
    for (auto http : https_http)
      for (auto https : https_results)
        for (bool indicator : {false, true}) {
          ScriptedEnv env;
          env.http = http;
          env.https = https;
          env.httpreq = indicator ? secure_present() : bogus();
          auto out = plan_connection(target(scheme), env);

          std::string label = std::string(scheme_name(scheme)) + "/" + probe_name(http) + "/" +
                              probe_name(https) + "/" + (indicator ? "ind" : "noind");

          if (out.result == ConnectionResult::Http ||
              out.result == ConnectionResult::UntrustedHttps) {
            EXPECT_EQ(out.transcript.count("status", "disabled"), 1u) << label;
            EXPECT_TRUE(indicator) << label;
          }
          if (out.result == ConnectionResult::Blocked) {
            EXPECT_EQ(out.transcript.count("connect"), 0u) << label;
            EXPECT_EQ(env.http_sends + env.untrusted_sends, 0) << label;
          }
          if (out.result == ConnectionResult::TrustedHttps && scheme != Scheme::Http) {
            EXPECT_EQ(out.transcript.count("preload"), 0u) << label;
            EXPECT_EQ(out.transcript.count("httpreq"), 0u) << label;
            EXPECT_EQ(env.resolves, 0) << label;
          }
          // An unsecure result is only ever reached through a Disabled status.
          if (!indicator)
            EXPECT_TRUE(out.result == ConnectionResult::TrustedHttps ||
                        out.result == ConnectionResult::Blocked)
                << label;
        }
}

TEST(PlanConnection, SchemeFidelityWithIndicator) {
  for (Scheme scheme : {Scheme::Http, Scheme::Https, Scheme::None}) {
    ScriptedEnv env;
    env.https = HttpsProbeResult::TrustedOk;
    env.http = HttpProbeResult::Present;
    env.httpreq = secure_present();
    auto out = plan_connection(target(scheme), env);
    if (scheme == Scheme::Http)
      EXPECT_EQ(out.result, ConnectionResult::Http);
    else
      EXPECT_EQ(out.result, ConnectionResult::TrustedHttps);
  }
}

TEST(PlanConnection, SingleServerConsistencyWithIndicator) {
  // Exactly one server type available: every scheme lands on it.
  struct Case {
    HttpProbeResult http;
    HttpsProbeResult https;
    ConnectionResult want;
  };
  const Case cases[] = {
      {HttpProbeResult::Present, HttpsProbeResult::NoListener, ConnectionResult::Http},
      {HttpProbeResult::Absent, HttpsProbeResult::UntrustedCert, ConnectionResult::UntrustedHttps},
      {HttpProbeResult::Absent, HttpsProbeResult::TrustedOk, ConnectionResult::TrustedHttps},
  };
  for (const auto& c : cases)
    for (Scheme scheme : {Scheme::Http, Scheme::Https, Scheme::None}) {
      ScriptedEnv env;
      env.http = c.http;
      env.https = c.https;
      env.httpreq = secure_present();
      auto out = plan_connection(target(scheme), env);
      EXPECT_EQ(out.result, c.want) << scheme_name(scheme) << " " << probe_name(c.https);
    }
}

TEST(PlanConnection, UntrustedPreferredOverHttpOnDefaultScheme) {
  // Forced by the effectiveness table's HTTP+untrusted/None cell.
  ScriptedEnv env;
  env.http = HttpProbeResult::Present;
  env.https = HttpsProbeResult::UntrustedCert;
  env.httpreq = secure_present();
  auto out = plan_connection(target(Scheme::None), env);
  EXPECT_EQ(out.result, ConnectionResult::UntrustedHttps);
}

TEST(PlanConnection, TimeoutTreatedLikeAbsent) {
  ScriptedEnv env;
  env.http = HttpProbeResult::Timeout;
  env.https = HttpsProbeResult::TrustedOk;
  env.httpreq = bogus();
  auto out = plan_connection(target(Scheme::Http), env);
  EXPECT_EQ(out.result, ConnectionResult::TrustedHttps);

  ScriptedEnv env2;
  env2.https = HttpsProbeResult::Timeout;
  env2.http = HttpProbeResult::Present;
  env2.httpreq = secure_present();
  auto out2 = plan_connection(target(Scheme::None), env2);
  EXPECT_EQ(out2.result, ConnectionResult::Http);
}

TEST(PlanConnection, TotalProbeFailureBlocksWithTranscript) {
  ScriptedEnv env;
  env.http = HttpProbeResult::Absent;
  env.https = HttpsProbeResult::NoListener;
  env.httpreq = secure_present();
  auto out = plan_connection(target(Scheme::None), env);
  EXPECT_EQ(out.result, ConnectionResult::Blocked);
  EXPECT_GE(out.transcript.count("probe"), 2u) << "both failed branches recorded";
}

TEST(PlanConnection, StatusCheckedAtMostOncePerRun) {
  // http scheme, listener present, enforcement on, https then absent:
  // the https flow reuses the memoized status instead of re-resolving.
  ScriptedEnv env;
  env.http = HttpProbeResult::Present;
  env.https = HttpsProbeResult::NoListener;
  env.httpreq = bogus();
  auto out = plan_connection(target(Scheme::Http), env);
  EXPECT_EQ(out.result, ConnectionResult::Blocked);
  EXPECT_EQ(env.resolves, 1);
  EXPECT_EQ(out.transcript.count("status"), 1u);
}

TEST(PlanConnection, TranscriptDeterministicAndSerializable) {
  auto run = [] {
    ScriptedEnv env;
    env.http = HttpProbeResult::Present;
    env.https = HttpsProbeResult::UntrustedCert;
    env.httpreq = secure_present();
    return plan_connection(target(Scheme::Http), env).transcript.to_text();
  };
  std::string a = run(), b = run();
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find(" probe http httponly.site 80 -> present"), std::string::npos) << a;
  EXPECT_NE(a.find(" outcome http"), std::string::npos) << a;
  // Line format: "<ms> <kind> <detail>", timestamps monotonic from run start.
  EXPECT_TRUE(isdigit(static_cast<unsigned char>(a[0]))) << a;
  EXPECT_NE(a.find(" probe "), std::string::npos) << a;
}

TEST(PlanConnection, IpLiteralTargetIsExemptButStillLazy) {
  ScriptedEnv env;
  env.https = HttpsProbeResult::NoListener;
  env.http = HttpProbeResult::Present;
  auto out = plan_connection(target(Scheme::None, "192.168.1.1"), env);
  EXPECT_EQ(out.result, ConnectionResult::Http);
  EXPECT_EQ(out.transcript.count("status", "exemption"), 1u);
  EXPECT_EQ(env.resolves, 0);
}
