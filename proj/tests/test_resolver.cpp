#include <gtest/gtest.h>

#include "hstse/resolver/cache.hpp"
#include "hstse/resolver/stub.hpp"
#include "hstse/sim/dns_server.hpp"
#include "hstse/sim/zone.hpp"

using namespace hstse;
using namespace hstse::dns;
using namespace hstse::dnssec;
using namespace hstse::resolver;
using namespace hstse::sim;

namespace {

constexpr std::int64_t kNow = VirtualClock::kDefaultBaseEpochSeconds;

// root -> site -> {httponly.site with HTTPREQ, warm.site without}
struct ResolverWorld {
  RecursiveServer server;
  ClockPtr clock = std::make_shared<VirtualClock>();
  TrustAnchor root_anchor;
  Name target = Name::parse("httponly.site");
  Name sibling = Name::parse("warm.site");

  explicit ResolverWorld(bool target_httpreq = true, bool include_subdomains = false,
                         bool target_zone_signed = true) {
    ZoneBuilder leaf_builder(target);
    if (target_httpreq) leaf_builder.httpreq(target, include_subdomains);
    SignedZone leaf = leaf_builder.build(kNow);
    SignedZone warm = ZoneBuilder(sibling).build(kNow);
    SignedZone tld =
        ZoneBuilder(Name::parse("site"))
            .delegate(target, target_zone_signed ? std::optional(leaf.ds_for_parent()) : std::nullopt)
            .delegate(sibling, warm.ds_for_parent())
            .build(kNow);
    SignedZone root = ZoneBuilder(Name::root()).delegate(tld.apex(), tld.ds_for_parent()).build(kNow);
    root_anchor = TrustAnchor{Name::root(), 13, root.ds_for_parent(), AnchorKind::Root};
    server.add_zone(std::move(leaf), target_zone_signed);
    server.add_zone(std::move(warm));
    server.add_zone(std::move(tld));
    server.add_zone(std::move(root));
  }

  SimDnsTransport transport(DnsAttacker attacker = {}, std::int64_t rtt = 20) {
    return SimDnsTransport(server, clock, rtt, 2, attacker);
  }

  StubResolver stub() { return StubResolver({root_anchor}); }

  std::function<std::int64_t()> now_fn() {
    return [c = clock] { return c->now_ms(); };
  }
};

std::vector<std::string> plan_text(const std::vector<ResolutionQuery>& plan) {
  std::vector<std::string> out;
  for (const auto& q : plan) out.push_back(rrtype_name(q.qtype) + " " + q.qname.text());
  return out;
}

}  // namespace

TEST(PlanQueries, ColdCacheTwoCutsIsSixQueries) {
  ResolverWorld w;
  CacheStore cache;
  auto plan = w.stub().plan_queries(w.target, cache, kNow);
  EXPECT_EQ(plan_text(plan), (std::vector<std::string>{
                                 "HTTPREQ httponly.site",
                                 "DNSKEY httponly.site",
                                 "DS httponly.site",
                                 "DNSKEY site",
                                 "DS site",
                                 "DNSKEY .",
                             }));
}

TEST(PlanQueries, TypicalCacheIsThreeQueries) {
  ResolverWorld w;
  CacheStore cache;
  // Warm the cache by resolving a sibling under the same TLD.
  auto t = w.transport();
  auto stub = w.stub();
  auto warm = stub.resolve_httpreq(w.sibling, cache, t, w.now_fn());
  ASSERT_EQ(warm.validation.state, ValidationState::SecureAbsent) << warm.validation.diagnostic;

  auto plan = stub.plan_queries(w.target, cache, w.clock->now_seconds());
  EXPECT_EQ(plan_text(plan), (std::vector<std::string>{
                                 "HTTPREQ httponly.site",
                                 "DNSKEY httponly.site",
                                 "DS httponly.site",
                             }));
}

TEST(PlanQueries, FullyCachedIsZeroQueries) {
  ResolverWorld w;
  CacheStore cache;
  auto t = w.transport();
  auto stub = w.stub();
  stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  EXPECT_TRUE(stub.plan_queries(w.target, cache, w.clock->now_seconds()).empty());
}

TEST(Resolve, ColdCacheSecurePresentTimingAndSizes) {
  ResolverWorld w(true, true);
  CacheStore cache;
  auto t = w.transport();
  auto stub = w.stub();
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());

  ASSERT_EQ(validation.state, ValidationState::SecurePresent) << validation.diagnostic;
  EXPECT_TRUE(validation.include_subdomains);
  EXPECT_EQ(validation.anchor_kind, AnchorKind::Root);
  EXPECT_EQ(metrics.round_trips, 6);
  EXPECT_EQ(metrics.domain_length, std::string("httponly.site").size());
  // rtt 20 ms + 2 ms processing per exchange.
  EXPECT_GE(metrics.wall_ms, 120);
  EXPECT_LE(metrics.wall_ms, 150);

  auto httpreq_size = metrics.response_size(rrtype::HTTPREQ);
  ASSERT_TRUE(httpreq_size.has_value());
  EXPECT_NEAR(static_cast<double>(*httpreq_size), 220.0, 220.0 * 0.25);
  auto dnskey_size = metrics.response_size(rrtype::DNSKEY);
  ASSERT_TRUE(dnskey_size.has_value());
  EXPECT_NEAR(static_cast<double>(*dnskey_size), 260.0, 260.0 * 0.25);
  auto ds_size = metrics.response_size(rrtype::DS);
  ASSERT_TRUE(ds_size.has_value());
  EXPECT_NEAR(static_cast<double>(*ds_size), 270.0, 270.0 * 0.25);
}

TEST(Resolve, WarmCacheAnswersWithoutTraffic) {
  ResolverWorld w;
  CacheStore cache;
  auto t = w.transport();
  auto stub = w.stub();
  stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  EXPECT_EQ(validation.state, ValidationState::SecurePresent);
  EXPECT_EQ(metrics.round_trips, 0);
  EXPECT_TRUE(metrics.messages.empty());
}

TEST(Resolve, NegativeAnswerProvenAndCachedPerSoaMinimum) {
  ResolverWorld w(/*target_httpreq=*/false);
  CacheStore cache;
  auto t = w.transport();
  auto stub = w.stub();
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  ASSERT_EQ(validation.state, ValidationState::SecureAbsent) << validation.diagnostic;

  // Signed negative response: SOA+NSEC with signatures, bounded size.
  auto neg_size = metrics.response_size(rrtype::HTTPREQ);
  ASSERT_TRUE(neg_size.has_value());
  EXPECT_LE(*neg_size, 500u);

  // Second resolution inside the SOA minimum is answered from cache.
  auto again = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  EXPECT_EQ(again.validation.state, ValidationState::SecureAbsent);
  EXPECT_EQ(again.metrics.round_trips, 0);

  // After the negative TTL passes, the stub asks again.
  w.clock->advance_ms((300 + 1) * 1000);
  auto after = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  EXPECT_EQ(after.validation.state, ValidationState::SecureAbsent);
  EXPECT_GT(after.metrics.round_trips, 0);
}

TEST(Resolve, DroppedResponsesFailSecureWithinTimeoutBudget) {
  ResolverWorld w;
  CacheStore cache;
  auto t = w.transport({.drop_dns = true});
  auto stub = w.stub();
  std::int64_t before = w.clock->now_ms();
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  EXPECT_EQ(validation.state, ValidationState::Bogus);
  // One query step, two attempts, 2 s each.
  EXPECT_EQ(metrics.round_trips, 1);
  EXPECT_EQ(w.clock->now_ms() - before, 4000);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(Resolve, TamperedSignatureIsBogusAndNeverCached) {
  ResolverWorld w;
  CacheStore cache;
  auto t = w.transport({.tamper_rrsig = true});
  auto stub = w.stub();
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  EXPECT_EQ(validation.state, ValidationState::Bogus);
  EXPECT_EQ(cache.size(), 0u) << "poisoned material must not enter the cache";
}

TEST(Resolve, StrippedAnswerIsBogusNotAbsent) {
  ResolverWorld w;
  CacheStore cache;
  auto t = w.transport({.strip_httpreq = true});
  auto stub = w.stub();
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  // A missing answer is not a proven absence.
  EXPECT_EQ(validation.state, ValidationState::Bogus);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(Resolve, UnsignedDelegationResolvesInsecure) {
  ResolverWorld w(/*target_httpreq=*/true, false, /*target_zone_signed=*/false);
  CacheStore cache;
  auto t = w.transport();
  auto stub = w.stub();
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  EXPECT_EQ(validation.state, ValidationState::Insecure) << validation.diagnostic;
}

TEST(Resolve, CustomAnchorZoneResolvesInTwoQueries) {
  Name apex = Name::parse("corp.internal");
  Name target = Name::parse("wiki.corp.internal");
  SignedZone zone = ZoneBuilder(apex).httpreq(target, false).build(kNow);
  TrustAnchor custom{apex, 13, zone.key().public_bytes(), AnchorKind::Custom};

  RecursiveServer server;
  server.add_zone(std::move(zone));
  auto clock = std::make_shared<VirtualClock>();
  SimDnsTransport t(server, clock, 20);

  StubResolver stub({custom});
  CacheStore cache;
  auto [validation, metrics] =
      stub.resolve_httpreq(target, cache, t, [&] { return clock->now_ms(); });
  ASSERT_EQ(validation.state, ValidationState::SecurePresent) << validation.diagnostic;
  EXPECT_EQ(validation.anchor_kind, AnchorKind::Custom);
  EXPECT_EQ(metrics.round_trips, 2);
}

TEST(Resolve, AncestorRecordCoversSubdomainQueries) {
  Name apex = Name::parse("httponly.site");
  Name deep = Name::parse("legacy.httponly.site");
  ZoneBuilder leaf_builder(apex);
  leaf_builder.httpreq(apex, /*include_subdomains=*/true);
  SignedZone leaf = leaf_builder.build(kNow);
  SignedZone tld = ZoneBuilder(Name::parse("site")).delegate(apex, leaf.ds_for_parent()).build(kNow);
  SignedZone root = ZoneBuilder(Name::root()).delegate(tld.apex(), tld.ds_for_parent()).build(kNow);
  TrustAnchor anchor{Name::root(), 13, root.ds_for_parent(), AnchorKind::Root};
  RecursiveServer server;
  server.add_zone(std::move(leaf));
  server.add_zone(std::move(tld));
  server.add_zone(std::move(root));
  auto clock = std::make_shared<VirtualClock>();
  SimDnsTransport t(server, clock, 20);

  StubResolver stub({anchor});
  CacheStore cache;
  auto [validation, metrics] = stub.resolve_httpreq(deep, cache, t, [&] { return clock->now_ms(); });
  ASSERT_EQ(validation.state, ValidationState::SecurePresent) << validation.diagnostic;
  EXPECT_TRUE(validation.include_subdomains);
}

TEST(Cache, TtlDrivenExpiry) {
  CacheStore cache;
  SignedZone zone =
      ZoneBuilder(Name::parse("ttl.site")).ttl(60).httpreq(Name::parse("ttl.site"), false).build(kNow);
  auto entry = *zone.find(Name::parse("ttl.site"), rrtype::HTTPREQ);
  cache.put(Name::parse("ttl.site"), rrtype::HTTPREQ, entry, AnchorKind::Root, kNow);

  EXPECT_TRUE(cache.get(Name::parse("ttl.site"), rrtype::HTTPREQ, kNow + 59).has_value());
  EXPECT_FALSE(cache.get(Name::parse("ttl.site"), rrtype::HTTPREQ, kNow + 61).has_value());
  EXPECT_FALSE(cache.get(Name::parse("ttl.site"), rrtype::DNSKEY, kNow + 1).has_value());
  EXPECT_FALSE(cache.get(Name::parse("other.site"), rrtype::HTTPREQ, kNow + 1).has_value());
}

TEST(Metrics, CsvHasResponseRows) {
  ResolverWorld w;
  CacheStore cache;
  auto t = w.transport();
  auto stub = w.stub();
  auto [validation, metrics] = stub.resolve_httpreq(w.target, cache, t, w.now_fn());
  std::string csv = metrics.to_csv();
  EXPECT_EQ(csv.rfind("query_type,size_bytes,rtt_index\n", 0), 0u);
  EXPECT_NE(csv.find("HTTPREQ,"), std::string::npos);
  EXPECT_NE(csv.find("DNSKEY,"), std::string::npos);
  EXPECT_NE(csv.find("DS,"), std::string::npos);
  // 6 responses -> 6 data rows.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}
