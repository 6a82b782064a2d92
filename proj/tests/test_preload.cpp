#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "hstse/preload/list.hpp"

using namespace hstse;
using namespace hstse::preload;

namespace {

constexpr std::int64_t kT0 = 1767225600;  // fixed build instant

// Independent reference: linear scan with the suffix rule. The trie lookup
// must agree with this on every (entry set, probe) pair.
LookupResult reference_lookup(const std::vector<PreloadEntry>& entries, std::string domain,
                              std::int64_t now, std::int64_t expires_at) {
  if (now >= expires_at) return {LookupState::Expired, false};
  std::transform(domain.begin(), domain.end(), domain.begin(),
                 [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; });
  if (!domain.empty() && domain.back() == '.') domain.pop_back();
  for (const auto& e : entries)
    if (e.domain == domain) return {LookupState::Hit, e.include_subdomains};
  for (const auto& e : entries)
    if (e.include_subdomains && domain.size() > e.domain.size() &&
        domain.compare(domain.size() - e.domain.size(), e.domain.size(), e.domain) == 0 &&
        domain[domain.size() - e.domain.size() - 1] == '.')
      return {LookupState::Hit, true};
  return {LookupState::Miss, false};
}

std::string random_label(std::mt19937& rng, int max_len = 8) {
  static const char chars[] = "abcdefghijklmnopqrstuvwxyz0123456789-_";
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(chars) - 2);
  std::string out;
  int n = len(rng);
  for (int i = 0; i < n; ++i) out.push_back(chars[pick(rng)]);
  return out;
}

std::string random_domain(std::mt19937& rng, int min_labels = 2, int max_labels = 4) {
  std::uniform_int_distribution<int> labels(min_labels, max_labels);
  std::string out;
  int n = labels(rng);
  for (int i = 0; i < n; ++i) {
    if (i) out.push_back('.');
    out += random_label(rng);
  }
  return out;
}

}  // namespace

TEST(Build, EmptyListAlwaysMisses) {
  PreloadArtifact a = build({}, kT0);
  EXPECT_EQ(a.expires_at - a.issued_at, kDefaultValiditySeconds);
  EXPECT_EQ(lookup(a, "anything.example", kT0).state, LookupState::Miss);
  EXPECT_EQ(lookup(a, "x.y", kT0 + 1).state, LookupState::Miss);
  // Header + empty code table + zero-bit trie + CRC.
  EXPECT_EQ(a.encoded.size(), 4u + 1 + 8 + 8 + 2 + 4 + 0 + 4);
}

TEST(Build, SubdomainFlagCoversDescendants) {
  PreloadArtifact a = build({{"example.test", true, false}}, kT0);
  auto hit = lookup(a, "sub.example.test", kT0);
  EXPECT_EQ(hit.state, LookupState::Hit);
  EXPECT_TRUE(hit.include_subdomains);
  EXPECT_EQ(lookup(a, "example.test", kT0).state, LookupState::Hit);
  EXPECT_EQ(lookup(a, "deep.sub.example.test", kT0).state, LookupState::Hit);
  EXPECT_EQ(lookup(a, "notexample.test", kT0).state, LookupState::Miss);
}

TEST(Build, NoFlagMeansExactOnly) {
  PreloadArtifact a = build({{"example.test", false, false}}, kT0);
  EXPECT_EQ(lookup(a, "example.test", kT0).state, LookupState::Hit);
  EXPECT_FALSE(lookup(a, "example.test", kT0).include_subdomains);
  EXPECT_EQ(lookup(a, "deep.a.example.test", kT0).state, LookupState::Miss);
  EXPECT_EQ(lookup(a, "a.example.test", kT0).state, LookupState::Miss);
}

TEST(Build, RejectsBadEntriesListingOffenders) {
  try {
    build({{"ok.example", false, false},
           {"bad..name", false, false},
           {"ok.example", true, false},
           {"single", false, false},
           {"Ään.example", false, false}},
          kT0);
    FAIL() << "expected BuildError";
  } catch (const BuildError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("bad..name"), std::string::npos);
    EXPECT_NE(msg.find("duplicate"), std::string::npos);
    EXPECT_NE(msg.find("single"), std::string::npos);
    EXPECT_NE(msg.find("invalid character"), std::string::npos);
  }
  // Suffix-level opt-out must be explicit.
  EXPECT_NO_THROW(build({{"arpa", false, true}}, kT0));
  EXPECT_THROW(build({}, kT0, 0), BuildError);
}

TEST(Build, CaseFoldsBeforeBuild) {
  PreloadArtifact a = build({{"Example.TEST", false, false}}, kT0);
  ASSERT_EQ(a.entries.size(), 1u);
  EXPECT_EQ(a.entries[0].domain, "example.test");
  EXPECT_EQ(lookup(a, "EXAMPLE.test", kT0).state, LookupState::Hit);
}

TEST(Lookup, ExpiryBeatsMembership) {
  PreloadArtifact a = build({{"example.test", false, false}}, kT0);
  EXPECT_EQ(lookup(a, "example.test", a.expires_at - 1).state, LookupState::Hit);
  EXPECT_EQ(lookup(a, "example.test", a.expires_at).state, LookupState::Expired);
  EXPECT_EQ(lookup(a, "not-on-list.test", a.expires_at).state, LookupState::Expired);
}

TEST(Lookup, ExpiryIsMonotone) {
  PreloadArtifact a = build({{"example.test", false, false}}, kT0);
  bool seen_expired = false;
  for (std::int64_t t = a.expires_at - 5; t < a.expires_at + 5; ++t) {
    bool expired = lookup(a, "example.test", t).state == LookupState::Expired;
    EXPECT_FALSE(seen_expired && !expired) << "expiry must not un-happen";
    seen_expired = seen_expired || expired;
  }
  EXPECT_TRUE(seen_expired);
}

TEST(Decode, RoundTripReproducesEntrySet) {
  std::mt19937 rng(42);
  std::set<std::string> seen;
  std::vector<PreloadEntry> entries;
  std::bernoulli_distribution flag(0.4);
  while (entries.size() < 1000) {
    std::string d = random_domain(rng);
    if (!seen.insert(d).second) continue;
    entries.push_back({d, flag(rng), false});
  }
  PreloadArtifact a = build(entries, kT0);
  PreloadArtifact b = decode(a.encoded);
  EXPECT_EQ(b.issued_at, a.issued_at);
  EXPECT_EQ(b.expires_at, a.expires_at);
  ASSERT_EQ(b.entries.size(), a.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(b.entries[i].domain, a.entries[i].domain);
    EXPECT_EQ(b.entries[i].include_subdomains, a.entries[i].include_subdomains);
  }
  EXPECT_EQ(b.encoded, a.encoded);
}

TEST(Decode, DistinctErrorClasses) {
  PreloadArtifact a = build({{"example.test", true, false}}, kT0);

  Bytes bad_magic = a.encoded;
  bad_magic[0] = 'X';
  try {
    decode(bad_magic);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.code(), DecodeErrorCode::BadMagic);
  }

  Bytes bad_version = a.encoded;
  bad_version[4] = 9;
  try {
    decode(bad_version);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.code(), DecodeErrorCode::UnknownVersion);
  }

  Bytes truncated(a.encoded.begin(), a.encoded.begin() + 12);
  try {
    decode(truncated);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.code(), DecodeErrorCode::Truncated);
  }

  // Any single payload byte flip trips the checksum.
  for (std::size_t pos : {std::size_t{24}, a.encoded.size() / 2, a.encoded.size() - 5}) {
    Bytes flipped = a.encoded;
    flipped[pos] ^= 0x40;
    try {
      decode(flipped);
      FAIL() << "byte " << pos;
    } catch (const DecodeError& e) {
      EXPECT_EQ(e.code(), DecodeErrorCode::ChecksumMismatch) << "byte " << pos;
    }
  }
}

TEST(Property, TrieAgreesWithReferenceScan) {
  std::mt19937 rng(20260809);
  std::bernoulli_distribution flag(0.5);
  for (int round = 0; round < 40; ++round) {
    std::set<std::string> seen;
    std::vector<PreloadEntry> entries;
    std::uniform_int_distribution<int> count(0, 60);
    int n = count(rng);
    while (static_cast<int>(entries.size()) < n) {
      std::string d = random_domain(rng, 2, 3);
      if (!seen.insert(d).second) continue;
      entries.push_back({d, flag(rng), false});
    }
    PreloadArtifact a = build(entries, kT0);
    for (int probe = 0; probe < 50; ++probe) {
      std::string d;
      switch (probe % 4) {
        case 0: d = entries.empty() ? random_domain(rng) : entries[probe % entries.size()].domain; break;
        case 1:
          d = random_label(rng) + "." +
              (entries.empty() ? random_domain(rng) : entries[(probe / 2) % entries.size()].domain);
          break;
        case 2: d = random_domain(rng); break;
        case 3: {
          // Parent of an entry: strip its first label.
          std::string base = entries.empty() ? random_domain(rng) : entries[probe % entries.size()].domain;
          auto dot = base.find('.');
          d = dot == std::string::npos ? base : base.substr(dot + 1);
          if (d.find('.') == std::string::npos) d = random_domain(rng);
          break;
        }
      }
      auto got = lookup(a, d, kT0);
      auto want = reference_lookup(a.entries, d, kT0, a.expires_at);
      ASSERT_EQ(got.state, want.state) << "round " << round << " probe '" << d << "'";
      ASSERT_EQ(got.include_subdomains, want.include_subdomains) << "probe '" << d << "'";
    }
  }
}

TEST(Property, EncodedSmallerThanPlaintextAt100k) {
  std::mt19937 rng(7);
  std::set<std::string> seen;
  std::vector<PreloadEntry> entries;
  std::size_t plaintext = 0;
  while (entries.size() < 100000) {
    std::string d = random_domain(rng, 2, 4);
    if (!seen.insert(d).second) continue;
    plaintext += d.size() + 1;  // newline-joined source
    entries.push_back({d, false, false});
  }
  PreloadArtifact a = build(entries, kT0);
  EXPECT_LT(a.encoded.size(), plaintext)
      << "encoded " << a.encoded.size() << " vs plaintext " << plaintext;
}

TEST(Jsonl, ParseAndEmit) {
  std::istringstream in(R"({"domain":"legacy.example","include_subdomains":true}
{"domain":"printer.lan","include_subdomains":false}
)");
  auto entries = parse_jsonl(in);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].domain, "legacy.example");
  EXPECT_TRUE(entries[0].include_subdomains);

  std::string out = to_jsonl(entries);
  std::istringstream back(out);
  auto again = parse_jsonl(back);
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again[1].domain, "printer.lan");

  std::istringstream bad("{\"nope\":1}\n");
  EXPECT_THROW(parse_jsonl(bad), BuildError);
}
