#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "hstse/preload/huffman.hpp"
#include "hstse/util/bytes.hpp"

namespace hstse::preload {

inline constexpr std::int64_t kDefaultValiditySeconds = 42ll * 86400;  // six weeks

// Trie symbol alphabet: the domain-name charset plus two structural symbols.
namespace symbol {
inline constexpr std::size_t kDot = 38;
inline constexpr std::size_t kEnd = 39;       // terminates an entry
inline constexpr std::size_t kSubFlag = 40;   // entry covers subdomains
inline constexpr std::size_t kAlphabetSize = 41;

inline int from_char(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c >= '0' && c <= '9') return 26 + (c - '0');
  if (c == '-') return 36;
  if (c == '_') return 37;
  if (c == '.') return kDot;
  return -1;
}

inline char to_char(std::size_t s) {
  if (s < 26) return static_cast<char>('a' + s);
  if (s < 36) return static_cast<char>('0' + (s - 26));
  if (s == 36) return '-';
  if (s == 37) return '_';
  if (s == kDot) return '.';
  return '?';
}
}  // namespace symbol

struct PreloadEntry {
  std::string domain;
  bool include_subdomains = false;
  // Single-label entries are rejected unless explicitly flagged as a
  // public-suffix-level opt-out.
  bool suffix_optout = false;

  friend bool operator==(const PreloadEntry& a, const PreloadEntry& b) {
    return a.domain == b.domain && a.include_subdomains == b.include_subdomains;
  }
  friend bool operator<(const PreloadEntry& a, const PreloadEntry& b) {
    return a.domain < b.domain;
  }
};

class BuildError : public std::runtime_error {
public:
  explicit BuildError(const std::string& what) : std::runtime_error(what) {}
};

enum class DecodeErrorCode { BadMagic, UnknownVersion, Truncated, ChecksumMismatch, CorruptPayload };

class DecodeError : public std::runtime_error {
public:
  DecodeError(DecodeErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  DecodeErrorCode code() const { return code_; }

  static const char* code_name(DecodeErrorCode c) {
    switch (c) {
      case DecodeErrorCode::BadMagic: return "bad_magic";
      case DecodeErrorCode::UnknownVersion: return "unknown_version";
      case DecodeErrorCode::Truncated: return "truncated";
      case DecodeErrorCode::ChecksumMismatch: return "checksum_mismatch";
      case DecodeErrorCode::CorruptPayload: return "corrupt_payload";
    }
    return "?";
  }

private:
  DecodeErrorCode code_;
};

enum class LookupState { Hit, Miss, Expired };

struct LookupResult {
  LookupState state = LookupState::Miss;
  bool include_subdomains = false;
};

/// A published release of the HTTP-Required Preload list. `encoded` is the
/// distributable byte form; lookups run directly on its Huffman-coded trie
/// bit stream without materializing nodes.
struct PreloadArtifact {
  // Release number, tracked by the publisher; the binary format carries a
  // format-version octet instead.
  std::uint32_t version = 1;
  std::int64_t issued_at = 0;
  std::int64_t expires_at = 0;
  std::vector<PreloadEntry> entries;  // sorted by domain
  Bytes encoded;
};

namespace detail {

inline constexpr char kMagic[4] = {'H', 'R', 'P', 'L'};
inline constexpr std::uint8_t kFormatVersion = 1;

inline std::string fold_domain(const std::string& domain) {
  std::string out = domain;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; });
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

inline std::optional<std::string> entry_problem(const PreloadEntry& e) {
  const std::string& d = e.domain;
  if (d.empty()) return "empty domain";
  if (d.size() > 253) return "domain longer than 253 bytes";
  std::size_t labels = 1;
  std::size_t label_len = 0;
  for (char c : d) {
    if (c == '.') {
      if (label_len == 0) return "empty label";
      label_len = 0;
      ++labels;
      continue;
    }
    if (symbol::from_char(c) < 0) return std::string("invalid character '") + c + "'";
    if (++label_len > 63) return "label longer than 63 bytes";
  }
  if (label_len == 0) return "empty label";
  if (labels < 2 && !e.suffix_optout) return "single-label domain without suffix opt-out flag";
  return std::nullopt;
}

// Entry as a trie symbol string: reversed domain, then one of the two
// terminators. Reversal puts the rightmost label at the root so ancestor
// entries are prefixes of their subdomains.
inline std::vector<std::size_t> entry_symbols(const PreloadEntry& e) {
  std::vector<std::size_t> out;
  out.reserve(e.domain.size() + 1);
  for (auto it = e.domain.rbegin(); it != e.domain.rend(); ++it)
    out.push_back(static_cast<std::size_t>(symbol::from_char(*it)));
  out.push_back(e.include_subdomains ? symbol::kSubFlag : symbol::kEnd);
  return out;
}

struct TrieNode {
  std::map<std::size_t, TrieNode> children;
};

inline void trie_insert(TrieNode& root, const std::vector<std::size_t>& symbols) {
  TrieNode* node = &root;
  for (auto s : symbols) node = &node->children[s];
}

// Pre-order node layout. Terminator edges carry no body; the last child of
// a node needs no length prefix because its body runs to the node's end.
// Single-child chain nodes therefore cost one count bit plus one code.
inline BitWriter encode_node(const TrieNode& node, const HuffmanCode& code) {
  BitWriter out;
  out.gamma(node.children.size());
  std::size_t i = 0;
  for (const auto& [sym, child] : node.children) {
    bool last = ++i == node.children.size();
    code.encode(sym, out);
    if (sym == symbol::kEnd || sym == symbol::kSubFlag) continue;
    BitWriter body = encode_node(child, code);
    if (!last) out.gamma(body.bit_count());
    out.append(body);
  }
  return out;
}

/// One node visit over the encoded stream: terminator flags plus the body
/// position of the child matching `want`, if any.
struct NodeScan {
  bool terminal_exact = false;
  bool terminal_subdomains = false;
  std::optional<std::uint64_t> match_pos;
};

inline NodeScan scan_node(BitReader& r, const HuffmanCode& code, std::uint64_t node_pos,
                          std::optional<std::size_t> want) {
  r.seek(node_pos);
  NodeScan out;
  std::uint64_t k = r.gamma();
  for (std::uint64_t j = 0; j < k; ++j) {
    std::size_t sym = code.decode(r);
    if (sym == symbol::kEnd) {
      out.terminal_exact = true;
      continue;
    }
    if (sym == symbol::kSubFlag) {
      out.terminal_subdomains = true;
      continue;
    }
    bool last = j + 1 == k;
    std::uint64_t body_bits = last ? 0 : r.gamma();
    if (want && sym == *want) out.match_pos = r.position();
    if (last) break;  // last child's body runs to the node's end
    r.seek(r.position() + body_bits);
  }
  return out;
}

inline void enumerate_entries(BitReader& r, const HuffmanCode& code, std::string& prefix,
                              std::vector<PreloadEntry>& out) {
  std::uint64_t k = r.gamma();
  for (std::uint64_t j = 0; j < k; ++j) {
    std::size_t sym = code.decode(r);
    if (sym == symbol::kEnd || sym == symbol::kSubFlag) {
      std::string domain(prefix.rbegin(), prefix.rend());
      bool suffix = domain.find('.') == std::string::npos;
      out.push_back({std::move(domain), sym == symbol::kSubFlag, suffix});
      continue;
    }
    if (j + 1 < k) r.gamma();  // sibling skip length, unused when reading in order
    prefix.push_back(symbol::to_char(sym));
    enumerate_entries(r, code, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace detail

/// Builds an artifact from validated entries. The trie is keyed by reversed
/// names; the Huffman code is computed from the symbol frequencies of this
/// particular entry set.
inline PreloadArtifact build(std::vector<PreloadEntry> entries, std::int64_t issued_at,
                             std::int64_t validity_seconds = kDefaultValiditySeconds) {
  if (validity_seconds <= 0) throw BuildError("validity must be positive");

  std::vector<std::string> problems;
  for (auto& e : entries) {
    e.domain = detail::fold_domain(e.domain);
    if (auto p = detail::entry_problem(e)) problems.push_back(e.domain + ": " + *p);
  }
  std::sort(entries.begin(), entries.end());
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].domain == entries[i - 1].domain)
      problems.push_back(entries[i].domain + ": duplicate entry");
  if (!problems.empty()) {
    std::string msg = "invalid preload entries:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw BuildError(msg);
  }

  std::vector<std::uint64_t> freq(symbol::kAlphabetSize, 0);
  detail::TrieNode root;
  for (const auto& e : entries) {
    auto symbols = detail::entry_symbols(e);
    for (auto s : symbols) ++freq[s];
    detail::trie_insert(root, symbols);
  }
  HuffmanCode code = HuffmanCode::from_frequencies(freq);
  BitWriter trie;
  if (!root.children.empty()) trie = detail::encode_node(root, code);

  PreloadArtifact artifact;
  artifact.issued_at = issued_at;
  artifact.expires_at = issued_at + validity_seconds;
  artifact.entries = std::move(entries);

  BytesWriter w;
  w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(detail::kMagic), 4));
  w.u8(detail::kFormatVersion);
  w.u64(static_cast<std::uint64_t>(artifact.issued_at));
  w.u64(static_cast<std::uint64_t>(artifact.expires_at));
  Bytes table = code.table_bytes();
  w.u16(static_cast<std::uint16_t>(table.size()));
  w.raw(table);
  w.u32(static_cast<std::uint32_t>(trie.bit_count()));
  w.raw(trie.bytes());
  std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0L, w.bytes().data(), static_cast<uInt>(w.bytes().size())));
  w.u32(crc);
  artifact.encoded = w.take();
  return artifact;
}

/// Decodes and fully validates an artifact. Each failure class carries a
/// distinct machine-readable code.
inline PreloadArtifact decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4)
    throw DecodeError(DecodeErrorCode::Truncated, "shorter than the magic header");
  if (std::memcmp(bytes.data(), detail::kMagic, 4) != 0)
    throw DecodeError(DecodeErrorCode::BadMagic, "magic bytes are not HRPL");
  if (bytes.size() < 5)
    throw DecodeError(DecodeErrorCode::Truncated, "missing version octet");
  if (bytes[4] != detail::kFormatVersion)
    throw DecodeError(DecodeErrorCode::UnknownVersion,
                      "unknown format version " + std::to_string(bytes[4]));
  // magic + version + timestamps + table length + bit count + CRC
  constexpr std::size_t kMinSize = 4 + 1 + 8 + 8 + 2 + 4 + 4;
  if (bytes.size() < kMinSize)
    throw DecodeError(DecodeErrorCode::Truncated, "header truncated");

  std::uint32_t stored_crc = (std::uint32_t{bytes[bytes.size() - 4]} << 24) |
                             (std::uint32_t{bytes[bytes.size() - 3]} << 16) |
                             (std::uint32_t{bytes[bytes.size() - 2]} << 8) |
                             std::uint32_t{bytes[bytes.size() - 1]};
  std::uint32_t actual_crc = static_cast<std::uint32_t>(
      ::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4)));
  if (stored_crc != actual_crc)
    throw DecodeError(DecodeErrorCode::ChecksumMismatch, "CRC-32 mismatch");

  try {
    BytesReader r(bytes.subspan(0, bytes.size() - 4));
    r.raw(5);  // magic + version, already checked
    PreloadArtifact artifact;
    artifact.issued_at = static_cast<std::int64_t>(r.u64());
    artifact.expires_at = static_cast<std::int64_t>(r.u64());
    std::uint16_t table_len = r.u16();
    Bytes table = r.raw(table_len);
    std::uint32_t bit_count = r.u32();
    Bytes trie_bytes = r.raw((bit_count + 7) / 8);
    if (!r.done())
      throw DecodeError(DecodeErrorCode::CorruptPayload, "trailing bytes after trie stream");

    HuffmanCode code = HuffmanCode::from_table_bytes(table, symbol::kAlphabetSize);
    BitReader bits(trie_bytes, bit_count);
    std::string prefix;
    if (bit_count > 0) detail::enumerate_entries(bits, code, prefix, artifact.entries);
    std::sort(artifact.entries.begin(), artifact.entries.end());
    artifact.encoded.assign(bytes.begin(), bytes.end());
    return artifact;
  } catch (const DecodeError&) {
    throw;
  } catch (const WireError& e) {
    throw DecodeError(DecodeErrorCode::CorruptPayload, e.what());
  }
}

/// Trie lookup straight off the encoded bit stream: O(name length) node
/// visits. Expiry is checked first; an expired artifact answers Expired for
/// every probe.
inline LookupResult lookup(const PreloadArtifact& artifact, const std::string& domain,
                           std::int64_t now) {
  if (now >= artifact.expires_at) return {LookupState::Expired, false};

  std::string folded = detail::fold_domain(domain);
  std::vector<std::size_t> symbols;
  symbols.reserve(folded.size());
  for (auto it = folded.rbegin(); it != folded.rend(); ++it) {
    int s = symbol::from_char(*it);
    if (s < 0) return {LookupState::Miss, false};  // not a preloadable name
    symbols.push_back(static_cast<std::size_t>(s));
  }

  // Re-open the encoded trie region.
  std::span<const std::uint8_t> bytes = artifact.encoded;
  if (bytes.size() < 23) return {LookupState::Miss, false};
  std::uint16_t table_len = static_cast<std::uint16_t>(bytes[21] << 8 | bytes[22]);
  std::size_t trie_off = 23 + table_len;
  if (bytes.size() < trie_off + 4) return {LookupState::Miss, false};
  std::uint32_t bit_count = (std::uint32_t{bytes[trie_off]} << 24) |
                            (std::uint32_t{bytes[trie_off + 1]} << 16) |
                            (std::uint32_t{bytes[trie_off + 2]} << 8) |
                            std::uint32_t{bytes[trie_off + 3]};
  if (bit_count == 0) return {LookupState::Miss, false};
  HuffmanCode code =
      HuffmanCode::from_table_bytes(bytes.subspan(23, table_len), symbol::kAlphabetSize);
  BitReader r(bytes.subspan(trie_off + 4), bit_count);

  bool ancestor_hit = false;
  std::uint64_t node = 0;
  for (std::size_t i = 0; i <= symbols.size(); ++i) {
    std::optional<std::size_t> want =
        i < symbols.size() ? std::optional<std::size_t>(symbols[i]) : std::nullopt;
    detail::NodeScan scan = detail::scan_node(r, code, node, want);
    if (i == symbols.size()) {
      // Whole name consumed: an exact entry ends here with either flag.
      if (scan.terminal_exact) return {LookupState::Hit, false};
      if (scan.terminal_subdomains) return {LookupState::Hit, true};
      break;
    }
    // At a label boundary an include-subdomains entry ending here covers us.
    if (symbols[i] == symbol::kDot && scan.terminal_subdomains) ancestor_hit = true;
    if (!scan.match_pos) break;
    node = *scan.match_pos;
  }
  if (ancestor_hit) return {LookupState::Hit, true};
  return {LookupState::Miss, false};
}

// ---- JSON-lines source format ----------------------------------------------

inline std::vector<PreloadEntry> parse_jsonl(std::istream& in) {
  std::vector<PreloadEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw BuildError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("domain") || !j["domain"].is_string())
      throw BuildError("line " + std::to_string(line_no) + ": missing string field 'domain'");
    PreloadEntry e;
    e.domain = j["domain"].get<std::string>();
    e.include_subdomains = j.value("include_subdomains", false);
    e.suffix_optout = j.value("suffix_optout", false);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string to_jsonl(const std::vector<PreloadEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::json j;
    j["domain"] = e.domain;
    j["include_subdomains"] = e.include_subdomains;
    if (e.suffix_optout) j["suffix_optout"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace hstse::preload
