#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "hstse/util/bytes.hpp"

namespace hstse::dns {

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

/// A domain name as an ordered label sequence, root = empty sequence.
/// Case is preserved as given; comparisons and canonical wire form are
/// case-insensitive per DNS rules.
class Name {
public:
  Name() = default;
  explicit Name(std::vector<std::string> labels) : labels_(std::move(labels)) {}

  static Name root() { return Name{}; }

  // Parses presentation form ("example.site", trailing dot optional,
  // "." = root). Throws WireError on structural violations.
  static Name parse(std::string_view text) {
    Name n;
    if (text.empty()) throw WireError("empty domain name");
    if (text == ".") return n;
    if (text.back() == '.') text.remove_suffix(1);
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t dot = text.find('.', start);
      std::string_view label =
          (dot == std::string_view::npos) ? text.substr(start) : text.substr(start, dot - start);
      if (label.empty() || label.size() > 63)
        throw WireError("domain label must be 1-63 bytes: '" + std::string(text) + "'");
      n.labels_.emplace_back(label);
      if (dot == std::string_view::npos) break;
      start = dot + 1;
    }
    if (n.wire_length() > 255) throw WireError("domain name too long");
    return n;
  }

  static Name from_wire(BytesReader& r) {
    Name n;
    for (;;) {
      std::uint8_t len = r.u8();
      if (len == 0) break;
      if (len > 63) throw WireError("compressed or oversized label in name");
      auto bytes = r.view(len);
      n.labels_.emplace_back(bytes.begin(), bytes.end());
      if (n.wire_length() > 255) throw WireError("wire name too long");
    }
    return n;
  }

  void to_wire(BytesWriter& w, bool lowercase = false) const {
    for (const auto& label : labels_) {
      w.u8(static_cast<std::uint8_t>(label.size()));
      if (lowercase) {
        std::string lc = label;
        std::transform(lc.begin(), lc.end(), lc.begin(), ascii_lower);
        w.raw(lc);
      } else {
        w.raw(label);
      }
    }
    w.u8(0);
  }

  Bytes wire(bool lowercase = false) const {
    BytesWriter w;
    to_wire(w, lowercase);
    return w.take();
  }

  std::size_t wire_length() const {
    std::size_t len = 1;
    for (const auto& l : labels_) len += 1 + l.size();
    return len;
  }

  std::string text() const {
    if (labels_.empty()) return ".";
    std::string out;
    for (const auto& l : labels_) {
      out += l;
      out += '.';
    }
    out.pop_back();
    return out;
  }

  std::size_t label_count() const { return labels_.size(); }
  bool is_root() const { return labels_.empty(); }
  const std::vector<std::string>& labels() const { return labels_; }

  Name parent() const {
    if (is_root()) return *this;
    return Name{std::vector<std::string>(labels_.begin() + 1, labels_.end())};
  }

  Name lowered() const {
    std::vector<std::string> out = labels_;
    for (auto& l : out) std::transform(l.begin(), l.end(), l.begin(), ascii_lower);
    return Name{std::move(out)};
  }

  bool equals(const Name& other) const {
    if (labels_.size() != other.labels_.size()) return false;
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (!label_eq(labels_[i], other.labels_[i])) return false;
    return true;
  }

  // True when `this` is `ancestor` or lies below it.
  bool is_subdomain_of(const Name& ancestor) const {
    if (ancestor.labels_.size() > labels_.size()) return false;
    std::size_t off = labels_.size() - ancestor.labels_.size();
    for (std::size_t i = 0; i < ancestor.labels_.size(); ++i)
      if (!label_eq(labels_[off + i], ancestor.labels_[i])) return false;
    return true;
  }

  // RFC 4034 canonical ordering: compare label sequences right to left,
  // labels bytewise after ASCII lowercasing.
  static int canonical_compare(const Name& a, const Name& b) {
    std::size_t na = a.labels_.size(), nb = b.labels_.size();
    std::size_t common = std::min(na, nb);
    for (std::size_t i = 1; i <= common; ++i) {
      const std::string& la = a.labels_[na - i];
      const std::string& lb = b.labels_[nb - i];
      std::size_t m = std::min(la.size(), lb.size());
      for (std::size_t j = 0; j < m; ++j) {
        auto ca = static_cast<unsigned char>(ascii_lower(la[j]));
        auto cb = static_cast<unsigned char>(ascii_lower(lb[j]));
        if (ca != cb) return ca < cb ? -1 : 1;
      }
      if (la.size() != lb.size()) return la.size() < lb.size() ? -1 : 1;
    }
    if (na != nb) return na < nb ? -1 : 1;
    return 0;
  }

  friend bool operator==(const Name& a, const Name& b) { return a.equals(b); }
  friend bool operator!=(const Name& a, const Name& b) { return !a.equals(b); }
  friend bool operator<(const Name& a, const Name& b) { return canonical_compare(a, b) < 0; }

private:
  static bool label_eq(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
    return true;
  }

  std::vector<std::string> labels_;
};

}  // namespace hstse::dns
