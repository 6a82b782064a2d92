#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "hstse/util/bytes.hpp"

namespace hstse::preload {

/// MSB-first bit stream writer.
class BitWriter {
public:
  void bit(bool b) {
    if (bit_count_ % 8 == 0) bytes_.push_back(0);
    if (b) bytes_.back() |= static_cast<std::uint8_t>(0x80 >> (bit_count_ % 8));
    ++bit_count_;
  }

  void bits(std::uint64_t value, int count) {
    for (int i = count - 1; i >= 0; --i) bit((value >> i) & 1);
  }

  // Elias gamma; encodes v >= 1.
  void gamma(std::uint64_t v) {
    if (v == 0) throw std::invalid_argument("gamma cannot encode 0");
    int width = 0;
    for (std::uint64_t t = v; t > 1; t >>= 1) ++width;
    for (int i = 0; i < width; ++i) bit(false);
    bits(v, width + 1);
  }

  void append(const BitWriter& other) {
    for (std::uint64_t i = 0; i < other.bit_count_; ++i) bit(other.bit_at(i));
  }

  bool bit_at(std::uint64_t index) const {
    return bytes_[index / 8] & (0x80 >> (index % 8));
  }

  std::uint64_t bit_count() const { return bit_count_; }
  const Bytes& bytes() const { return bytes_; }

private:
  Bytes bytes_;
  std::uint64_t bit_count_ = 0;
};

class BitReader {
public:
  BitReader(std::span<const std::uint8_t> data, std::uint64_t bit_count)
      : data_(data), bit_count_(bit_count) {}

  bool bit() {
    if (pos_ >= bit_count_) throw WireError("bit stream exhausted");
    bool b = data_[pos_ / 8] & (0x80 >> (pos_ % 8));
    ++pos_;
    return b;
  }

  std::uint64_t gamma() {
    int zeros = 0;
    while (!bit()) {
      if (++zeros > 63) throw WireError("gamma run too long");
    }
    std::uint64_t v = 1;
    for (int i = 0; i < zeros; ++i) v = (v << 1) | (bit() ? 1 : 0);
    return v;
  }

  void seek(std::uint64_t bit_pos) {
    if (bit_pos > bit_count_) throw WireError("seek past end of bit stream");
    pos_ = bit_pos;
  }

  std::uint64_t position() const { return pos_; }
  std::uint64_t bit_count() const { return bit_count_; }

private:
  std::span<const std::uint8_t> data_;
  std::uint64_t bit_count_;
  std::uint64_t pos_ = 0;
};

/// Canonical Huffman code over a small symbol alphabet. The serialized
/// table is just (symbol, code length) pairs; codes are reassigned
/// canonically on load so encoder and decoder always agree.
class HuffmanCode {
public:
  static HuffmanCode from_frequencies(const std::vector<std::uint64_t>& freq) {
    std::vector<std::uint8_t> lengths(freq.size(), 0);
    using Node = std::pair<std::uint64_t, std::vector<std::size_t>>;  // weight, symbols
    auto cmp = [](const Node& a, const Node& b) { return a.first > b.first; };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
    for (std::size_t s = 0; s < freq.size(); ++s)
      if (freq[s] > 0) heap.push({freq[s], {s}});
    if (heap.empty()) return HuffmanCode(std::move(lengths));
    if (heap.size() == 1) {
      lengths[heap.top().second.front()] = 1;
      return HuffmanCode(std::move(lengths));
    }
    while (heap.size() > 1) {
      Node a = heap.top();
      heap.pop();
      Node b = heap.top();
      heap.pop();
      for (auto s : a.second) ++lengths[s];
      for (auto s : b.second) ++lengths[s];
      a.second.insert(a.second.end(), b.second.begin(), b.second.end());
      heap.push({a.first + b.first, std::move(a.second)});
    }
    return HuffmanCode(std::move(lengths));
  }

  static HuffmanCode from_lengths(std::vector<std::uint8_t> lengths) {
    return HuffmanCode(std::move(lengths));
  }

  bool has_symbol(std::size_t symbol) const {
    return symbol < lengths_.size() && lengths_[symbol] > 0;
  }

  void encode(std::size_t symbol, BitWriter& out) const {
    if (!has_symbol(symbol)) throw std::invalid_argument("symbol has no Huffman code");
    out.bits(codes_[symbol], lengths_[symbol]);
  }

  std::size_t decode(BitReader& in) const {
    std::uint64_t value = 0;
    for (int length = 1; length <= max_length_; ++length) {
      value = (value << 1) | (in.bit() ? 1 : 0);
      std::uint64_t offset = value - first_code_[length];
      if (value >= first_code_[length] && offset < count_[length])
        return sorted_symbols_[first_index_[length] + offset];
    }
    throw WireError("invalid Huffman code in stream");
  }

  const std::vector<std::uint8_t>& lengths() const { return lengths_; }

  // Serialized form: one (u8 symbol, u8 length) pair per coded symbol.
  Bytes table_bytes() const {
    Bytes out;
    for (std::size_t s = 0; s < lengths_.size(); ++s)
      if (lengths_[s] > 0) {
        out.push_back(static_cast<std::uint8_t>(s));
        out.push_back(lengths_[s]);
      }
    return out;
  }

  static HuffmanCode from_table_bytes(std::span<const std::uint8_t> table,
                                      std::size_t alphabet_size) {
    if (table.size() % 2 != 0) throw WireError("Huffman table length must be even");
    std::vector<std::uint8_t> lengths(alphabet_size, 0);
    for (std::size_t i = 0; i < table.size(); i += 2) {
      std::uint8_t symbol = table[i];
      if (symbol >= alphabet_size) throw WireError("Huffman table symbol out of range");
      if (lengths[symbol] != 0) throw WireError("duplicate symbol in Huffman table");
      if (table[i + 1] == 0) throw WireError("zero code length in Huffman table");
      lengths[symbol] = table[i + 1];
    }
    return HuffmanCode(std::move(lengths));
  }

private:
  explicit HuffmanCode(std::vector<std::uint8_t> lengths) : lengths_(std::move(lengths)) {
    assign_canonical();
  }

  void assign_canonical() {
    codes_.assign(lengths_.size(), 0);
    sorted_symbols_.clear();
    for (std::size_t s = 0; s < lengths_.size(); ++s)
      if (lengths_[s] > 0) sorted_symbols_.push_back(s);
    std::sort(sorted_symbols_.begin(), sorted_symbols_.end(), [&](std::size_t a, std::size_t b) {
      if (lengths_[a] != lengths_[b]) return lengths_[a] < lengths_[b];
      return a < b;
    });
    for (auto s : sorted_symbols_) max_length_ = std::max<int>(max_length_, lengths_[s]);
    first_code_.assign(max_length_ + 1, 0);
    first_index_.assign(max_length_ + 1, 0);
    count_.assign(max_length_ + 1, 0);
    std::uint64_t code = 0;
    int prev_len = 0;
    for (std::size_t i = 0; i < sorted_symbols_.size(); ++i) {
      std::size_t s = sorted_symbols_[i];
      code <<= (lengths_[s] - prev_len);
      if (count_[lengths_[s]] == 0) {
        first_code_[lengths_[s]] = code;
        first_index_[lengths_[s]] = i;
      }
      ++count_[lengths_[s]];
      codes_[s] = code;
      ++code;
      prev_len = lengths_[s];
    }
  }

  std::vector<std::uint8_t> lengths_;
  std::vector<std::uint64_t> codes_;
  std::vector<std::size_t> sorted_symbols_;
  std::vector<std::uint64_t> first_code_;
  std::vector<std::size_t> first_index_;
  std::vector<std::uint64_t> count_;
  int max_length_ = 0;
};

}  // namespace hstse::preload
