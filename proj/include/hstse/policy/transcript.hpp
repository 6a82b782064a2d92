#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hstse::policy {

struct TranscriptEvent {
  std::int64_t ms = 0;  // monotonic offset from the start of the run
  std::string kind;
  std::string detail;
};

/// Ordered record of everything a connection attempt did: probes, status
/// checks, indicator lookups, fallbacks, sends. Serializes to one event per
/// line for golden tests.
class Transcript {
public:
  explicit Transcript(std::int64_t start_ms = 0) : start_ms_(start_ms) {}

  void add(std::int64_t now_ms, std::string kind, std::string detail) {
    events_.push_back({now_ms - start_ms_, std::move(kind), std::move(detail)});
  }

  const std::vector<TranscriptEvent>& events() const { return events_; }

  std::size_t count(std::string_view kind) const {
    std::size_t n = 0;
    for (const auto& e : events_)
      if (e.kind == kind) ++n;
    return n;
  }

  std::size_t count(std::string_view kind, std::string_view detail_substring) const {
    std::size_t n = 0;
    for (const auto& e : events_)
      if (e.kind == kind && e.detail.find(detail_substring) != std::string::npos) ++n;
    return n;
  }

  std::string to_text() const {
    std::string out;
    for (const auto& e : events_) {
      out += std::to_string(e.ms);
      out += ' ';
      out += e.kind;
      out += ' ';
      out += e.detail;
      out += '\n';
    }
    return out;
  }

private:
  std::int64_t start_ms_;
  std::vector<TranscriptEvent> events_;
};

}  // namespace hstse::policy
