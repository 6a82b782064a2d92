#pragma once

#include <cstdint>
#include <memory>

namespace hstse::sim {

/// Simulated wall clock in milliseconds since the epoch. All delays in the
/// simulator advance this clock instead of sleeping, so timing assertions
/// are exact and repeatable.
class VirtualClock {
public:
  // 2026-01-01 00:00:00 UTC; scenarios run in a fixed present.
  static constexpr std::int64_t kDefaultBaseEpochSeconds = 1767225600;

  explicit VirtualClock(std::int64_t base_epoch_seconds = kDefaultBaseEpochSeconds)
      : now_ms_(base_epoch_seconds * 1000) {}

  std::int64_t now_ms() const { return now_ms_; }
  std::int64_t now_seconds() const { return now_ms_ / 1000; }

  void advance_ms(std::int64_t delta) { now_ms_ += delta; }

private:
  std::int64_t now_ms_;
};

using ClockPtr = std::shared_ptr<VirtualClock>;

}  // namespace hstse::sim
