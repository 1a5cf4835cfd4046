#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>

namespace mera {

/// Time source for measured durations and record timestamps.
///
/// Production code uses SystemClock. Replay tests inject a ManualClock so
/// that durations (and therefore latency-penalized rewards) are identical
/// across runs.
class Clock {
  public:
    virtual ~Clock() = default;
    /// Monotonic seconds, only meaningful as differences.
    [[nodiscard]] virtual auto monotonic() -> double = 0;
    /// Wall-clock timestamp in milliseconds since the Unix epoch.
    [[nodiscard]] virtual auto timestamp_ms() -> std::int64_t = 0;
};

class SystemClock final : public Clock {
  public:
    auto monotonic() -> double override;
    auto timestamp_ms() -> std::int64_t override;
};

/// Deterministic clock: every reading advances time by a fixed step.
class ManualClock final : public Clock {
  public:
    explicit ManualClock(double step_seconds = 0.0,
                         std::int64_t start_ms = 1'700'000'000'000)
        : step_{step_seconds}, now_ms_{start_ms} {}

    auto monotonic() -> double override;
    auto timestamp_ms() -> std::int64_t override;
    void advance(double seconds);

  private:
    std::mutex mutex_;
    double step_;
    double now_{0.0};
    std::int64_t now_ms_;
};

}  // namespace mera
