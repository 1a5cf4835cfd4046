#include "mera/clock.hpp"

#include <cmath>

namespace mera {

auto SystemClock::monotonic() -> double {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

auto SystemClock::timestamp_ms() -> std::int64_t {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

auto ManualClock::monotonic() -> double {
    std::lock_guard lock{mutex_};
    auto const value = now_;
    now_ += step_;
    return value;
}

auto ManualClock::timestamp_ms() -> std::int64_t {
    std::lock_guard lock{mutex_};
    auto const value = now_ms_;
    now_ms_ += 1;
    return value;
}

void ManualClock::advance(double seconds) {
    std::lock_guard lock{mutex_};
    now_ += seconds;
    now_ms_ += static_cast<std::int64_t>(std::llround(seconds * 1000.0));
}

}  // namespace mera
