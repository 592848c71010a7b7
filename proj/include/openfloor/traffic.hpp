#pragma once

#include <deque>
#include <mutex>

#include "openfloor/domain.hpp"

namespace openfloor {

inline constexpr DurationMs kBasePollMs = 1000;
inline constexpr DurationMs kNearEndPollMs = 500;
inline constexpr DurationMs kNearEndThresholdMs = 120000;
inline constexpr DurationMs kMinPollMs = 250;
inline constexpr DurationMs kMaxPollMs = 5000;

// Server-directed poll pacing: about one second normally, faster in the last
// two minutes, stretched under load. Always within [250, 5000] ms.
DurationMs poll_interval(std::int64_t remaining_ms, double load_factor);

// Requests seen in a sliding window, relative to a configured capacity.
class TrafficMonitor {
public:
    explicit TrafficMonitor(double capacity_rps = 500.0, DurationMs window_ms = 10000)
        : capacity_rps_(capacity_rps), window_ms_(window_ms) {}

    void record(TimeMs now);
    double observed_rps(TimeMs now) const;
    double load_factor(TimeMs now) const;
    double capacity_rps() const { return capacity_rps_; }

private:
    void evict(TimeMs now) const;

    double capacity_rps_;
    DurationMs window_ms_;
    mutable std::mutex mu_;
    mutable std::deque<TimeMs> hits_;
};

}  // namespace openfloor
