#include "openfloor/traffic.hpp"

#include <algorithm>
#include <cmath>

namespace openfloor {

DurationMs poll_interval(std::int64_t remaining_ms, double load_factor) {
    const DurationMs base = remaining_ms < kNearEndThresholdMs ? kNearEndPollMs : kBasePollMs;
    // NaN or negative load counts as idle.
    const double factor = std::isfinite(load_factor) ? std::max(1.0, load_factor)
                                                     : (load_factor > 0 ? 1e9 : 1.0);
    const double scaled = std::min(static_cast<double>(base) * factor, 1e12);
    return std::clamp<DurationMs>(std::llround(scaled), kMinPollMs, kMaxPollMs);
}

void TrafficMonitor::evict(TimeMs now) const {
    while (!hits_.empty() && hits_.front() <= now - window_ms_) hits_.pop_front();
}

void TrafficMonitor::record(TimeMs now) {
    std::lock_guard lock(mu_);
    // Out-of-order timestamps from concurrent handlers are clamped.
    if (!hits_.empty() && now < hits_.back()) now = hits_.back();
    hits_.push_back(now);
    evict(now);
}

double TrafficMonitor::observed_rps(TimeMs now) const {
    std::lock_guard lock(mu_);
    evict(now);
    return static_cast<double>(hits_.size()) * 1000.0 / static_cast<double>(window_ms_);
}

double TrafficMonitor::load_factor(TimeMs now) const {
    if (capacity_rps_ <= 0) return 0.0;
    return observed_rps(now) / capacity_rps_;
}

}  // namespace openfloor
