#include "openfloor/timesync.hpp"

#include <algorithm>

namespace openfloor::timesync {

Result<SampleOffset, SyncError> sample_offset(TimeMs t0, TimeMs ts, TimeMs t2) {
    if (t2 < t0) return SyncError::NegativeRtt;
    // Integer division truncates toward zero.
    return SampleOffset{ts - (t0 + t2) / 2, t2 - t0};
}

Result<Ok, SyncError> OffsetEstimator::add(const SyncSample& s) {
    auto so = sample_offset(s.t0, s.ts, s.t2);
    if (!so) return so.error();
    const auto [offset, rtt] = so.value();

    if (!current_) {
        current_ = OffsetEstimate{offset, rtt, 1};
        ++burst_seen_;
        return Ok{};
    }
    auto& cur = *current_;
    cur.sample_count += 1;

    if (burst_seen_ < params_.burst_size) {
        // Phase 1. Ties on RTT go to the smaller offset so the result does not
        // depend on arrival order.
        ++burst_seen_;
        if (rtt < cur.rtt_ms || (rtt == cur.rtt_ms && offset < cur.offset_ms)) {
            cur.offset_ms = offset;
            cur.rtt_ms = rtt;
        }
        return Ok{};
    }

    // Phase 2.
    if (rtt <= cur.rtt_ms + params_.rtt_gate_slack_ms) {
        const auto keep = params_.smoothing_den - params_.smoothing_num;
        cur.offset_ms = (keep * cur.offset_ms + params_.smoothing_num * offset) / params_.smoothing_den;
        cur.rtt_ms = rtt;
    }
    return Ok{};
}

Result<OffsetEstimate, SyncError> estimate(std::span<const SyncSample> samples, const Params& params) {
    if (samples.empty()) return SyncError::EmptySamples;
    OffsetEstimator est(params);
    for (const auto& s : samples) {
        if (auto r = est.add(s); !r) return r.error();
    }
    return *est.current();
}

std::int64_t remaining_ms(TimeMs current_end_server, TimeMs local_now, const OffsetEstimate& est) {
    return std::max<std::int64_t>(0, current_end_server - (local_now + est.offset_ms));
}

}  // namespace openfloor::timesync
