#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "openfloor/domain.hpp"
#include "openfloor/result.hpp"

namespace openfloor::timesync {

// One request/response exchange. t0 and t2 are read from the client clock,
// ts from the server clock.
struct SyncSample {
    TimeMs t0 = 0;
    TimeMs ts = 0;
    TimeMs t2 = 0;
};

struct OffsetEstimate {
    std::int64_t offset_ms = 0;  // server - client
    std::int64_t rtt_ms = 0;
    std::int64_t sample_count = 0;

    bool operator==(const OffsetEstimate&) const = default;
};

struct SampleOffset {
    std::int64_t offset_ms = 0;
    std::int64_t rtt_ms = 0;
};

enum class SyncError { NegativeRtt, EmptySamples };

struct Params {
    std::size_t burst_size = 8;
    std::int64_t rtt_gate_slack_ms = 25;
    // New offset weight in the steady-state average, as num/den.
    std::int64_t smoothing_num = 1;
    std::int64_t smoothing_den = 4;
};

// Symmetric-delay assumption: offset = ts - (t0 + t2) / 2.
Result<SampleOffset, SyncError> sample_offset(TimeMs t0, TimeMs ts, TimeMs t2);

// Connect burst: the minimum-RTT sample of the first `burst_size` samples.
// Every later sample refines the estimate when its RTT passes the gate.
Result<OffsetEstimate, SyncError> estimate(std::span<const SyncSample> samples,
                                           const Params& params = {});

// Server-time countdown seen from the client, floored at zero.
std::int64_t remaining_ms(TimeMs current_end_server, TimeMs local_now, const OffsetEstimate& est);

// Client-side incremental form of estimate(); feeding the same samples in the
// same order gives the same result.
class OffsetEstimator {
public:
    explicit OffsetEstimator(Params params = {}) : params_(params) {}

    Result<Ok, SyncError> add(const SyncSample& sample);
    const std::optional<OffsetEstimate>& current() const { return current_; }
    bool synced() const { return current_ && burst_seen_ >= params_.burst_size; }

private:
    Params params_;
    std::size_t burst_seen_ = 0;
    std::optional<OffsetEstimate> current_;
};

}  // namespace openfloor::timesync
