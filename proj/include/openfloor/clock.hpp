#pragma once

#include <atomic>
#include <chrono>

#include "openfloor/domain.hpp"

namespace openfloor {

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimeMs now() const = 0;
};

class SystemClock final : public Clock {
public:
    TimeMs now() const override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
};

// Virtual time for tests and --sim-clock. Never moves backwards.
class ManualClock final : public Clock {
public:
    explicit ManualClock(TimeMs start = 0) : now_(start) {}

    TimeMs now() const override { return now_.load(std::memory_order_acquire); }
    void set(TimeMs t) {
        TimeMs cur = now_.load();
        while (t > cur && !now_.compare_exchange_weak(cur, t)) {
        }
    }
    void advance(DurationMs d) { now_.fetch_add(d); }

private:
    std::atomic<TimeMs> now_;
};

}  // namespace openfloor
