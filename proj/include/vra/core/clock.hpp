#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>

namespace vra {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Injectable UTC wall clock. Every timestamp in a transcript and every
// "{time}" binding comes from one of these.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

// Always returns the same instant.
class FixedClock final : public Clock {
public:
    explicit FixedClock(Timestamp at) : at_(at) {}
    Timestamp now() const override { return at_; }

private:
    Timestamp at_;
};

// Advances by a fixed step on every call. Thread-safe, but the sequence
// seen by concurrent callers interleaves.
class SteppingClock final : public Clock {
public:
    SteppingClock(Timestamp start, std::chrono::milliseconds step)
        : next_(start.time_since_epoch().count()), step_(step.count()) {}
    Timestamp now() const override;

private:
    mutable std::atomic<long long> next_;
    long long step_;
};

// "2025-01-02T03:04:05.678Z"
std::string format_iso8601(Timestamp t);
// Also accepts the form without milliseconds, "2025-01-02T03:04:05Z".
Timestamp parse_iso8601(std::string_view text);

// "2025-01-02 03:04:05 UTC", the form bound to "{time}" in prompts.
std::string format_prompt_time(Timestamp t);

double seconds_between(Timestamp from, Timestamp to);

}  // namespace vra
