#pragma once

// Deterministic discrete-event engine and seeded random streams.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace favq {

/// Virtual time in seconds.
using SimTime = double;

enum class EventKind : std::uint8_t {
    PacketArrival,
    TransmissionComplete,
    TimerExpiry,
    FlowStart,
};

const char* to_string(EventKind kind);

struct EventHandle {
    std::uint64_t id = 0;
    friend bool operator==(EventHandle, EventHandle) = default;
};

/// One processed event, as seen by a trace observer.
struct TraceEntry {
    SimTime time;
    std::uint64_t id;
    EventKind kind;
    std::uint64_t tag;  // kind-specific (flow id, link id, ...)
};

/// Single-threaded event loop. Simultaneous events fire in insertion order.
class Simulator {
public:
    using Action = std::function<void()>;

    /// Schedules `action` at absolute time `at`. Throws std::logic_error when
    /// `at` lies before the current clock or is not finite.
    EventHandle schedule(SimTime at, EventKind kind, Action action, std::uint64_t tag = 0);
    EventHandle schedule_in(SimTime delay, EventKind kind, Action action, std::uint64_t tag = 0) {
        return schedule(now_ + delay, kind, std::move(action), tag);
    }

    /// Cancelling an already fired or cancelled event is a no-op.
    void cancel(EventHandle handle);
    bool is_pending(EventHandle handle) const;

    /// Processes every pending event with fire time <= horizon, then advances
    /// the clock to the horizon.
    SimTime run_until(SimTime horizon);

    SimTime now() const { return now_; }
    std::uint64_t processed() const { return processed_; }
    std::size_t pending() const { return heap_.size() - cancelled_pending_; }
    /// Fire time of the earliest live event, or +inf.
    SimTime next_event_time();

    void set_trace(std::function<void(const TraceEntry&)> trace) { trace_ = std::move(trace); }

private:
    struct Scheduled {
        SimTime at;
        std::uint64_t id;
        EventKind kind;
        std::uint64_t tag;
        Action action;
    };
    struct Later {
        bool operator()(const Scheduled& a, const Scheduled& b) const {
            if (a.at != b.at) return a.at > b.at;
            return a.id > b.id;
        }
    };

    void drop_cancelled_top();

    std::vector<Scheduled> heap_;
    // 0 = pending, 1 = fired, 2 = cancelled
    std::vector<std::uint8_t> status_;
    std::size_t cancelled_pending_ = 0;
    SimTime now_ = 0.0;
    std::uint64_t next_id_ = 0;
    std::uint64_t processed_ = 0;
    std::function<void(const TraceEntry&)> trace_;
};

/// Identifies one stochastic source. Each source draws from its own stream so
/// that changing one knob leaves the other sequences untouched.
enum class StreamId : std::uint64_t {
    FlowArrivals = 1,
    FlowSizes = 2,
    RttAssignment = 3,
    ReverseTraffic = 4,
    PersistentFlows = 5,
};

/// Reproducible random stream keyed by (master seed, stream id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The real-valued transforms are written out here instead of using
/// <random> distributions, which are implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);
    RngStream(std::uint64_t seed, StreamId stream)
        : RngStream(seed, static_cast<std::uint64_t>(stream)) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }
    double exponential(double rate);
    /// Uniform integer on [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace favq
