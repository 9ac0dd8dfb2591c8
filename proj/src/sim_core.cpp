#include "favq/sim_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace favq {

namespace {
constexpr std::uint8_t kPending = 0;
constexpr std::uint8_t kFired = 1;
constexpr std::uint8_t kCancelled = 2;
}  // namespace

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::PacketArrival: return "arrival";
        case EventKind::TransmissionComplete: return "tx-complete";
        case EventKind::TimerExpiry: return "timer";
        case EventKind::FlowStart: return "flow-start";
    }
    return "?";
}

EventHandle Simulator::schedule(SimTime at, EventKind kind, Action action, std::uint64_t tag) {
    if (!std::isfinite(at)) {
        throw std::logic_error("Simulator::schedule: non-finite fire time");
    }
    if (at < now_) {
        throw std::logic_error("Simulator::schedule: fire time " + std::to_string(at) +
                               " precedes clock " + std::to_string(now_));
    }
    const std::uint64_t id = next_id_++;
    status_.push_back(kPending);
    heap_.push_back(Scheduled{at, id, kind, tag, std::move(action)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    return EventHandle{id};
}

void Simulator::cancel(EventHandle handle) {
    if (handle.id >= status_.size() || status_[handle.id] != kPending) return;
    status_[handle.id] = kCancelled;
    ++cancelled_pending_;
}

bool Simulator::is_pending(EventHandle handle) const {
    return handle.id < status_.size() && status_[handle.id] == kPending;
}

void Simulator::drop_cancelled_top() {
    while (!heap_.empty() && status_[heap_.front().id] == kCancelled) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        heap_.pop_back();
        --cancelled_pending_;
    }
}

SimTime Simulator::next_event_time() {
    drop_cancelled_top();
    return heap_.empty() ? std::numeric_limits<SimTime>::infinity() : heap_.front().at;
}

SimTime Simulator::run_until(SimTime horizon) {
    for (;;) {
        drop_cancelled_top();
        if (heap_.empty() || heap_.front().at > horizon) break;
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Scheduled ev = std::move(heap_.back());
        heap_.pop_back();
        status_[ev.id] = kFired;
        now_ = ev.at;
        ++processed_;
        if (trace_) trace_(TraceEntry{ev.at, ev.id, ev.kind, ev.tag});
        ev.action();
    }
    if (horizon > now_ && std::isfinite(horizon)) now_ = horizon;
    return now_;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream))) {}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::exponential(double rate) {
    return -std::log(uniform_pos()) / rate;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased for every n.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

}  // namespace favq
