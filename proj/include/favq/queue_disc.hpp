#pragma once

// Router output-port queue disciplines: DropTail and FavourQueue.
//
// A FavourQueue buffer is split in two regions. Favoured packets occupy
// [0, favoured_boundary) and standard packets occupy [favoured_boundary, len).
// Both regions are FIFO. An arriving packet is favoured when no other packet
// of its flow is resident anywhere in the buffer.

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "favq/sim_core.hpp"

namespace favq {

using FlowId = std::uint32_t;

enum class PacketKind : std::uint8_t { Syn, SynAck, Data, Ack };

const char* to_string(PacketKind kind);

struct Packet {
    FlowId flow_id = 0;
    /// Index within the flow; 0 is the SYN.
    std::int64_t seq = 0;
    /// Cumulative acknowledgement (next expected seq) for SynAck/Ack.
    std::int64_t ack = 0;
    std::int32_t size_bytes = 1500;
    PacketKind kind = PacketKind::Data;
    bool is_retransmission = false;
    bool favoured = false;
    SimTime enqueue_time = 0.0;
    SimTime birth_time = 0.0;

    // Routing state, owned by the network layer.
    std::uint16_t route = 0;
    std::uint8_t hop = 0;
};

enum class QueueVariant : std::uint8_t { DropTail, FavourQueueNoPushOut, FavourQueuePushOut };

/// CLI spelling: droptail | favour | favour-pushout.
std::string_view variant_name(QueueVariant variant);
std::optional<QueueVariant> parse_variant(std::string_view name);

struct QueueState {
    std::deque<Packet> buffer;
    std::size_t capacity = 8;
    std::size_t favoured_boundary = 0;

    std::size_t size() const { return buffer.size(); }
    bool full() const { return buffer.size() >= capacity; }
    bool empty() const { return buffer.empty(); }
};

enum class EnqueueResult : std::uint8_t { Enqueued, Dropped, PushedOut };

struct EnqueueOutcome {
    EnqueueResult result = EnqueueResult::Enqueued;
    /// Dropped: the incoming packet. PushedOut: the evicted standard packet.
    std::optional<Packet> victim;
    /// Final mark of the incoming packet (also set when it was dropped).
    bool favoured = false;
};

EnqueueOutcome enqueue_droptail(QueueState& q, Packet p);
bool is_favoured_arrival(const QueueState& q, FlowId flow);
EnqueueOutcome enqueue_favourqueue(QueueState& q, Packet p, bool push_out_enabled);
/// Removes the head packet. Empty queues yield std::nullopt.
std::optional<Packet> dequeue(QueueState& q);

/// True when the region invariants hold.
bool check_invariants(const QueueState& q);

enum class QueueOp : std::uint8_t { Enqueue, Drop, PushOut, Dequeue };

const char* to_string(QueueOp op);

struct QueueTraceRecord {
    SimTime time;
    QueueOp op;
    const Packet* packet;
    std::size_t queue_length;  // after the operation
};

/// A queue with its discipline and an optional trace hook.
class QueueDisc {
public:
    using TraceHook = std::function<void(const QueueTraceRecord&)>;

    QueueDisc(QueueVariant variant, std::size_t capacity);

    EnqueueOutcome enqueue(Packet p, SimTime now);
    std::optional<Packet> dequeue(SimTime now);

    QueueVariant variant() const { return variant_; }
    const QueueState& state() const { return state_; }
    std::size_t size() const { return state_.size(); }
    bool empty() const { return state_.empty(); }

    void set_trace(TraceHook hook) { trace_ = std::move(hook); }

private:
    QueueVariant variant_;
    QueueState state_;
    TraceHook trace_;
};

/// Line-oriented text sink for queue traces:
/// `<time> <op> <flow> <seq> <favoured> <qlen>`.
QueueDisc::TraceHook make_text_trace(std::ostream& out);

}  // namespace favq
