#include "favq/queue_disc.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>

namespace favq {

const char* to_string(PacketKind kind) {
    switch (kind) {
        case PacketKind::Syn: return "syn";
        case PacketKind::SynAck: return "synack";
        case PacketKind::Data: return "data";
        case PacketKind::Ack: return "ack";
    }
    return "?";
}

const char* to_string(QueueOp op) {
    switch (op) {
        case QueueOp::Enqueue: return "enq";
        case QueueOp::Drop: return "drop";
        case QueueOp::PushOut: return "pushout";
        case QueueOp::Dequeue: return "deq";
    }
    return "?";
}

std::string_view variant_name(QueueVariant variant) {
    switch (variant) {
        case QueueVariant::DropTail: return "droptail";
        case QueueVariant::FavourQueueNoPushOut: return "favour";
        case QueueVariant::FavourQueuePushOut: return "favour-pushout";
    }
    return "?";
}

std::optional<QueueVariant> parse_variant(std::string_view name) {
    for (auto v : {QueueVariant::DropTail, QueueVariant::FavourQueueNoPushOut,
                   QueueVariant::FavourQueuePushOut}) {
        if (variant_name(v) == name) return v;
    }
    return std::nullopt;
}

EnqueueOutcome enqueue_droptail(QueueState& q, Packet p) {
    p.favoured = false;
    if (q.full()) {
        return EnqueueOutcome{EnqueueResult::Dropped, std::move(p), false};
    }
    q.buffer.push_back(std::move(p));
    return EnqueueOutcome{EnqueueResult::Enqueued, std::nullopt, false};
}

bool is_favoured_arrival(const QueueState& q, FlowId flow) {
    return std::none_of(q.buffer.begin(), q.buffer.end(),
                        [flow](const Packet& r) { return r.flow_id == flow; });
}

EnqueueOutcome enqueue_favourqueue(QueueState& q, Packet p, bool push_out_enabled) {
    if (!is_favoured_arrival(q, p.flow_id)) {
        p.favoured = false;
        if (q.full()) {
            return EnqueueOutcome{EnqueueResult::Dropped, std::move(p), false};
        }
        q.buffer.push_back(std::move(p));
        return EnqueueOutcome{EnqueueResult::Enqueued, std::nullopt, false};
    }

    p.favoured = true;
    EnqueueOutcome outcome{EnqueueResult::Enqueued, std::nullopt, true};
    if (q.full()) {
        const bool only_favoured = q.favoured_boundary >= q.buffer.size();
        if (only_favoured || !push_out_enabled) {
            outcome.result = EnqueueResult::Dropped;
            outcome.victim = std::move(p);
            return outcome;
        }
        // The last standard packet sits at the tail.
        outcome.result = EnqueueResult::PushedOut;
        outcome.victim = std::move(q.buffer.back());
        q.buffer.pop_back();
    }
    q.buffer.insert(q.buffer.begin() + static_cast<std::ptrdiff_t>(q.favoured_boundary),
                    std::move(p));
    ++q.favoured_boundary;
    return outcome;
}

std::optional<Packet> dequeue(QueueState& q) {
    if (q.buffer.empty()) return std::nullopt;
    Packet head = std::move(q.buffer.front());
    q.buffer.pop_front();
    if (head.favoured && q.favoured_boundary > 0) --q.favoured_boundary;
    return head;
}

bool check_invariants(const QueueState& q) {
    if (q.buffer.size() > q.capacity) return false;
    if (q.favoured_boundary > q.buffer.size()) return false;
    for (std::size_t i = 0; i < q.buffer.size(); ++i) {
        if (q.buffer[i].favoured != (i < q.favoured_boundary)) return false;
    }
    return true;
}

QueueDisc::QueueDisc(QueueVariant variant, std::size_t capacity) : variant_(variant) {
    state_.capacity = capacity;
}

EnqueueOutcome QueueDisc::enqueue(Packet p, SimTime now) {
    p.enqueue_time = now;
    EnqueueOutcome out;
    switch (variant_) {
        case QueueVariant::DropTail: out = enqueue_droptail(state_, std::move(p)); break;
        case QueueVariant::FavourQueueNoPushOut:
            out = enqueue_favourqueue(state_, std::move(p), false);
            break;
        case QueueVariant::FavourQueuePushOut:
            out = enqueue_favourqueue(state_, std::move(p), true);
            break;
    }
    if (trace_) {
        const std::size_t len = state_.size();
        switch (out.result) {
            case EnqueueResult::Enqueued: {
                // The newly inserted packet is at the boundary-1 or the tail.
                const Packet& in = out.favoured ? state_.buffer[state_.favoured_boundary - 1]
                                                : state_.buffer.back();
                trace_(QueueTraceRecord{now, QueueOp::Enqueue, &in, len});
                break;
            }
            case EnqueueResult::Dropped:
                trace_(QueueTraceRecord{now, QueueOp::Drop, &*out.victim, len});
                break;
            case EnqueueResult::PushedOut: {
                trace_(QueueTraceRecord{now, QueueOp::PushOut, &*out.victim, len});
                const Packet& in = state_.buffer[state_.favoured_boundary - 1];
                trace_(QueueTraceRecord{now, QueueOp::Enqueue, &in, len});
                break;
            }
        }
    }
    return out;
}

std::optional<Packet> QueueDisc::dequeue(SimTime now) {
    auto p = favq::dequeue(state_);
    if (p && trace_) trace_(QueueTraceRecord{now, QueueOp::Dequeue, &*p, state_.size()});
    return p;
}

QueueDisc::TraceHook make_text_trace(std::ostream& out) {
    return [&out](const QueueTraceRecord& r) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof buf, r.time);
        out.write(buf, res.ptr - buf);
        out << ' ' << to_string(r.op) << ' ' << r.packet->flow_id << ' ' << r.packet->seq << ' '
            << (r.packet->favoured ? 1 : 0) << ' ' << r.queue_length << '\n';
    };
}

}  // namespace favq
