#pragma once

// Dumbbell network: per-RTT-class access links on both sides of a single
// bottleneck. The forward bottleneck (left to right, data path) runs the
// queue discipline under test; the reverse bottleneck is always DropTail.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "favq/metrics.hpp"
#include "favq/queue_disc.hpp"
#include "favq/sim_core.hpp"
#include "favq/transport.hpp"
#include "favq/workload.hpp"

namespace favq {

/// Output port: a queue feeding a serialising, delaying link.
class Link {
public:
    using Deliver = std::function<void(Packet)>;

    Link(Simulator& sim, std::uint32_t id, double capacity_bps, double delay, QueueDisc queue,
         Deliver deliver);
    Link(const Link&) = delete;
    Link& operator=(const Link&) = delete;

    /// A packet reaches this port.
    void receive(Packet p);

    double serialization_delay(std::int32_t bytes) const { return bytes * 8.0 / capacity_; }
    QueueDisc& queue() { return queue_; }
    const QueueDisc& queue() const { return queue_; }
    bool busy() const { return busy_; }

private:
    void start_next();

    Simulator& sim_;
    std::uint32_t id_;
    double capacity_;
    double delay_;
    QueueDisc queue_;
    Deliver deliver_;
    bool busy_ = false;
};

struct PersistentFlowStats {
    FlowId flow_id = 0;
    std::uint32_t rtt_class = 0;
    /// Segments acknowledged between its start and the end of the run.
    std::int64_t acked_packets = 0;
    double active_time = 0.0;
    /// Delivered data bits per second over bottleneck capacity.
    double normalized_throughput = 0.0;
};

struct RunResult {
    /// Every forward, finite flow, in flow id order (no warm-up filtering).
    std::vector<FlowRecord> flows;
    std::vector<PersistentFlowStats> persistent;
    std::uint64_t events_processed = 0;
    /// Reverse-direction data segments seen at the forward bottleneck (must be 0).
    std::uint64_t reverse_data_at_forward_queue = 0;
};

struct RunOptions {
    QueueVariant variant = QueueVariant::DropTail;
    TcpConfig tcp;
    double duration = 500.0;
    double load = 0.0;  // copied into every record
    /// Optional hooks for tracing.
    QueueDisc::TraceHook forward_queue_trace;
    std::function<void(const TraceEntry&)> event_trace;
};

/// The simulated dumbbell and its endpoints.
class DumbbellNetwork {
public:
    DumbbellNetwork(Simulator& sim, const TopologyConfig& topo, QueueVariant variant);
    DumbbellNetwork(const DumbbellNetwork&) = delete;
    DumbbellNetwork& operator=(const DumbbellNetwork&) = delete;

    /// Route 2k carries left-to-right traffic of class k, route 2k+1 the
    /// opposite direction.
    static std::uint16_t route_id(std::uint32_t rtt_class, Direction dir) {
        return static_cast<std::uint16_t>(2 * rtt_class + (dir == Direction::Forward ? 0 : 1));
    }

    /// Injects a packet at the head of its route.
    void send(Packet p);

    /// Where packets finishing their route go.
    void set_endpoint(std::function<void(Packet)> endpoint) { endpoint_ = std::move(endpoint); }

    Link& forward_bottleneck() { return *forward_; }
    Link& reverse_bottleneck() { return *reverse_; }

private:
    void forward(Packet p);

    Simulator& sim_;
    std::vector<std::unique_ptr<Link>> links_;
    std::vector<std::vector<Link*>> routes_;
    Link* forward_ = nullptr;
    Link* reverse_ = nullptr;
    std::function<void(Packet)> endpoint_;
};

/// Runs one simulation of `flows` over the dumbbell until options.duration.
RunResult run_dumbbell(const TopologyConfig& topo, const std::vector<FlowSpec>& flows,
                       const RunOptions& options);

}  // namespace favq
