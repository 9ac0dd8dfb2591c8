#include "favq/dumbbell.hpp"

#include <algorithm>
#include <stdexcept>

namespace favq {

Link::Link(Simulator& sim, std::uint32_t id, double capacity_bps, double delay, QueueDisc queue,
           Deliver deliver)
    : sim_(sim),
      id_(id),
      capacity_(capacity_bps),
      delay_(delay),
      queue_(std::move(queue)),
      deliver_(std::move(deliver)) {}

void Link::receive(Packet p) {
    queue_.enqueue(std::move(p), sim_.now());
    if (!busy_) start_next();
}

void Link::start_next() {
    auto next = queue_.dequeue(sim_.now());
    if (!next) {
        busy_ = false;
        return;
    }
    busy_ = true;
    const double tx = serialization_delay(next->size_bytes);
    sim_.schedule_in(
        tx, EventKind::TransmissionComplete,
        [this, p = std::move(*next)]() mutable {
            sim_.schedule_in(delay_, EventKind::PacketArrival,
                             [this, q = std::move(p)]() mutable { deliver_(std::move(q)); }, id_);
            start_next();
        },
        id_);
}

DumbbellNetwork::DumbbellNetwork(Simulator& sim, const TopologyConfig& topo, QueueVariant variant)
    : sim_(sim) {
    topo.validate();
    auto deliver = [this](Packet p) { forward(std::move(p)); };
    auto make = [&](double cap, double delay, QueueVariant v, std::size_t qcap) {
        const auto id = static_cast<std::uint32_t>(links_.size());
        links_.push_back(std::make_unique<Link>(sim_, id, cap, delay, QueueDisc(v, qcap), deliver));
        return links_.back().get();
    };
    forward_ = make(topo.bottleneck_capacity, topo.bottleneck_delay, variant, topo.queue_capacity);
    reverse_ = make(topo.bottleneck_capacity, topo.bottleneck_delay, QueueVariant::DropTail,
                    topo.queue_capacity);
    for (double edge : topo.edge_delays) {
        const double half = edge / 2.0;
        Link* left_up = make(topo.edge_capacity, half, QueueVariant::DropTail, topo.edge_queue_capacity);
        Link* left_down = make(topo.edge_capacity, half, QueueVariant::DropTail, topo.edge_queue_capacity);
        Link* right_up = make(topo.edge_capacity, half, QueueVariant::DropTail, topo.edge_queue_capacity);
        Link* right_down = make(topo.edge_capacity, half, QueueVariant::DropTail, topo.edge_queue_capacity);
        routes_.push_back({left_up, forward_, right_down});
        routes_.push_back({right_up, reverse_, left_down});
    }
}

void DumbbellNetwork::send(Packet p) {
    p.hop = 0;
    forward(std::move(p));
}

void DumbbellNetwork::forward(Packet p) {
    const auto& route = routes_.at(p.route);
    if (p.hop < route.size()) {
        Link* next = route[p.hop];
        ++p.hop;
        next->receive(std::move(p));
    } else if (endpoint_) {
        endpoint_(std::move(p));
    }
}

namespace {

struct FlowRuntime {
    const FlowSpec* spec = nullptr;
    std::unique_ptr<TcpSender> sender;
    std::unique_ptr<TcpReceiver> receiver;
    FlowRecord record;
};

bool is_data_side(PacketKind k) { return k == PacketKind::Syn || k == PacketKind::Data; }

}  // namespace

RunResult run_dumbbell(const TopologyConfig& topo, const std::vector<FlowSpec>& flows,
                       const RunOptions& options) {
    Simulator sim;
    if (options.event_trace) sim.set_trace(options.event_trace);
    DumbbellNetwork net(sim, topo, options.variant);
    RunResult result;

    FlowId max_id = 0;
    for (const auto& f : flows) max_id = std::max(max_id, f.flow_id);
    std::vector<FlowRuntime> rt(flows.empty() ? 0 : static_cast<std::size_t>(max_id) + 1);
    for (const auto& f : flows) {
        auto& r = rt.at(f.flow_id);
        if (r.spec) throw std::invalid_argument("run_dumbbell: duplicate flow id");
        r.spec = &f;
        r.record.flow_id = f.flow_id;
        r.record.length = f.size + 1;
        r.record.arrival_time = f.arrival_time;
        r.record.rtt_class = f.rtt_class;
        r.record.rho = options.load;
    }

    // Per-flow accounting at the forward bottleneck.
    auto user_trace = options.forward_queue_trace;
    net.forward_bottleneck().queue().set_trace(
        [&rt, &result, user_trace](const QueueTraceRecord& ev) {
            if (user_trace) user_trace(ev);
            const Packet& p = *ev.packet;
            if (!is_data_side(p.kind) || p.flow_id >= rt.size()) return;
            FlowRuntime& f = rt[p.flow_id];
            if (!f.spec) return;
            if (f.spec->direction == Direction::Reverse) {
                ++result.reverse_data_at_forward_queue;
                return;
            }
            FlowRecord& rec = f.record;
            switch (ev.op) {
                case QueueOp::Enqueue:
                case QueueOp::Drop:
                    ++rec.bottleneck_arrivals;
                    if (p.favoured) ++rec.favoured;
                    if (p.kind == PacketKind::Syn) ++rec.syn_arrivals;
                    if (ev.op == QueueOp::Drop) {
                        ++rec.drops;
                        if (p.kind == PacketKind::Syn) ++rec.syn_drops;
                    }
                    break;
                case QueueOp::PushOut:
                    ++rec.drops;
                    ++rec.pushout_drops;
                    if (p.kind == PacketKind::Syn) ++rec.syn_drops;
                    break;
                case QueueOp::Dequeue:
                    rec.queue_delay_sum += ev.time - p.enqueue_time;
                    ++rec.queue_delay_samples;
                    break;
            }
        });

    net.set_endpoint([&rt, &sim](Packet p) {
        FlowRuntime& f = rt.at(p.flow_id);
        if (is_data_side(p.kind)) {
            f.receiver->on_packet(p, sim.now());
        } else if (!f.sender->done()) {
            f.sender->on_ack(p);
        }
    });

    for (const auto& spec : flows) {
        sim.schedule(
            spec.arrival_time, EventKind::FlowStart,
            [&sim, &net, &rt, &options, &spec] {
                FlowRuntime& f = rt[spec.flow_id];
                TcpConfig cfg = options.tcp;
                cfg.initial_window = spec.initial_window;
                const auto data_route = DumbbellNetwork::route_id(spec.rtt_class, spec.direction);
                const auto ack_route = static_cast<std::uint16_t>(data_route ^ 1u);
                f.receiver = std::make_unique<TcpReceiver>(
                    spec.flow_id, cfg, [&net, &sim, ack_route](Packet p) {
                        p.route = ack_route;
                        p.birth_time = sim.now();
                        net.send(std::move(p));
                    });
                f.sender = std::make_unique<TcpSender>(
                    sim, spec.flow_id, spec.persistent ? kUnboundedFlow : spec.size, cfg,
                    [&net, data_route](Packet p) {
                        p.route = data_route;
                        net.send(std::move(p));
                    });
                f.sender->start();
            },
            spec.flow_id);
    }

    sim.run_until(options.duration);
    result.events_processed = sim.processed();

    const double data_bits = 8.0 * options.tcp.data_bytes;
    for (auto& f : rt) {
        if (!f.spec || f.spec->direction != Direction::Forward) continue;
        if (f.spec->persistent) {
            PersistentFlowStats ps;
            ps.flow_id = f.spec->flow_id;
            ps.rtt_class = f.spec->rtt_class;
            ps.active_time = options.duration - f.spec->arrival_time;
            if (f.sender) ps.acked_packets = std::max<std::int64_t>(0, f.sender->snd_una() - 1);
            if (ps.active_time > 0) {
                ps.normalized_throughput = static_cast<double>(ps.acked_packets) * data_bits /
                                           ps.active_time / topo.bottleneck_capacity;
            }
            result.persistent.push_back(ps);
            continue;
        }
        FlowRecord rec = f.record;
        if (f.sender) {
            const auto& c = f.sender->counters();
            rec.rto_count = c.rto_count;
            rec.fast_retransmits = c.fast_retransmits;
            rec.retransmissions = c.retransmissions;
            if (f.sender->done()) {
                rec.completed = true;
                rec.completion_time = f.sender->completion_time();
                rec.latency = rec.completion_time - f.sender->start_time();
                rec.goodput = static_cast<double>(f.spec->size) * data_bits / rec.latency /
                              topo.bottleneck_capacity;
            }
        }
        result.flows.push_back(rec);
    }
    return result;
}

}  // namespace favq
