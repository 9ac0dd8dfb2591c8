#include "favq/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace favq {

double TopologyConfig::mean_propagation_rtt() const {
    if (edge_delays.empty()) return 2.0 * bottleneck_delay;
    const double sum = std::accumulate(edge_delays.begin(), edge_delays.end(), 0.0);
    return 2.0 * (bottleneck_delay + sum / static_cast<double>(edge_delays.size()));
}

void TopologyConfig::validate() const {
    if (!(bottleneck_capacity > 0) || !(edge_capacity > 0)) {
        throw std::invalid_argument("topology: capacities must be positive");
    }
    if (queue_capacity == 0 || edge_queue_capacity == 0) {
        throw std::invalid_argument("topology: queue capacities must be positive");
    }
    if (!(bottleneck_delay > 0)) throw std::invalid_argument("topology: bottleneck_delay must be positive");
    if (edge_delays.empty()) throw std::invalid_argument("topology: edge_delays is empty");
    for (double d : edge_delays) {
        if (!(d > 0)) throw std::invalid_argument("topology: edge delays must be positive");
    }
}

void TrafficConfig::validate() const {
    if (!(load >= 0.0 && load < 1.0)) throw std::invalid_argument("traffic: load must be in [0,1)");
    if (!(reverse_load >= 0.0 && reverse_load < 1.0)) {
        throw std::invalid_argument("traffic: reverse_load must be in [0,1)");
    }
    if (!(mean_flow_size >= 1.0)) throw std::invalid_argument("traffic: mean_flow_size must be >= 1");
    if (size_distribution == SizeDistribution::Pareto && !(pareto_shape > 1.0)) {
        throw std::invalid_argument("traffic: pareto_shape must exceed 1");
    }
    if (max_flow_size < 1) throw std::invalid_argument("traffic: max_flow_size must be >= 1");
    if (!(duration > 0.0)) throw std::invalid_argument("traffic: duration must be positive");
    if (!(warmup >= 0.0)) throw std::invalid_argument("traffic: warmup must be >= 0");
    if (packet_bytes <= 0) throw std::invalid_argument("traffic: packet_bytes must be positive");
    if (initial_window < 1) throw std::invalid_argument("traffic: initial_window must be >= 1");
}

double arrival_rate(double rho, double capacity_bps, double mean_size_packets,
                    std::int32_t packet_bytes) {
    return rho * capacity_bps / (mean_size_packets * 8.0 * packet_bytes);
}

double pareto_scale(double shape, double mean) {
    if (!(shape > 1.0)) throw std::invalid_argument("pareto_scale: shape must exceed 1");
    return mean * (shape - 1.0) / shape;
}

double discretised_pareto_mean(double shape, double scale, std::int64_t max_size, bool shifted) {
    // E[min(ceil X, T)] = sum_{k=0}^{T-1} P(X > k)
    double sum = 0.0;
    for (std::int64_t k = 0; k < max_size; ++k) {
        const double kk = static_cast<double>(k);
        if (shifted) {
            sum += std::pow(scale / (scale + kk), shape);
        } else {
            sum += kk < scale ? 1.0 : std::pow(scale / kk, shape);
        }
    }
    return sum;
}

double calibrated_pareto_scale(double shape, double mean, std::int64_t max_size, bool shifted) {
    if (mean <= 1.0) return 1e-9;
    if (mean >= static_cast<double>(max_size)) {
        throw std::invalid_argument("calibrated_pareto_scale: mean exceeds the size cap");
    }
    double lo = 1e-9;
    double hi = static_cast<double>(max_size);
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (discretised_pareto_mean(shape, mid, max_size, shifted) < mean) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

FlowSizeSampler::FlowSizeSampler(const TrafficConfig& cfg)
    : dist_(cfg.size_distribution),
      shifted_(cfg.pareto_shifted),
      shape_(cfg.pareto_shape),
      scale_(0.0),
      cap_(cfg.max_flow_size) {
    if (dist_ == SizeDistribution::Pareto) {
        scale_ = calibrated_pareto_scale(shape_, cfg.mean_flow_size, cap_, shifted_);
    } else {
        const double p = 1.0 / cfg.mean_flow_size;
        geometric_log_q_ = p >= 1.0 ? 0.0 : std::log1p(-p);
    }
}

std::int64_t FlowSizeSampler::operator()(RngStream& rng) const {
    const double u = rng.uniform_pos();
    double x;
    if (dist_ == SizeDistribution::Pareto) {
        const double tail = std::pow(u, -1.0 / shape_);
        x = std::ceil(scale_ * (shifted_ ? tail - 1.0 : tail));
    } else {
        x = geometric_log_q_ == 0.0 ? 1.0 : 1.0 + std::floor(std::log(u) / geometric_log_q_);
    }
    if (!(x < static_cast<double>(cap_))) return cap_;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(x));
}

std::int64_t sample_flow_size(RngStream& rng, const TrafficConfig& cfg) {
    return FlowSizeSampler(cfg)(rng);
}

std::vector<FlowSpec> generate_arrivals(double rate, SimTime start, SimTime end,
                                        const FlowSizeSampler& sizes, std::size_t rtt_classes,
                                        Direction direction, int initial_window,
                                        RngStream& arrivals, RngStream& size_rng,
                                        RngStream& rtt_rng, FlowId first_id) {
    std::vector<FlowSpec> out;
    if (!(rate > 0.0)) return out;
    FlowId id = first_id;
    for (SimTime t = start + arrivals.exponential(rate); t < end; t += arrivals.exponential(rate)) {
        FlowSpec f;
        f.flow_id = id++;
        f.arrival_time = t;
        f.size = sizes(size_rng);
        f.rtt_class = static_cast<std::uint32_t>(rtt_rng.uniform_index(rtt_classes));
        f.direction = direction;
        f.initial_window = initial_window;
        out.push_back(f);
    }
    return out;
}

std::vector<FlowSpec> generate_workload(const TrafficConfig& cfg, const TopologyConfig& topo,
                                        std::uint64_t seed) {
    cfg.validate();
    topo.validate();
    const FlowSizeSampler sizes(cfg);
    const std::size_t classes = topo.edge_delays.size();

    RngStream arrivals(seed, StreamId::FlowArrivals);
    RngStream size_rng(seed, StreamId::FlowSizes);
    RngStream rtt_rng(seed, StreamId::RttAssignment);
    const double fwd_rate =
        arrival_rate(cfg.load, topo.bottleneck_capacity, cfg.mean_flow_size, cfg.packet_bytes);
    auto flows = generate_arrivals(fwd_rate, 0.0, cfg.duration, sizes, classes,
                                   Direction::Forward, cfg.initial_window, arrivals, size_rng,
                                   rtt_rng, 0);

    // Reverse flows share one stream so the forward draws do not depend on them.
    RngStream reverse(seed, StreamId::ReverseTraffic);
    const double rev_rate = arrival_rate(cfg.reverse_load, topo.bottleneck_capacity,
                                         cfg.mean_flow_size, cfg.packet_bytes);
    auto rev = generate_arrivals(rev_rate, 0.0, cfg.duration, sizes, classes, Direction::Reverse,
                                 cfg.initial_window, reverse, reverse, reverse,
                                 static_cast<FlowId>(flows.size()));
    flows.insert(flows.end(), rev.begin(), rev.end());
    return flows;
}

void add_persistent_flows(std::vector<FlowSpec>& flows, std::size_t count, SimTime start,
                          const TopologyConfig& topo, int initial_window, std::uint64_t seed) {
    RngStream rng(seed, StreamId::PersistentFlows);
    FlowId next = 0;
    for (const auto& f : flows) next = std::max(next, f.flow_id + 1);
    for (std::size_t i = 0; i < count; ++i) {
        FlowSpec f;
        f.flow_id = next++;
        // Small jitter avoids perfectly synchronised starts.
        f.arrival_time = start + 0.001 * rng.uniform();
        f.size = 0;
        f.rtt_class = static_cast<std::uint32_t>(rng.uniform_index(topo.edge_delays.size()));
        f.direction = Direction::Forward;
        f.initial_window = initial_window;
        f.persistent = true;
        flows.push_back(f);
    }
}

}  // namespace favq
