#pragma once

// Dumbbell topology parameters and stochastic traffic generation.

#include <cstdint>
#include <vector>

#include "favq/queue_disc.hpp"
#include "favq/sim_core.hpp"

namespace favq {

struct TopologyConfig {
    double bottleneck_capacity = 1e7;  // bit/s
    double edge_capacity = 1e8;        // bit/s
    std::size_t queue_capacity = 8;    // packets, both bottleneck directions
    std::size_t edge_queue_capacity = 1000;
    double bottleneck_delay = 0.010;   // one-way propagation, s
    /// One-way access delay per RTT class, split evenly between both edges.
    std::vector<double> edge_delays = {0.004, 0.012, 0.020, 0.028, 0.036,
                                       0.044, 0.052, 0.060, 0.068, 0.076};

    /// Two-way propagation delay of a class.
    double propagation_rtt(std::size_t rtt_class) const {
        return 2.0 * (bottleneck_delay + edge_delays.at(rtt_class));
    }
    double mean_propagation_rtt() const;
    /// Throws std::invalid_argument on non-positive capacities or delays.
    void validate() const;
};

enum class SizeDistribution : std::uint8_t { Pareto, Geometric };

struct TrafficConfig {
    double load = 0.5;           // rho on the forward bottleneck
    double mean_flow_size = 30;  // data packets
    SizeDistribution size_distribution = SizeDistribution::Pareto;
    double pareto_shape = 1.3;
    /// Lomax form starting at 0, so sizes go down to one packet. The
    /// classic form never draws below its scale (about 7 packets here).
    bool pareto_shifted = true;
    std::int64_t max_flow_size = 10000;
    double reverse_load = 0.10;
    double duration = 500.0;
    double warmup = 40.0;
    std::int32_t packet_bytes = 1500;
    int initial_window = 2;

    void validate() const;
};

enum class Direction : std::uint8_t { Forward, Reverse };

struct FlowSpec {
    FlowId flow_id = 0;
    SimTime arrival_time = 0.0;
    std::int64_t size = 1;  // data packets; the SYN is extra
    std::uint32_t rtt_class = 0;
    Direction direction = Direction::Forward;
    int initial_window = 2;
    bool persistent = false;
};

/// Poisson arrival rate giving offered load `rho`: rho * C / (E[sigma] * bits).
double arrival_rate(double rho, double capacity_bps, double mean_size_packets,
                    std::int32_t packet_bytes);

/// Scale of a continuous Pareto with the given shape and mean.
double pareto_scale(double shape, double mean);

/// Mean of ceil(X) capped at `max_size`. X ~ Pareto(shape, scale) with
/// support [scale, inf), or with `shifted` the Lomax form
/// P(X > x) = (scale / (scale + x))^shape on [0, inf).
double discretised_pareto_mean(double shape, double scale, std::int64_t max_size,
                               bool shifted = false);

/// Scale for which the discretised, capped distribution has exactly mean
/// `mean`. This is the scale the size sampler uses, so offered load matches rho.
double calibrated_pareto_scale(double shape, double mean, std::int64_t max_size,
                               bool shifted = false);

/// Draws flow sizes (data packets, >= 1). Pareto sizes are ceil(X) capped at
/// max_flow_size; geometric sizes have the configured mean.
class FlowSizeSampler {
public:
    explicit FlowSizeSampler(const TrafficConfig& cfg);
    std::int64_t operator()(RngStream& rng) const;
    double scale() const { return scale_; }

private:
    SizeDistribution dist_;
    bool shifted_;
    double shape_;
    double scale_;
    double geometric_log_q_ = 0.0;
    std::int64_t cap_;
};

std::int64_t sample_flow_size(RngStream& rng, const TrafficConfig& cfg);

/// Poisson arrivals on [start, end) at `rate`, sizes and RTT classes drawn
/// from their own streams. Flow ids start at `first_id`.
std::vector<FlowSpec> generate_arrivals(double rate, SimTime start, SimTime end,
                                        const FlowSizeSampler& sizes, std::size_t rtt_classes,
                                        Direction direction, int initial_window,
                                        RngStream& arrivals, RngStream& size_rng,
                                        RngStream& rtt_rng, FlowId first_id);

/// Forward traffic at cfg.load plus reverse traffic at cfg.reverse_load, over
/// [0, duration). Forward flows get the lowest ids, in arrival order.
std::vector<FlowSpec> generate_workload(const TrafficConfig& cfg, const TopologyConfig& topo,
                                        std::uint64_t seed);

/// Adds `count` never-ending forward flows starting at `start`.
void add_persistent_flows(std::vector<FlowSpec>& flows, std::size_t count, SimTime start,
                          const TopologyConfig& topo, int initial_window, std::uint64_t seed);

}  // namespace favq
