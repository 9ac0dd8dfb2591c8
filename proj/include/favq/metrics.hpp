#pragma once

// Per-flow records and the aggregate statistics computed from them.
//
// Lengths are counted in packets including the SYN (L = data packets + 1).
// Ratios whose denominator is empty come back as std::nullopt rather than 0.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favq/queue_disc.hpp"

namespace favq {

struct FlowRecord {
    FlowId flow_id = 0;
    std::int64_t length = 0;  // packets incl. SYN
    double arrival_time = 0.0;
    std::uint32_t rtt_class = 0;
    bool completed = false;
    double completion_time = 0.0;  // absolute; meaningful when completed
    double latency = 0.0;          // seconds; meaningful when completed
    double goodput = 0.0;          // data bits / latency / bottleneck capacity
    std::int64_t drops = 0;        // tail drops + push-out victims
    std::int64_t pushout_drops = 0;
    std::int64_t syn_arrivals = 0;
    std::int64_t syn_drops = 0;
    std::int64_t rto_count = 0;
    std::int64_t fast_retransmits = 0;
    std::int64_t retransmissions = 0;
    std::int64_t favoured = 0;
    std::int64_t bottleneck_arrivals = 0;
    double queue_delay_sum = 0.0;
    std::int64_t queue_delay_samples = 0;
    double rho = 0.0;
};

/// Flows arriving at or after `warmup`.
std::vector<FlowRecord> measured_flows(std::span<const FlowRecord> records, double warmup);
std::vector<FlowRecord> completed_flows(std::span<const FlowRecord> records);
std::vector<FlowRecord> flows_of_length(std::span<const FlowRecord> records, std::int64_t length);

/// Sum RTO_i / Sum (L_i + R_i).
std::optional<double> rto_ratio(std::span<const FlowRecord> records);
/// Sum RTO_i / Sum (RTO_i + FR_i).
std::optional<double> rto_recovery_ratio(std::span<const FlowRecord> records);
/// Sum fa_i / Sum (L_i + R_i).
std::optional<double> favour_probability(std::span<const FlowRecord> records);
/// Sum push-out drops / Sum drops.
std::optional<double> pushout_share(std::span<const FlowRecord> records);
/// SYN drops / SYN arrivals at the bottleneck; 0 when no SYN arrived.
double syn_loss_ratio(std::span<const FlowRecord> records);
/// Sum drops / Sum bottleneck arrivals.
std::optional<double> drop_ratio(std::span<const FlowRecord> records);
std::optional<double> mean_latency(std::span<const FlowRecord> records);
std::optional<double> mean_goodput(std::span<const FlowRecord> records);
/// Mean per-packet queueing delay at the bottleneck.
std::optional<double> mean_queue_delay(std::span<const FlowRecord> records);

struct PairedFlowDelta {
    FlowId flow_id;
    std::int64_t length;
    double droptail_latency;
    double favour_latency;
    double delta;  // droptail - favour
};

/// Joins two runs over the same workload on flow id, keeping flows that
/// completed in both.
std::vector<PairedFlowDelta> pair_flows(std::span<const FlowRecord> droptail,
                                        std::span<const FlowRecord> favour);

/// G = Sum delta / Sum droptail latency. Positive means FavourQueue is faster.
std::optional<double> latency_gain(std::span<const PairedFlowDelta> pairs);

struct ImprovementProbability {
    double improve = 0.0;
    double degrade = 0.0;
    double equal = 0.0;
    std::size_t count = 0;
};
/// Fractions of pairs with delta > 0, < 0 and == 0.
ImprovementProbability improvement_probability(std::span<const PairedFlowDelta> pairs);

struct FlowCountSample {
    double time;
    std::int64_t count;
};
/// Step function of flows in progress: +1 at arrival, -1 at completion.
/// Simultaneous changes collapse into one sample; starts at (0, 0).
std::vector<FlowCountSample> flows_in_system(std::span<const FlowRecord> records);
/// Time-average of the step function over [from, to).
double time_average(std::span<const FlowCountSample> series, double from, double to);

/// Length bucket: exact below or at 100, then ten buckets per decade.
/// Returns the lower edge of the bucket.
std::int64_t length_bucket(std::int64_t length);

/// Fraction of latencies falling in [lo, hi).
double latency_mass(std::span<const FlowRecord> records, double lo, double hi);

/// Empirical CCDF points (latency, P(latency > x)) over completed flows.
std::vector<std::pair<double, double>> latency_ccdf(std::span<const FlowRecord> records);

// CSV persistence. Doubles are written in shortest round-trip form so a
// reload reproduces every metric bit for bit.
void write_flow_csv(std::ostream& out, std::span<const FlowRecord> records);
void write_flow_csv(const std::string& path, std::span<const FlowRecord> records);
/// Throws std::runtime_error on malformed input.
std::vector<FlowRecord> read_flow_csv(std::istream& in);
std::vector<FlowRecord> read_flow_csv(const std::string& path);

std::string format_double(double v);
std::string format_optional(std::optional<double> v);

}  // namespace favq
