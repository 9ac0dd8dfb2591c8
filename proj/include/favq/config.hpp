#pragma once

// Experiment configuration: line-oriented `key = value` text, `#` comments.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "favq/transport.hpp"
#include "favq/workload.hpp"

namespace favq {

struct ExperimentConfig {
    TopologyConfig topology;
    TrafficConfig traffic;
    TcpConfig tcp;
    std::vector<double> loads = {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    // Persistent-flow scenario.
    std::size_t persistent_flows = 50;
    double persistent_start = 40.0;
    double persistent_short_load = 0.20;
    double persistent_short_mean = 6.0;

    std::vector<std::size_t> queue_sizes = {8, 16, 32, 64};

    /// Flows needed at a length before it enters an empirical favour curve.
    std::size_t fit_min_flows = 30;
    std::int64_t fit_max_length = 1000;

    void validate() const;
};

/// Throws std::runtime_error naming the offending line on unknown keys or
/// unparseable values.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Every key with its effective value, one per line, in a fixed order.
std::string canonical_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Shrinks the run for CI: 100 s of traffic and seeds {1, 2, 3}.
void apply_quick_preset(ExperimentConfig& cfg);

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::uint64_t> parse_u64_list(const std::string& text);

}  // namespace favq
