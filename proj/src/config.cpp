#include "favq/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "favq/metrics.hpp"

namespace favq {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& text) {
    T v{};
    const std::string t = trim(text);
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || t.empty()) {
        throw std::invalid_argument("not a number: '" + t + "'");
    }
    return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_number<T>(item));
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += format_double(v[i]);
        } else {
            out += std::to_string(v[i]);
        }
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
    const char* name;
    Setter set;
    Getter get;
};

#define FAVQ_DOUBLE(key, field)                                                         \
    Key {                                                                               \
        key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_number<double>(v); }, \
            [](const ExperimentConfig& c) { return format_double(c.field); }            \
    }
#define FAVQ_INT(key, field, type)                                                      \
    Key {                                                                               \
        key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_number<type>(v); }, \
            [](const ExperimentConfig& c) { return std::to_string(c.field); }           \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> k = {
        FAVQ_DOUBLE("bottleneck_capacity", topology.bottleneck_capacity),
        FAVQ_DOUBLE("edge_capacity", topology.edge_capacity),
        FAVQ_INT("queue_capacity", topology.queue_capacity, std::size_t),
        FAVQ_INT("edge_queue_capacity", topology.edge_queue_capacity, std::size_t),
        FAVQ_DOUBLE("bottleneck_delay", topology.bottleneck_delay),
        Key{"edge_delays",
            [](ExperimentConfig& c, const std::string& v) {
                c.topology.edge_delays = parse_list<double>(v);
            },
            [](const ExperimentConfig& c) { return join(c.topology.edge_delays); }},
        FAVQ_INT("packet_bytes", traffic.packet_bytes, std::int32_t),
        FAVQ_DOUBLE("mean_flow_size", traffic.mean_flow_size),
        Key{"size_distribution",
            [](ExperimentConfig& c, const std::string& v) {
                const auto t = trim(v);
                if (t == "pareto") {
                    c.traffic.size_distribution = SizeDistribution::Pareto;
                } else if (t == "geometric") {
                    c.traffic.size_distribution = SizeDistribution::Geometric;
                } else {
                    throw std::invalid_argument("size_distribution must be pareto or geometric");
                }
            },
            [](const ExperimentConfig& c) {
                return std::string(c.traffic.size_distribution == SizeDistribution::Pareto
                                       ? "pareto"
                                       : "geometric");
            }},
        FAVQ_DOUBLE("pareto_shape", traffic.pareto_shape),
        Key{"pareto_form",
            [](ExperimentConfig& c, const std::string& v) {
                const auto t = trim(v);
                if (t == "lomax") {
                    c.traffic.pareto_shifted = true;
                } else if (t == "classic") {
                    c.traffic.pareto_shifted = false;
                } else {
                    throw std::invalid_argument("pareto_form must be lomax or classic");
                }
            },
            [](const ExperimentConfig& c) {
                return std::string(c.traffic.pareto_shifted ? "lomax" : "classic");
            }},
        FAVQ_INT("max_flow_size", traffic.max_flow_size, std::int64_t),
        FAVQ_DOUBLE("reverse_load", traffic.reverse_load),
        FAVQ_DOUBLE("duration", traffic.duration),
        FAVQ_DOUBLE("warmup", traffic.warmup),
        FAVQ_INT("initial_window", traffic.initial_window, int),
        FAVQ_DOUBLE("initial_rto", tcp.initial_rto),
        FAVQ_DOUBLE("min_rto", tcp.min_rto),
        FAVQ_DOUBLE("max_rto", tcp.max_rto),
        FAVQ_INT("dupack_threshold", tcp.dupack_threshold, int),
        FAVQ_INT("ack_bytes", tcp.control_bytes, std::int32_t),
        FAVQ_INT("max_window", tcp.max_window, int),
        Key{"recovery",
            [](ExperimentConfig& c, const std::string& v) {
                const auto t = trim(v);
                if (t == "reno") {
                    c.tcp.recovery = RecoveryMode::Reno;
                } else if (t == "newreno") {
                    c.tcp.recovery = RecoveryMode::NewReno;
                } else {
                    throw std::invalid_argument("recovery must be reno or newreno");
                }
            },
            [](const ExperimentConfig& c) {
                return std::string(c.tcp.recovery == RecoveryMode::Reno ? "reno" : "newreno");
            }},
        Key{"loads",
            [](ExperimentConfig& c, const std::string& v) { c.loads = parse_list<double>(v); },
            [](const ExperimentConfig& c) { return join(c.loads); }},
        Key{"seeds",
            [](ExperimentConfig& c, const std::string& v) {
                c.seeds = parse_list<std::uint64_t>(v);
            },
            [](const ExperimentConfig& c) { return join(c.seeds); }},
        FAVQ_INT("persistent_flows", persistent_flows, std::size_t),
        FAVQ_DOUBLE("persistent_start", persistent_start),
        FAVQ_DOUBLE("persistent_short_load", persistent_short_load),
        FAVQ_DOUBLE("persistent_short_mean", persistent_short_mean),
        Key{"queue_sizes",
            [](ExperimentConfig& c, const std::string& v) {
                c.queue_sizes = parse_list<std::size_t>(v);
            },
            [](const ExperimentConfig& c) { return join(c.queue_sizes); }},
        FAVQ_INT("fit_min_flows", fit_min_flows, std::size_t),
        FAVQ_INT("fit_max_length", fit_max_length, std::int64_t),
    };
    return k;
}

#undef FAVQ_DOUBLE
#undef FAVQ_INT

}  // namespace

void ExperimentConfig::validate() const {
    topology.validate();
    TrafficConfig t = traffic;
    for (double rho : loads) {
        t.load = rho;
        t.validate();
    }
    if (seeds.empty()) throw std::invalid_argument("config: no seeds");
    if (tcp.initial_rto <= 0 || tcp.min_rto <= 0 || tcp.max_rto < tcp.min_rto) {
        throw std::invalid_argument("config: invalid RTO bounds");
    }
    for (auto q : queue_sizes) {
        if (q < 1) throw std::invalid_argument("config: queue sizes must be >= 1");
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const auto& all = keys();
        auto it = std::find_if(all.begin(), all.end(), [&](const Key& k) { return key == k.name; });
        if (it == all.end()) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key '" +
                                     key + "'");
        }
        try {
            it->set(cfg, value);
        } catch (const std::exception& e) {
            throw std::runtime_error("config line " + std::to_string(lineno) + " (" + key +
                                     "): " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    return parse_config(in);
}

std::string canonical_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& k : keys()) {
        out += k.name;
        out += " = ";
        out += k.get(cfg);
        out += '\n';
    }
    return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_config(cfg)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void apply_quick_preset(ExperimentConfig& cfg) {
    cfg.traffic.duration = 100.0;
    cfg.seeds = {1, 2, 3};
}

std::vector<double> parse_double_list(const std::string& text) { return parse_list<double>(text); }
std::vector<std::uint64_t> parse_u64_list(const std::string& text) {
    return parse_list<std::uint64_t>(text);
}

}  // namespace favq
