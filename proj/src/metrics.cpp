#include "favq/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace favq {

std::vector<FlowRecord> measured_flows(std::span<const FlowRecord> records, double warmup) {
    std::vector<FlowRecord> out;
    for (const auto& r : records) {
        if (r.arrival_time >= warmup) out.push_back(r);
    }
    return out;
}

std::vector<FlowRecord> completed_flows(std::span<const FlowRecord> records) {
    std::vector<FlowRecord> out;
    for (const auto& r : records) {
        if (r.completed) out.push_back(r);
    }
    return out;
}

std::vector<FlowRecord> flows_of_length(std::span<const FlowRecord> records, std::int64_t length) {
    std::vector<FlowRecord> out;
    for (const auto& r : records) {
        if (r.length == length) out.push_back(r);
    }
    return out;
}

namespace {

std::optional<double> ratio(double num, double den) {
    if (den <= 0.0) return std::nullopt;
    return num / den;
}

}  // namespace

std::optional<double> rto_ratio(std::span<const FlowRecord> records) {
    double num = 0, den = 0;
    for (const auto& r : records) {
        num += static_cast<double>(r.rto_count);
        den += static_cast<double>(r.length + r.retransmissions);
    }
    return ratio(num, den);
}

std::optional<double> rto_recovery_ratio(std::span<const FlowRecord> records) {
    double num = 0, den = 0;
    for (const auto& r : records) {
        num += static_cast<double>(r.rto_count);
        den += static_cast<double>(r.rto_count + r.fast_retransmits);
    }
    return ratio(num, den);
}

std::optional<double> favour_probability(std::span<const FlowRecord> records) {
    double num = 0, den = 0;
    for (const auto& r : records) {
        num += static_cast<double>(r.favoured);
        den += static_cast<double>(r.length + r.retransmissions);
    }
    return ratio(num, den);
}

std::optional<double> pushout_share(std::span<const FlowRecord> records) {
    double num = 0, den = 0;
    for (const auto& r : records) {
        num += static_cast<double>(r.pushout_drops);
        den += static_cast<double>(r.drops);
    }
    return ratio(num, den);
}

double syn_loss_ratio(std::span<const FlowRecord> records) {
    double num = 0, den = 0;
    for (const auto& r : records) {
        num += static_cast<double>(r.syn_drops);
        den += static_cast<double>(r.syn_arrivals);
    }
    return den > 0 ? num / den : 0.0;
}

std::optional<double> drop_ratio(std::span<const FlowRecord> records) {
    double num = 0, den = 0;
    for (const auto& r : records) {
        num += static_cast<double>(r.drops);
        den += static_cast<double>(r.bottleneck_arrivals);
    }
    return ratio(num, den);
}

std::optional<double> mean_latency(std::span<const FlowRecord> records) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (!r.completed) continue;
        sum += r.latency;
        ++n;
    }
    return ratio(sum, static_cast<double>(n));
}

std::optional<double> mean_goodput(std::span<const FlowRecord> records) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (!r.completed) continue;
        sum += r.goodput;
        ++n;
    }
    return ratio(sum, static_cast<double>(n));
}

std::optional<double> mean_queue_delay(std::span<const FlowRecord> records) {
    double sum = 0, n = 0;
    for (const auto& r : records) {
        sum += r.queue_delay_sum;
        n += static_cast<double>(r.queue_delay_samples);
    }
    return ratio(sum, n);
}

std::vector<PairedFlowDelta> pair_flows(std::span<const FlowRecord> droptail,
                                        std::span<const FlowRecord> favour) {
    std::unordered_map<FlowId, const FlowRecord*> fq;
    fq.reserve(favour.size());
    for (const auto& r : favour) {
        if (r.completed) fq.emplace(r.flow_id, &r);
    }
    std::vector<PairedFlowDelta> out;
    for (const auto& d : droptail) {
        if (!d.completed) continue;
        auto it = fq.find(d.flow_id);
        if (it == fq.end()) continue;
        const FlowRecord& f = *it->second;
        out.push_back(PairedFlowDelta{d.flow_id, d.length, d.latency, f.latency,
                                      d.latency - f.latency});
    }
    return out;
}

std::optional<double> latency_gain(std::span<const PairedFlowDelta> pairs) {
    double num = 0, den = 0;
    for (const auto& p : pairs) {
        num += p.delta;
        den += p.droptail_latency;
    }
    return ratio(num, den);
}

ImprovementProbability improvement_probability(std::span<const PairedFlowDelta> pairs) {
    ImprovementProbability out;
    out.count = pairs.size();
    if (pairs.empty()) return out;
    std::size_t up = 0, down = 0, same = 0;
    for (const auto& p : pairs) {
        if (p.delta > 0) {
            ++up;
        } else if (p.delta < 0) {
            ++down;
        } else {
            ++same;
        }
    }
    const double n = static_cast<double>(pairs.size());
    out.improve = static_cast<double>(up) / n;
    out.degrade = static_cast<double>(down) / n;
    out.equal = static_cast<double>(same) / n;
    return out;
}

std::vector<FlowCountSample> flows_in_system(std::span<const FlowRecord> records) {
    std::map<double, std::int64_t> changes;
    for (const auto& r : records) {
        changes[r.arrival_time] += 1;
        if (r.completed) changes[r.completion_time] -= 1;
    }
    std::vector<FlowCountSample> out;
    out.push_back({0.0, 0});
    std::int64_t count = 0;
    for (const auto& [t, d] : changes) {
        if (d == 0) continue;
        count += d;
        if (t == out.back().time) {
            out.back().count = count;
        } else {
            out.push_back({t, count});
        }
    }
    return out;
}

double time_average(std::span<const FlowCountSample> series, double from, double to) {
    if (!(to > from) || series.empty()) return 0.0;
    double area = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double a = std::max(series[i].time, from);
        const double b = std::min(i + 1 < series.size() ? series[i + 1].time : to, to);
        if (b > a) area += static_cast<double>(series[i].count) * (b - a);
    }
    return area / (to - from);
}

std::int64_t length_bucket(std::int64_t length) {
    if (length <= 100) return length;
    // Bucket i covers (edge(i), edge(i + 1)].
    auto edge = [](int i) { return std::llround(100.0 * std::pow(10.0, i / 10.0)); };
    int i = 0;
    while (edge(i + 1) < length) ++i;
    return edge(i) + 1;
}

double latency_mass(std::span<const FlowRecord> records, double lo, double hi) {
    std::size_t n = 0, in = 0;
    for (const auto& r : records) {
        if (!r.completed) continue;
        ++n;
        if (r.latency >= lo && r.latency < hi) ++in;
    }
    return n ? static_cast<double>(in) / static_cast<double>(n) : 0.0;
}

std::vector<std::pair<double, double>> latency_ccdf(std::span<const FlowRecord> records) {
    std::vector<double> lat;
    for (const auto& r : records) {
        if (r.completed) lat.push_back(r.latency);
    }
    std::sort(lat.begin(), lat.end());
    std::vector<std::pair<double, double>> out;
    const double n = static_cast<double>(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        if (i + 1 < lat.size() && lat[i + 1] == lat[i]) continue;
        out.emplace_back(lat[i], (n - static_cast<double>(i + 1)) / n);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_optional(std::optional<double> v) { return v ? format_double(*v) : "nan"; }

namespace {

constexpr const char* kFlowHeader =
    "flow_id,length,arrival_time,rtt_class,completed,completion_time,latency,goodput,drops,"
    "pushout_drops,syn_arrivals,syn_drops,rto_count,fast_retransmits,retransmissions,favoured,"
    "bottleneck_arrivals,queue_delay_sum,queue_delay_samples,rho";

template <typename T>
T parse_field(std::string_view s, std::size_t line) {
    T v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("flow csv line " + std::to_string(line) + ": bad field '" +
                                 std::string(s) + "'");
    }
    return v;
}

}  // namespace

void write_flow_csv(std::ostream& out, std::span<const FlowRecord> records) {
    out << kFlowHeader << '\n';
    for (const auto& r : records) {
        out << r.flow_id << ',' << r.length << ',' << format_double(r.arrival_time) << ','
            << r.rtt_class << ',' << (r.completed ? 1 : 0) << ','
            << format_double(r.completion_time) << ',' << format_double(r.latency) << ','
            << format_double(r.goodput) << ',' << r.drops << ',' << r.pushout_drops << ','
            << r.syn_arrivals << ',' << r.syn_drops << ',' << r.rto_count << ','
            << r.fast_retransmits << ',' << r.retransmissions << ',' << r.favoured << ','
            << r.bottleneck_arrivals << ',' << format_double(r.queue_delay_sum) << ','
            << r.queue_delay_samples << ',' << format_double(r.rho) << '\n';
    }
}

void write_flow_csv(const std::string& path, std::span<const FlowRecord> records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_flow_csv(out, records);
}

std::vector<FlowRecord> read_flow_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kFlowHeader) {
        throw std::runtime_error("flow csv: unexpected header");
    }
    std::vector<FlowRecord> out;
    std::size_t lineno = 1;
    std::vector<std::string_view> f;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        f.clear();
        std::string_view rest(line);
        for (;;) {
            auto comma = rest.find(',');
            f.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (f.size() != 20) {
            throw std::runtime_error("flow csv line " + std::to_string(lineno) +
                                     ": expected 20 fields");
        }
        FlowRecord r;
        r.flow_id = parse_field<FlowId>(f[0], lineno);
        r.length = parse_field<std::int64_t>(f[1], lineno);
        r.arrival_time = parse_field<double>(f[2], lineno);
        r.rtt_class = parse_field<std::uint32_t>(f[3], lineno);
        r.completed = parse_field<int>(f[4], lineno) != 0;
        r.completion_time = parse_field<double>(f[5], lineno);
        r.latency = parse_field<double>(f[6], lineno);
        r.goodput = parse_field<double>(f[7], lineno);
        r.drops = parse_field<std::int64_t>(f[8], lineno);
        r.pushout_drops = parse_field<std::int64_t>(f[9], lineno);
        r.syn_arrivals = parse_field<std::int64_t>(f[10], lineno);
        r.syn_drops = parse_field<std::int64_t>(f[11], lineno);
        r.rto_count = parse_field<std::int64_t>(f[12], lineno);
        r.fast_retransmits = parse_field<std::int64_t>(f[13], lineno);
        r.retransmissions = parse_field<std::int64_t>(f[14], lineno);
        r.favoured = parse_field<std::int64_t>(f[15], lineno);
        r.bottleneck_arrivals = parse_field<std::int64_t>(f[16], lineno);
        r.queue_delay_sum = parse_field<double>(f[17], lineno);
        r.queue_delay_samples = parse_field<std::int64_t>(f[18], lineno);
        r.rho = parse_field<double>(f[19], lineno);
        out.push_back(r);
    }
    return out;
}

std::vector<FlowRecord> read_flow_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return read_flow_csv(in);
}

}  // namespace favq
