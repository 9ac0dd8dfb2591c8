#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "favq/workload.hpp"

using namespace favq;

TEST(ArrivalRate, MatchesLoadDefinition) {
    // rho C / (E[sigma] * 1500 * 8)
    EXPECT_NEAR(arrival_rate(0.05, 1e7, 30, 1500), 1.3889, 1e-4);
    EXPECT_NEAR(arrival_rate(0.95, 1e7, 30, 1500), 26.389, 1e-3);
    EXPECT_DOUBLE_EQ(arrival_rate(0.0, 1e7, 30, 1500), 0.0);
}

TEST(ParetoScale, ContinuousMean) {
    // mean = a * shape / (shape - 1)
    EXPECT_NEAR(pareto_scale(1.3, 30.0), 6.923, 1e-3);
    EXPECT_THROW(pareto_scale(1.0, 30.0), std::invalid_argument);
}

namespace {

// P(ceil(X) capped = k) summed by brute force from the survival function.
double brute_mean(double shape, double scale, std::int64_t cap, bool shifted) {
    auto survive = [&](double x) {
        if (shifted) return std::pow(scale / (scale + x), shape);
        return x < scale ? 1.0 : std::pow(scale / x, shape);
    };
    double mean = 0.0;
    for (std::int64_t k = 1; k < cap; ++k) {
        mean += static_cast<double>(k) * (survive(static_cast<double>(k - 1)) - survive(static_cast<double>(k)));
    }
    mean += static_cast<double>(cap) * survive(static_cast<double>(cap - 1));
    return mean;
}

}  // namespace

TEST(ParetoScale, DiscretisedMeanMatchesBruteForce) {
    for (bool shifted : {false, true}) {
        for (double scale : {2.0, 6.9, 9.0, 12.5}) {
            EXPECT_NEAR(discretised_pareto_mean(1.3, scale, 10000, shifted),
                        brute_mean(1.3, scale, 10000, shifted), 1e-6)
                << scale << " " << shifted;
        }
    }
}

TEST(ParetoScale, CalibratedScaleHitsMean) {
    for (bool shifted : {false, true}) {
        const double a = calibrated_pareto_scale(1.3, 30.0, 10000, shifted);
        EXPECT_NEAR(brute_mean(1.3, a, 10000, shifted), 30.0, 1e-6);
    }
}

TEST(FlowSizeSampler, LomaxCdfAtTen) {
    TrafficConfig cfg;
    const FlowSizeSampler sampler(cfg);
    // Uncapped, mean 30 needs scale 9 and puts 0.62 of the mass at or below
    // 10. The cap at 10^4 trims the mean, so the calibrated scale is larger.
    EXPECT_NEAR(1.0 - std::pow(9.0 / 19.0, 1.3), 0.621, 1e-3);
    EXPECT_NEAR(sampler.scale(), 10.126, 1e-3);
    // P(size <= 10) = 1 - (a / (a + 10))^1.3
    const double cdf10 = 1.0 - std::pow(sampler.scale() / (sampler.scale() + 10.0), 1.3);
    EXPECT_NEAR(cdf10, 0.5906, 1e-4);

    RngStream rng(11, StreamId::FlowSizes);
    const int n = 400000;
    int le10 = 0, ones = 0;
    double sum = 0.0;
    std::int64_t mx = 0;
    for (int i = 0; i < n; ++i) {
        const auto s = sampler(rng);
        ASSERT_GE(s, 1);
        ASSERT_LE(s, cfg.max_flow_size);
        le10 += s <= 10;
        ones += s == 1;
        sum += static_cast<double>(s);
        mx = std::max(mx, s);
    }
    EXPECT_NEAR(static_cast<double>(le10) / n, cdf10, 5.0 * std::sqrt(cdf10 * (1 - cdf10) / n));
    EXPECT_GT(ones, 0);
    // The capped tail is heavy; 10% is well outside the sampling noise here.
    EXPECT_NEAR(sum / n, 30.0, 3.0);
}

TEST(FlowSizeSampler, ClassicFormStartsAtScale) {
    TrafficConfig cfg;
    cfg.pareto_shifted = false;
    const FlowSizeSampler sampler(cfg);
    RngStream rng(2, StreamId::FlowSizes);
    std::int64_t mn = cfg.max_flow_size;
    for (int i = 0; i < 100000; ++i) mn = std::min(mn, sampler(rng));
    EXPECT_EQ(mn, static_cast<std::int64_t>(std::ceil(sampler.scale())));
}

TEST(FlowSizeSampler, GeometricMean) {
    TrafficConfig cfg;
    cfg.size_distribution = SizeDistribution::Geometric;
    cfg.mean_flow_size = 6.0;
    const FlowSizeSampler sampler(cfg);
    RngStream rng(4, StreamId::FlowSizes);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto s = sampler(rng);
        ASSERT_GE(s, 1);
        sum += static_cast<double>(s);
    }
    // variance of a geometric on {1, ...} with mean m is m (m - 1)
    EXPECT_NEAR(sum / n, 6.0, 5.0 * std::sqrt(30.0 / n));
}

TEST(Topology, MeanPropagationRtt) {
    TopologyConfig topo;
    EXPECT_NEAR(topo.mean_propagation_rtt(), 0.1, 1e-12);
    EXPECT_NEAR(topo.propagation_rtt(0), 0.028, 1e-12);
    EXPECT_NEAR(topo.propagation_rtt(9), 0.172, 1e-12);
    topo.bottleneck_capacity = 0;
    EXPECT_THROW(topo.validate(), std::invalid_argument);
}

TEST(Workload, DeterministicPerSeed) {
    TrafficConfig cfg;
    cfg.load = 0.5;
    cfg.duration = 100;
    TopologyConfig topo;
    const auto a = generate_workload(cfg, topo, 7);
    const auto b = generate_workload(cfg, topo, 7);
    const auto c = generate_workload(cfg, topo, 8);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].arrival_time, b[i].arrival_time);
        EXPECT_EQ(a[i].size, b[i].size);
        EXPECT_EQ(a[i].rtt_class, b[i].rtt_class);
    }
    EXPECT_NE(a.size() == c.size() && a[0].arrival_time == c[0].arrival_time, true);
}

TEST(Workload, ForwardFlowsIndependentOfReverseLoad) {
    TrafficConfig cfg;
    cfg.load = 0.3;
    cfg.duration = 100;
    TopologyConfig topo;
    const auto a = generate_workload(cfg, topo, 3);
    cfg.reverse_load = 0.4;
    const auto b = generate_workload(cfg, topo, 3);
    auto fwd = [](const std::vector<FlowSpec>& v) {
        std::vector<FlowSpec> out;
        for (const auto& f : v) {
            if (f.direction == Direction::Forward) out.push_back(f);
        }
        return out;
    };
    const auto fa = fwd(a), fb = fwd(b);
    ASSERT_EQ(fa.size(), fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
        EXPECT_EQ(fa[i].flow_id, fb[i].flow_id);
        EXPECT_EQ(fa[i].size, fb[i].size);
    }
}

TEST(Workload, ArrivalCountsAndOrdering) {
    TrafficConfig cfg;
    cfg.load = 0.85;
    cfg.duration = 500;
    TopologyConfig topo;
    const auto flows = generate_workload(cfg, topo, 1);
    std::size_t fwd = 0, rev = 0;
    std::set<FlowId> ids;
    double last = -1.0;
    std::vector<int> per_class(10, 0);
    for (const auto& f : flows) {
        ids.insert(f.flow_id);
        ASSERT_GE(f.arrival_time, 0.0);
        ASSERT_LT(f.arrival_time, cfg.duration);
        if (f.direction == Direction::Forward) {
            ASSERT_EQ(f.flow_id, fwd);  // forward flows come first, in arrival order
            ASSERT_GE(f.arrival_time, last);
            last = f.arrival_time;
            ++per_class[f.rtt_class];
            ++fwd;
        } else {
            ++rev;
        }
    }
    EXPECT_EQ(ids.size(), flows.size());
    const double want_fwd = arrival_rate(0.85, 1e7, 30, 1500) * 500;
    const double want_rev = arrival_rate(0.10, 1e7, 30, 1500) * 500;
    EXPECT_NEAR(static_cast<double>(fwd), want_fwd, 5 * std::sqrt(want_fwd));
    EXPECT_NEAR(static_cast<double>(rev), want_rev, 5 * std::sqrt(want_rev));
    for (int c : per_class) EXPECT_NEAR(c, fwd / 10.0, 5 * std::sqrt(fwd * 0.09));
}

TEST(Workload, PersistentFlowsAppended) {
    TrafficConfig cfg;
    cfg.duration = 50;
    TopologyConfig topo;
    auto flows = generate_workload(cfg, topo, 1);
    const auto before = flows.size();
    add_persistent_flows(flows, 5, 40.0, topo, 2, 1);
    ASSERT_EQ(flows.size(), before + 5);
    std::set<FlowId> ids;
    for (const auto& f : flows) ids.insert(f.flow_id);
    EXPECT_EQ(ids.size(), flows.size());
    for (std::size_t i = before; i < flows.size(); ++i) {
        EXPECT_TRUE(flows[i].persistent);
        EXPECT_EQ(flows[i].direction, Direction::Forward);
        EXPECT_GE(flows[i].arrival_time, 40.0);
    }
}

TEST(TrafficConfig, RejectsBadValues) {
    TrafficConfig cfg;
    cfg.load = -0.1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.pareto_shape = 0.9;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
