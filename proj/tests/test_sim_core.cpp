#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "favq/sim_core.hpp"

using namespace favq;

TEST(Simulator, FiresInTimeOrder) {
    Simulator sim;
    std::vector<int> order;
    sim.schedule(3.0, EventKind::TimerExpiry, [&] { order.push_back(3); });
    sim.schedule(1.0, EventKind::TimerExpiry, [&] { order.push_back(1); });
    sim.schedule(2.0, EventKind::TimerExpiry, [&] { order.push_back(2); });
    sim.run_until(10.0);
    EXPECT_EQ(order, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(sim.now(), 10.0);
    EXPECT_EQ(sim.processed(), 3u);
}

TEST(Simulator, SimultaneousEventsFireInInsertionOrder) {
    Simulator sim;
    std::vector<int> order;
    for (int i = 0; i < 50; ++i) {
        sim.schedule(1.0, EventKind::PacketArrival, [&order, i] { order.push_back(i); });
    }
    sim.run_until(1.0);
    ASSERT_EQ(order.size(), 50u);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(order[i], i);
}

TEST(Simulator, EventsAtHorizonAreProcessedLaterOnesKept) {
    Simulator sim;
    int fired = 0;
    sim.schedule(5.0, EventKind::TimerExpiry, [&] { ++fired; });
    sim.schedule(5.0 + 1e-9, EventKind::TimerExpiry, [&] { ++fired; });
    sim.run_until(5.0);
    EXPECT_EQ(fired, 1);
    EXPECT_EQ(sim.pending(), 1u);
    sim.run_until(6.0);
    EXPECT_EQ(fired, 2);
}

TEST(Simulator, ScheduleInPastThrows) {
    Simulator sim;
    sim.run_until(2.0);
    EXPECT_THROW(sim.schedule(1.0, EventKind::TimerExpiry, [] {}), std::logic_error);
    EXPECT_THROW(sim.schedule(std::numeric_limits<double>::quiet_NaN(), EventKind::TimerExpiry, [] {}),
                 std::logic_error);
    EXPECT_THROW(sim.schedule(std::numeric_limits<double>::infinity(), EventKind::TimerExpiry, [] {}),
                 std::logic_error);
    EXPECT_NO_THROW(sim.schedule(2.0, EventKind::TimerExpiry, [] {}));
}

TEST(Simulator, CancelRemovesEvent) {
    Simulator sim;
    int fired = 0;
    auto h = sim.schedule(1.0, EventKind::TimerExpiry, [&] { ++fired; });
    sim.schedule(2.0, EventKind::TimerExpiry, [&] { ++fired; });
    EXPECT_TRUE(sim.is_pending(h));
    sim.cancel(h);
    EXPECT_FALSE(sim.is_pending(h));
    sim.cancel(h);  // second cancel is harmless
    EXPECT_EQ(sim.pending(), 1u);
    EXPECT_EQ(sim.next_event_time(), 2.0);
    sim.run_until(3.0);
    EXPECT_EQ(fired, 1);
    EXPECT_EQ(sim.processed(), 1u);
}

TEST(Simulator, ActionsMayScheduleAndCancel) {
    Simulator sim;
    std::vector<double> times;
    EventHandle victim;
    sim.schedule(1.0, EventKind::TimerExpiry, [&] {
        times.push_back(sim.now());
        sim.schedule_in(0.5, EventKind::TimerExpiry, [&] { times.push_back(sim.now()); });
        sim.cancel(victim);
    });
    victim = sim.schedule(1.2, EventKind::TimerExpiry, [&] { times.push_back(-1); });
    sim.run_until(2.0);
    EXPECT_EQ(times, (std::vector<double>{1.0, 1.5}));
}

TEST(Simulator, TraceSeesEveryProcessedEvent) {
    Simulator sim;
    std::vector<TraceEntry> trace;
    sim.set_trace([&](const TraceEntry& e) { trace.push_back(e); });
    sim.schedule(1.0, EventKind::FlowStart, [] {}, 7);
    auto h = sim.schedule(1.5, EventKind::TimerExpiry, [] {}, 8);
    sim.schedule(2.0, EventKind::PacketArrival, [] {}, 9);
    sim.cancel(h);
    sim.run_until(5.0);
    ASSERT_EQ(trace.size(), 2u);
    EXPECT_EQ(trace[0].kind, EventKind::FlowStart);
    EXPECT_EQ(trace[0].tag, 7u);
    EXPECT_EQ(trace[1].time, 2.0);
    EXPECT_EQ(trace[1].tag, 9u);
}

TEST(Simulator, EmptyRunAdvancesClock) {
    Simulator sim;
    EXPECT_EQ(sim.run_until(4.0), 4.0);
    EXPECT_TRUE(std::isinf(sim.next_event_time()));
}

TEST(RngStream, SameSeedSameSequence) {
    RngStream a(42, StreamId::FlowSizes);
    RngStream b(42, StreamId::FlowSizes);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, StreamsAndSeedsDiffer) {
    RngStream a(42, StreamId::FlowSizes);
    RngStream b(42, StreamId::FlowArrivals);
    RngStream c(43, StreamId::FlowSizes);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        same_ab += x == b.next_u64();
        same_ac += x == c.next_u64();
    }
    EXPECT_EQ(same_ab, 0);
    EXPECT_EQ(same_ac, 0);
}

TEST(RngStream, UniformRangeAndMean) {
    RngStream r(1, 99);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double v = r.uniform_pos();
        ASSERT_GT(v, 0.0);
        ASSERT_LE(v, 1.0);
        sum += u;
    }
    // 5 sigma of the sample mean
    EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RngStream, ExponentialMean) {
    RngStream r(3, 7);
    const double rate = 26.39;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += r.exponential(rate);
    EXPECT_NEAR(sum / n, 1.0 / rate, 5.0 * (1.0 / rate) / std::sqrt(n));
}

TEST(RngStream, UniformIndexCoversRangeEvenly) {
    RngStream r(5, 11);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto k = r.uniform_index(10);
        ASSERT_LT(k, 10u);
        ++counts[k];
    }
    for (int c : counts) EXPECT_NEAR(c, n / 10, 5.0 * std::sqrt(n * 0.1 * 0.9));
}

TEST(RngStream, KnownFirstValueIsStable) {
    // Pins the seeding scheme: splitmix64 of the stream mixed into the seed.
    std::mt19937_64 ref(splitmix64(42ULL ^ splitmix64(2)));
    RngStream r(42, StreamId::FlowSizes);
    EXPECT_EQ(r.next_u64(), ref());
}
