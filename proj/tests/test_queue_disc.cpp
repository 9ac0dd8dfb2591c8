#include <gtest/gtest.h>

#include <map>
#include <sstream>
#include <vector>

#include "favq/queue_disc.hpp"
#include "reference_queue.hpp"

using namespace favq;
using favq::testing::compare_exhaustive;

namespace {

Packet pkt(FlowId flow, std::int64_t seq) {
    Packet p;
    p.flow_id = flow;
    p.seq = seq;
    return p;
}

QueueState make(std::size_t cap) {
    QueueState q;
    q.capacity = cap;
    return q;
}

}  // namespace

TEST(DropTail, DropsWhenFull) {
    auto q = make(2);
    EXPECT_EQ(enqueue_droptail(q, pkt(1, 0)).result, EnqueueResult::Enqueued);
    EXPECT_EQ(enqueue_droptail(q, pkt(2, 0)).result, EnqueueResult::Enqueued);
    const auto out = enqueue_droptail(q, pkt(3, 0));
    EXPECT_EQ(out.result, EnqueueResult::Dropped);
    ASSERT_TRUE(out.victim);
    EXPECT_EQ(out.victim->flow_id, 3u);
    EXPECT_EQ(dequeue(q)->flow_id, 1u);
    EXPECT_EQ(dequeue(q)->flow_id, 2u);
    EXPECT_FALSE(dequeue(q));
}

TEST(FavourQueue, FirstPacketOfFlowIsFavoured) {
    auto q = make(8);
    EXPECT_TRUE(enqueue_favourqueue(q, pkt(1, 0), true).favoured);
    EXPECT_FALSE(enqueue_favourqueue(q, pkt(1, 1), true).favoured);
    EXPECT_TRUE(enqueue_favourqueue(q, pkt(2, 0), true).favoured);
    // Flow 2's favoured packet overtakes flow 1's standard one.
    EXPECT_EQ(dequeue(q)->flow_id, 1u);
    EXPECT_EQ(dequeue(q)->flow_id, 2u);
    auto last = dequeue(q);
    EXPECT_EQ(last->flow_id, 1u);
    EXPECT_EQ(last->seq, 1);
    // Once the queue holds nothing of flow 1, it is favoured again.
    EXPECT_TRUE(enqueue_favourqueue(q, pkt(1, 2), true).favoured);
}

TEST(FavourQueue, PushOutEvictsTailStandardPacket) {
    auto q = make(3);
    enqueue_favourqueue(q, pkt(1, 0), true);
    enqueue_favourqueue(q, pkt(1, 1), true);
    enqueue_favourqueue(q, pkt(1, 2), true);
    const auto out = enqueue_favourqueue(q, pkt(2, 0), true);
    EXPECT_EQ(out.result, EnqueueResult::PushedOut);
    ASSERT_TRUE(out.victim);
    EXPECT_EQ(out.victim->flow_id, 1u);
    EXPECT_EQ(out.victim->seq, 2);
    EXPECT_EQ(q.favoured_boundary, 2u);
    EXPECT_TRUE(check_invariants(q));
}

TEST(FavourQueue, NoPushOutDropsFavouredArrivalWhenFull) {
    auto q = make(2);
    enqueue_favourqueue(q, pkt(1, 0), false);
    enqueue_favourqueue(q, pkt(1, 1), false);
    const auto out = enqueue_favourqueue(q, pkt(2, 0), false);
    EXPECT_EQ(out.result, EnqueueResult::Dropped);
    EXPECT_TRUE(out.favoured);
    EXPECT_EQ(out.victim->flow_id, 2u);
}

TEST(FavourQueue, FullOfFavouredDropsEvenWithPushOut) {
    auto q = make(2);
    enqueue_favourqueue(q, pkt(1, 0), true);
    enqueue_favourqueue(q, pkt(2, 0), true);
    const auto out = enqueue_favourqueue(q, pkt(3, 0), true);
    EXPECT_EQ(out.result, EnqueueResult::Dropped);
    EXPECT_TRUE(out.favoured);
}

TEST(FavourQueue, StandardArrivalIntoFullQueueIsDropped) {
    auto q = make(2);
    enqueue_favourqueue(q, pkt(1, 0), true);
    enqueue_favourqueue(q, pkt(2, 0), true);
    const auto out = enqueue_favourqueue(q, pkt(1, 1), true);
    EXPECT_EQ(out.result, EnqueueResult::Dropped);
    EXPECT_FALSE(out.favoured);
}

TEST(FavourQueue, ExhaustiveOracleWithPushOut) {
    for (std::size_t cap : {1u, 2u, 3u, 8u}) {
        for (int len = 1; len <= 8; ++len) {
            EXPECT_EQ(compare_exhaustive(len, 3, cap, true), 0u) << "cap " << cap << " len " << len;
        }
    }
}

TEST(FavourQueue, ExhaustiveOracleWithoutPushOut) {
    for (std::size_t cap : {1u, 2u, 3u, 8u}) {
        for (int len = 1; len <= 8; ++len) {
            EXPECT_EQ(compare_exhaustive(len, 3, cap, false), 0u) << "cap " << cap << " len " << len;
        }
    }
}

TEST(FavourQueue, SingleFlowBehavesLikeDropTail) {
    RngStream rng(9, 1);
    for (bool push_out : {false, true}) {
        auto fq = make(8);
        auto dt = make(8);
        std::int64_t seq = 0;
        for (int i = 0; i < 20000; ++i) {
            if (rng.uniform() < 0.55) {
                const auto a = enqueue_favourqueue(fq, pkt(4, seq), push_out);
                const auto b = enqueue_droptail(dt, pkt(4, seq));
                ++seq;
                ASSERT_EQ(a.result, b.result);
                ASSERT_NE(a.result, EnqueueResult::PushedOut);
            } else {
                const auto a = dequeue(fq);
                const auto b = dequeue(dt);
                ASSERT_EQ(a.has_value(), b.has_value());
                if (a) ASSERT_EQ(a->seq, b->seq);
            }
        }
    }
}

TEST(FavourQueue, NoIntraFlowReordering) {
    RngStream rng(17, 2);
    for (bool push_out : {false, true}) {
        auto q = make(8);
        std::map<FlowId, std::int64_t> next_seq, last_out;
        for (int i = 0; i < 100000; ++i) {
            if (rng.uniform() < 0.6) {
                const auto f = static_cast<FlowId>(rng.uniform_index(5));
                enqueue_favourqueue(q, pkt(f, next_seq[f]++), push_out);
            } else if (auto p = dequeue(q)) {
                auto it = last_out.find(p->flow_id);
                if (it != last_out.end()) ASSERT_GT(p->seq, it->second);
                last_out[p->flow_id] = p->seq;
            }
            ASSERT_TRUE(check_invariants(q));
        }
    }
}

TEST(QueueDisc, TraceReportsPushOutBeforeEnqueue) {
    QueueDisc disc(QueueVariant::FavourQueuePushOut, 2);
    std::vector<std::pair<QueueOp, FlowId>> ops;
    disc.set_trace([&](const QueueTraceRecord& r) { ops.emplace_back(r.op, r.packet->flow_id); });
    disc.enqueue(pkt(1, 0), 0.0);
    disc.enqueue(pkt(1, 1), 0.1);
    disc.enqueue(pkt(2, 0), 0.2);
    disc.dequeue(0.3);
    const std::vector<std::pair<QueueOp, FlowId>> want = {{QueueOp::Enqueue, 1},
                                                          {QueueOp::Enqueue, 1},
                                                          {QueueOp::PushOut, 1},
                                                          {QueueOp::Enqueue, 2},
                                                          {QueueOp::Dequeue, 1}};
    EXPECT_EQ(ops, want);
}

TEST(QueueDisc, EnqueueStampsTime) {
    QueueDisc disc(QueueVariant::DropTail, 4);
    disc.enqueue(pkt(1, 0), 2.5);
    EXPECT_EQ(disc.dequeue(3.0)->enqueue_time, 2.5);
}

TEST(QueueDisc, TextTraceFormat) {
    std::ostringstream out;
    QueueDisc disc(QueueVariant::FavourQueuePushOut, 4);
    disc.set_trace(make_text_trace(out));
    disc.enqueue(pkt(3, 0), 1.5);
    EXPECT_EQ(out.str(), "1.5 enq 3 0 1 1\n");
}

TEST(QueueVariantNames, RoundTrip) {
    for (auto v : {QueueVariant::DropTail, QueueVariant::FavourQueueNoPushOut,
                   QueueVariant::FavourQueuePushOut}) {
        EXPECT_EQ(parse_variant(variant_name(v)), v);
    }
    EXPECT_FALSE(parse_variant("red"));
}
