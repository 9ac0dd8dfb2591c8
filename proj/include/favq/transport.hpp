#pragma once

// Simplified TCP: three-way handshake (SYN/SYN-ACK), slow start, congestion
// avoidance, fast retransmit on three duplicate ACKs, and RTO recovery with
// exponential backoff. One cumulative ACK per received segment, no SACK, no
// delayed ACKs, unbounded receiver window.

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "favq/queue_disc.hpp"
#include "favq/sim_core.hpp"

namespace favq {

enum class RecoveryMode : std::uint8_t {
    /// A partial ACK ends fast recovery; remaining holes wait for the RTO.
    Reno,
    /// A partial ACK retransmits the next hole and stays in fast recovery.
    NewReno,
};

struct TcpConfig {
    int initial_window = 2;
    double initial_rto = 3.0;
    double min_rto = 1.0;
    double max_rto = 64.0;
    double backoff_factor = 2.0;
    int dupack_threshold = 3;
    RecoveryMode recovery = RecoveryMode::NewReno;
    std::int32_t data_bytes = 1500;
    std::int32_t control_bytes = 40;
    /// Cap on the usable window in packets; 0 leaves it unbounded.
    int max_window = 0;
};

enum class TcpState : std::uint8_t {
    Idle,
    SynSent,
    SlowStart,
    CongestionAvoidance,
    FastRecovery,
    Done,
};

const char* to_string(TcpState state);

struct TcpCounters {
    std::int64_t packets_sent = 0;
    std::int64_t retransmissions = 0;
    std::int64_t rto_count = 0;
    std::int64_t fast_retransmits = 0;
};

/// Data size used for flows that never end.
inline constexpr std::int64_t kUnboundedFlow = std::numeric_limits<std::int64_t>::max() / 4;

/// Sending half of one connection. Segments are numbered 0 (SYN) .. data_packets.
class TcpSender {
public:
    using Emit = std::function<void(Packet)>;
    using Completion = std::function<void(const TcpSender&)>;

    TcpSender(Simulator& sim, FlowId flow, std::int64_t data_packets, const TcpConfig& config,
              Emit emit, Completion on_done = {});
    TcpSender(const TcpSender&) = delete;
    TcpSender& operator=(const TcpSender&) = delete;

    /// Emits the SYN and arms the retransmission timer.
    void start();
    /// Handles a SYN-ACK or ACK. Throws std::logic_error when the ACK covers
    /// a segment that was never sent.
    void on_ack(const Packet& ack);
    /// Timer callback; public so tests can drive it directly.
    void on_rto_timeout();

    FlowId flow() const { return flow_; }
    TcpState state() const { return state_; }
    bool done() const { return state_ == TcpState::Done; }
    std::int64_t data_packets() const { return data_packets_; }
    double cwnd() const { return cwnd_; }
    double ssthresh() const { return ssthresh_; }
    /// Lowest unacknowledged segment.
    std::int64_t snd_una() const { return snd_una_; }
    std::int64_t max_sent() const { return max_sent_; }
    int dupacks() const { return dupacks_; }
    double srtt() const { return srtt_; }
    double rttvar() const { return rttvar_; }
    /// Timeout that the next armed timer will use.
    double current_rto() const;
    const TcpCounters& counters() const { return counters_; }
    SimTime start_time() const { return start_time_; }
    SimTime completion_time() const { return completion_time_; }

private:
    void transmit(std::int64_t seq);
    void send_available();
    void arm_timer_if_idle();
    void restart_timer();
    void cancel_timer();
    void sample_rtt(std::int64_t seq);
    void finish();

    Simulator& sim_;
    FlowId flow_;
    std::int64_t data_packets_;
    TcpConfig config_;
    Emit emit_;
    Completion on_done_;

    TcpState state_ = TcpState::Idle;
    double cwnd_ = 1.0;
    double ssthresh_ = std::numeric_limits<double>::infinity();
    std::int64_t snd_una_ = 0;
    std::int64_t snd_nxt_ = 0;
    std::int64_t max_sent_ = 0;
    std::int64_t recover_ = 0;
    int dupacks_ = 0;

    bool have_rtt_ = false;
    double srtt_ = 0.0;
    double rttvar_ = 0.0;
    int backoff_ = 0;
    EventHandle timer_{};
    bool timer_armed_ = false;

    // Per segment: last send time and number of transmissions.
    std::vector<SimTime> sent_at_;
    std::vector<std::uint16_t> transmissions_;

    TcpCounters counters_;
    SimTime start_time_ = 0.0;
    SimTime completion_time_ = -1.0;
};

/// Receiving half: answers a SYN with a SYN-ACK and every data segment with
/// a cumulative ACK. Out-of-order segments are buffered so the application
/// sees data strictly in sequence.
class TcpReceiver {
public:
    using Emit = std::function<void(Packet)>;

    TcpReceiver(FlowId flow, const TcpConfig& config, Emit emit);

    void on_packet(const Packet& p, SimTime now);

    /// Next segment the application expects; all lower ones were delivered.
    std::int64_t next_expected() const { return next_expected_; }
    std::int64_t delivered() const { return next_expected_ > 0 ? next_expected_ - 1 : 0; }
    std::int64_t segments_received() const { return received_; }

private:
    FlowId flow_;
    std::int32_t ack_bytes_;
    Emit emit_;
    std::int64_t next_expected_ = 0;
    std::int64_t received_ = 0;
    std::vector<bool> have_;
};

}  // namespace favq
