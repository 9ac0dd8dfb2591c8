#include "favq/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace favq {

const char* to_string(TcpState state) {
    switch (state) {
        case TcpState::Idle: return "idle";
        case TcpState::SynSent: return "syn-sent";
        case TcpState::SlowStart: return "slow-start";
        case TcpState::CongestionAvoidance: return "congestion-avoidance";
        case TcpState::FastRecovery: return "fast-recovery";
        case TcpState::Done: return "done";
    }
    return "?";
}

TcpSender::TcpSender(Simulator& sim, FlowId flow, std::int64_t data_packets,
                     const TcpConfig& config, Emit emit, Completion on_done)
    : sim_(sim),
      flow_(flow),
      data_packets_(data_packets),
      config_(config),
      emit_(std::move(emit)),
      on_done_(std::move(on_done)) {
    if (data_packets_ < 1) throw std::invalid_argument("TcpSender: flow needs at least one packet");
}

double TcpSender::current_rto() const {
    double base = config_.initial_rto;
    if (have_rtt_) {
        base = std::clamp(srtt_ + 4.0 * rttvar_, config_.min_rto, config_.max_rto);
    }
    return std::min(base * std::pow(config_.backoff_factor, backoff_), config_.max_rto);
}

void TcpSender::start() {
    if (state_ != TcpState::Idle) throw std::logic_error("TcpSender::start: already started");
    start_time_ = sim_.now();
    state_ = TcpState::SynSent;
    snd_nxt_ = 0;
    transmit(0);
    snd_nxt_ = 1;
}

void TcpSender::transmit(std::int64_t seq) {
    const auto idx = static_cast<std::size_t>(seq);
    if (idx >= sent_at_.size()) {
        sent_at_.resize(idx + 1, 0.0);
        transmissions_.resize(idx + 1, 0);
    }
    Packet p;
    p.flow_id = flow_;
    p.seq = seq;
    p.kind = seq == 0 ? PacketKind::Syn : PacketKind::Data;
    p.size_bytes = seq == 0 ? config_.control_bytes : config_.data_bytes;
    p.is_retransmission = seq < max_sent_;
    p.birth_time = sim_.now();

    sent_at_[idx] = sim_.now();
    if (transmissions_[idx] < std::numeric_limits<std::uint16_t>::max()) ++transmissions_[idx];
    ++counters_.packets_sent;
    if (p.is_retransmission) ++counters_.retransmissions;
    max_sent_ = std::max(max_sent_, seq + 1);

    arm_timer_if_idle();
    emit_(std::move(p));
}

void TcpSender::send_available() {
    const std::int64_t last = data_packets_;
    double window = std::floor(cwnd_ + 1e-9);
    if (config_.max_window > 0) window = std::min(window, static_cast<double>(config_.max_window));
    while (snd_nxt_ <= last && static_cast<double>(snd_nxt_ - snd_una_) < window) {
        transmit(snd_nxt_);
        ++snd_nxt_;
    }
}

void TcpSender::arm_timer_if_idle() {
    if (timer_armed_) return;
    timer_ = sim_.schedule_in(current_rto(), EventKind::TimerExpiry, [this] { on_rto_timeout(); },
                              flow_);
    timer_armed_ = true;
}

void TcpSender::cancel_timer() {
    if (!timer_armed_) return;
    sim_.cancel(timer_);
    timer_armed_ = false;
}

void TcpSender::restart_timer() {
    cancel_timer();
    if (snd_una_ < max_sent_) arm_timer_if_idle();
}

void TcpSender::sample_rtt(std::int64_t seq) {
    const auto idx = static_cast<std::size_t>(seq);
    if (idx >= transmissions_.size() || transmissions_[idx] != 1) return;  // Karn
    const double r = sim_.now() - sent_at_[idx];
    if (!have_rtt_) {
        srtt_ = r;
        rttvar_ = r / 2.0;
        have_rtt_ = true;
    } else {
        rttvar_ = 0.75 * rttvar_ + 0.25 * std::abs(srtt_ - r);
        srtt_ = 0.875 * srtt_ + 0.125 * r;
    }
}

void TcpSender::finish() {
    state_ = TcpState::Done;
    completion_time_ = sim_.now();
    cancel_timer();
    if (on_done_) on_done_(*this);
}

void TcpSender::on_ack(const Packet& ack) {
    if (state_ == TcpState::Done || state_ == TcpState::Idle) return;
    const std::int64_t ackno = ack.ack;
    if (ackno > max_sent_) {
        throw std::logic_error("TcpSender::on_ack: flow " + std::to_string(flow_) + " ack " +
                               std::to_string(ackno) + " beyond highest sent " +
                               std::to_string(max_sent_));
    }

    if (state_ == TcpState::SynSent) {
        if (ack.kind != PacketKind::SynAck || ackno < 1) return;
        sample_rtt(0);
        backoff_ = 0;
        snd_una_ = 1;
        snd_nxt_ = std::max<std::int64_t>(snd_nxt_, 1);
        cwnd_ = config_.initial_window;
        state_ = TcpState::SlowStart;
        restart_timer();
        send_available();
        return;
    }

    if (ackno > snd_una_) {
        const std::int64_t newly = ackno - snd_una_;
        sample_rtt(ackno - 1);
        backoff_ = 0;
        snd_una_ = ackno;
        snd_nxt_ = std::max(snd_nxt_, snd_una_);

        if (snd_una_ > data_packets_) {
            finish();
            return;
        }

        if (state_ == TcpState::FastRecovery) {
            if (ackno >= recover_) {
                cwnd_ = ssthresh_;
                dupacks_ = 0;
                state_ = TcpState::CongestionAvoidance;
            } else if (config_.recovery == RecoveryMode::NewReno) {
                transmit(snd_una_);
                cwnd_ = std::max(1.0, cwnd_ - static_cast<double>(newly) + 1.0);
            } else {
                cwnd_ = ssthresh_;
                dupacks_ = 0;
                state_ = TcpState::CongestionAvoidance;
            }
        } else {
            dupacks_ = 0;
            if (cwnd_ < ssthresh_) {
                cwnd_ += 1.0;
            } else {
                cwnd_ += 1.0 / cwnd_;
            }
            state_ = cwnd_ < ssthresh_ ? TcpState::SlowStart : TcpState::CongestionAvoidance;
        }
        restart_timer();
        send_available();
        return;
    }

    if (ackno == snd_una_ && ack.kind == PacketKind::Ack && snd_una_ < max_sent_) {
        ++dupacks_;
        if (state_ == TcpState::FastRecovery) {
            cwnd_ += 1.0;
            send_available();
        } else if (dupacks_ == config_.dupack_threshold && ackno >= recover_) {
            const double flight = static_cast<double>(max_sent_ - snd_una_);
            ssthresh_ = std::max(flight / 2.0, 2.0);
            recover_ = max_sent_;
            ++counters_.fast_retransmits;
            transmit(snd_una_);
            cwnd_ = ssthresh_ + static_cast<double>(config_.dupack_threshold);
            state_ = TcpState::FastRecovery;
            restart_timer();
        }
    }
}

void TcpSender::on_rto_timeout() {
    timer_armed_ = false;
    if (state_ == TcpState::Done || state_ == TcpState::Idle) return;
    ++counters_.rto_count;
    ++backoff_;

    if (state_ == TcpState::SynSent) {
        transmit(0);
        return;
    }

    const double flight = static_cast<double>(max_sent_ - snd_una_);
    ssthresh_ = std::max(flight / 2.0, 2.0);
    cwnd_ = 1.0;
    dupacks_ = 0;
    recover_ = max_sent_;
    state_ = TcpState::SlowStart;
    snd_nxt_ = snd_una_;
    transmit(snd_nxt_);
    ++snd_nxt_;
}

TcpReceiver::TcpReceiver(FlowId flow, const TcpConfig& config, Emit emit)
    : flow_(flow), ack_bytes_(config.control_bytes), emit_(std::move(emit)) {}

void TcpReceiver::on_packet(const Packet& p, SimTime now) {
    ++received_;
    const auto idx = static_cast<std::size_t>(p.seq);
    if (idx >= have_.size()) have_.resize(std::max(idx + 1, have_.size() * 2), false);
    have_[idx] = true;
    while (static_cast<std::size_t>(next_expected_) < have_.size() &&
           have_[static_cast<std::size_t>(next_expected_)]) {
        ++next_expected_;
    }

    Packet ack;
    ack.flow_id = flow_;
    ack.kind = p.kind == PacketKind::Syn ? PacketKind::SynAck : PacketKind::Ack;
    ack.ack = next_expected_;
    ack.seq = next_expected_;
    ack.size_bytes = ack_bytes_;
    ack.birth_time = now;
    emit_(std::move(ack));
}

}  // namespace favq
