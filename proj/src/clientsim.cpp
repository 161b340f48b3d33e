#include "svcflow/clientsim.hpp"

#include <algorithm>
#include <cmath>

#include "svcflow/errors.hpp"

namespace svcflow {

const char* client_phase_name(ClientPhase phase) {
    switch (phase) {
        case ClientPhase::WaitingFirstSegment: return "waiting";
        case ClientPhase::Playing: return "playing";
        case ClientPhase::Stalled: return "stalled";
        case ClientPhase::Done: return "done";
    }
    return "?";
}

ClientState::ClientState(const ClientProfile& profile, int total_segments,
                         double segment_duration_s)
    : profile_(profile),
      total_segments_(total_segments),
      segment_duration_s_(segment_duration_s) {}

std::optional<int> ClientState::next_request(int slot) const {
    if (slot < profile_.join_slot) return std::nullopt;
    if (outstanding_) return std::nullopt;
    if (next_segment_ > total_segments_) return std::nullopt;
    return next_segment_;
}

void ClientState::note_request(int segment, double time_s) {
    outstanding_ = true;
    if (first_request_s_ < 0) first_request_s_ = time_s;
    events_.push_back({time_s, "request", segment, 0, buffered_media_end_s() - playhead_s_});
}

void ClientState::note_zero_grant(double time_s) {
    outstanding_ = false;  // same segment will be asked for again next slot
    events_.push_back(
        {time_s, "zero_grant", next_segment_, 0, buffered_media_end_s() - playhead_s_});
}

void ClientState::deliver(int segment, int layers, double time_s) {
    if (segment != next_segment_)
        fail(ErrorKind::Internal, "segments must be delivered in order");
    if (layers < 1 || layers > profile_.max_layers)
        fail(ErrorKind::Internal, "delivered layer count out of range");
    advance(time_s);
    buffer_.push_back({segment, layers, time_s});
    next_segment_ += 1;
    outstanding_ = false;
    if (phase_ == ClientPhase::WaitingFirstSegment) {
        phase_ = ClientPhase::Playing;
        startup_delay_s_ = time_s - first_request_s_;
        events_.push_back(
            {time_s, "play_start", segment, layers, buffered_media_end_s() - playhead_s_});
    } else if (phase_ == ClientPhase::Stalled) {
        phase_ = ClientPhase::Playing;
        stalled_logged_ = false;
        events_.push_back(
            {time_s, "resume", segment, layers, buffered_media_end_s() - playhead_s_});
    }
    events_.push_back(
        {time_s, "delivery", segment, layers, buffered_media_end_s() - playhead_s_});
}

void ClientState::advance(double now_s) {
    if (now_s < clock_s_ - 1e-9)
        fail(ErrorKind::Internal, "simulation clock moved backwards");
    if (phase_ != ClientPhase::Playing) {
        clock_s_ = std::max(clock_s_, now_s);
        return;
    }
    double media_end = buffered_media_end_s();
    double runway = media_end - playhead_s_;
    double dt = now_s - clock_s_;
    bool all_delivered = static_cast<int>(buffer_.size()) == total_segments_;

    if (dt < runway - 1e-12) {
        playhead_s_ += dt;
        clock_s_ = now_s;
        return;
    }
    // The buffer drains somewhere inside this interval.
    double drain_time = clock_s_ + runway;
    playhead_s_ = media_end;
    clock_s_ = now_s;
    if (all_delivered) {
        phase_ = ClientPhase::Done;
        events_.push_back({drain_time, "done", total_segments_, 0, 0.0});
    } else if (dt > runway + 1e-12) {
        // Time moved past the drain point with segments still missing.
        phase_ = ClientPhase::Stalled;
        if (!stalled_logged_) {
            ++stall_count_;
            stalled_logged_ = true;
            events_.push_back({drain_time, "stall", next_segment_, 0, 0.0});
        }
    }
}

}  // namespace svcflow
