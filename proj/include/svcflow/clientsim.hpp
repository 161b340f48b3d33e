#pragma once

#include <optional>
#include <string>
#include <vector>

#include "svcflow/slot.hpp"

namespace svcflow {

enum class ClientPhase { WaitingFirstSegment, Playing, Stalled, Done };

const char* client_phase_name(ClientPhase phase);

struct BufferedSegment {
    int segment = 0;
    int layers = 0;
    double arrival_s = 0;
};

struct ClientEvent {
    double time_s = 0;
    std::string kind;  // request | delivery | zero_grant | play_start | stall | resume | done
    int segment = 0;
    int layers = 0;
    double buffer_s = 0;
};

// Deterministic playout model: segments are consumed in order at real time,
// a stall starts whenever the buffer drains before the last segment rendered.
class ClientState {
public:
    ClientState() = default;
    ClientState(const ClientProfile& profile, int total_segments, double segment_duration_s);

    const ClientProfile& profile() const { return profile_; }
    ClientPhase phase() const { return phase_; }
    int stall_count() const { return stall_count_; }
    std::optional<double> startup_delay_s() const { return startup_delay_s_; }
    double first_request_time_s() const { return first_request_s_; }
    const std::vector<ClientEvent>& events() const { return events_; }
    const std::vector<BufferedSegment>& buffer() const { return buffer_; }
    int delivered_segments() const { return static_cast<int>(buffer_.size()); }
    int total_segments() const { return total_segments_; }
    double playhead_s() const { return playhead_s_; }

    // Next segment to ask for, or nothing when the stream is finished or a
    // request is already outstanding.
    std::optional<int> next_request(int slot) const;

    void note_request(int segment, double time_s);
    void note_zero_grant(double time_s);

    // A granted segment lands in the buffer at `time_s` with `layers` layers.
    void deliver(int segment, int layers, double time_s);

    // Advances playout to `now`, recording render start, stalls and Done.
    void advance(double now_s);

    bool request_outstanding() const { return outstanding_; }

private:
    double buffered_media_end_s() const {
        return static_cast<double>(buffer_.size()) * segment_duration_s_;
    }

    ClientProfile profile_;
    int total_segments_ = 0;
    double segment_duration_s_ = 0;
    ClientPhase phase_ = ClientPhase::WaitingFirstSegment;
    std::vector<BufferedSegment> buffer_;
    std::vector<ClientEvent> events_;
    double playhead_s_ = 0;
    double clock_s_ = 0;
    int next_segment_ = 1;
    bool outstanding_ = false;
    int stall_count_ = 0;
    bool stalled_logged_ = false;
    double first_request_s_ = -1;
    std::optional<double> startup_delay_s_;
};

}  // namespace svcflow
