#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svcflow/slot.hpp"

namespace svcflow {

// QoE-fairness index over per-client quality scores: 1 - 2*sigma/(hi - lo),
// with the population standard deviation. Scores must lie inside [lo, hi].
double f_index(const std::vector<double>& scores, double score_min, double score_max);

struct ClientSlotOutcome {
    std::string client;
    int requested_layers = 0;  // the client's supported maximum
    int delivered_layers = 0;
    double quality_score = 0;
    double t_norm = 0, i_norm = 0, n_norm = 0;
};

struct SlotReport {
    int slot = 0;
    std::string solver;
    std::vector<ClientSlotOutcome> clients;
    double q_gap = 0;            // largest normalized shortfall
    double quality_variance = 0; // variance of delivered/max over clients
    double max_gap = 0;          // recomputed from the outcomes
    double fairness = 1.0;       // F-index over served clients
    double sent_kbits = 0;
    int rule_count = 0;
    double objective = 0;
    Normalizers norms;
    std::vector<std::int64_t> phi;  // per client row, request ordinal
};

struct ClientSummary {
    std::string client;
    double startup_delay_s = 0;
    int stall_count = 0;
    double avg_layers = 0;
    double avg_quality = 0;
    std::int64_t switch_count = 0;
    std::int64_t switch_intensity = 0;
    int segments_completed = 0;
};

struct QoEReport {
    std::vector<ClientSummary> clients;
    std::vector<std::pair<int, double>> fairness_trace;  // (slot, F)
};

// Fleet-level variance/max-gap of one slot, measured on normalized grants.
// The fairness index runs over clients that received at least one layer, so
// scores stay inside the quality table's range.
void fill_slot_fairness(SlotReport& report, double score_min, double score_max);

// Replays the per-slot accumulator updates from delivery logs and checks the
// solver-reported normalized metrics against them. Returns the largest
// absolute denormalized deviation found.
struct DeliveryRecord {
    int slot = 0;
    std::string client;
    int delivered_layers = 0;
};

double replay_consistency_error(const std::vector<SlotReport>& slots);

QoEReport compile_run_report(const std::vector<SlotReport>& slots,
                             const std::vector<ClientSummary>& client_stats);

}  // namespace svcflow
