#include "svcflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "svcflow/errors.hpp"

namespace svcflow {

double f_index(const std::vector<double>& scores, double score_min, double score_max) {
    if (!(score_max > score_min))
        fail(ErrorKind::Validation, "degenerate quality range for the fairness index");
    if (scores.empty()) return 1.0;
    double mean = 0;
    for (double s : scores) {
        if (s < score_min - 1e-12 || s > score_max + 1e-12)
            fail(ErrorKind::Validation, "quality score outside the declared range");
        mean += s;
    }
    mean /= static_cast<double>(scores.size());
    double var = 0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= static_cast<double>(scores.size());  // population variance
    return 1.0 - 2.0 * std::sqrt(var) / (score_max - score_min);
}

void fill_slot_fairness(SlotReport& report, double score_min, double score_max) {
    double mean = 0;
    report.max_gap = 0;
    if (report.clients.empty()) {
        report.quality_variance = 0;
        report.fairness = 1.0;
        return;
    }
    std::vector<double> normalized;
    std::vector<double> served_scores;
    for (const ClientSlotOutcome& c : report.clients) {
        double norm = c.requested_layers > 0
                          ? static_cast<double>(c.delivered_layers) / c.requested_layers
                          : 0.0;
        normalized.push_back(norm);
        mean += norm;
        report.max_gap = std::max(report.max_gap, 1.0 - norm);
        if (c.delivered_layers > 0) served_scores.push_back(c.quality_score);
    }
    mean /= static_cast<double>(normalized.size());
    double var = 0;
    for (double v : normalized) var += (v - mean) * (v - mean);
    report.quality_variance = var / static_cast<double>(normalized.size());
    report.fairness = f_index(served_scores, score_min, score_max);
}

double replay_consistency_error(const std::vector<SlotReport>& slots) {
    std::map<std::string, ClientHistory> replica;
    double worst = 0;
    for (const SlotReport& report : slots) {
        for (size_t i = 0; i < report.clients.size(); ++i) {
            const ClientSlotOutcome& c = report.clients[i];
            ClientHistory& h = replica[c.client];
            double phi = static_cast<double>(h.requests_done + 1);
            if (i < report.phi.size() && report.phi[i] != h.requests_done + 1)
                fail(ErrorKind::Validation, "request ordinal mismatch in replay");

            double expect_num_t = static_cast<double>(h.cum_layers) + c.delivered_layers;
            double got_num_t =
                c.t_norm * static_cast<double>(report.norms.t_max) * phi;
            worst = std::max(worst, std::fabs(expect_num_t - got_num_t));

            int z = h.first_request() ? 0 : std::abs(c.delivered_layers - h.last_layers);
            double expect_num_i = static_cast<double>(h.cum_intensity) + z;
            double got_num_i =
                c.i_norm * static_cast<double>(report.norms.i_max) * phi;
            worst = std::max(worst, std::fabs(expect_num_i - got_num_i));

            int nu = h.first_request() ? 0 : (z > 0 ? 1 : 0);
            double expect_num_n = static_cast<double>(h.cum_switches) + nu;
            double got_num_n =
                c.n_norm * static_cast<double>(report.norms.n_max) * phi;
            worst = std::max(worst, std::fabs(expect_num_n - got_num_n));

            h = update_history(h, c.delivered_layers);
        }
    }
    return worst;
}

QoEReport compile_run_report(const std::vector<SlotReport>& slots,
                             const std::vector<ClientSummary>& client_stats) {
    QoEReport report;
    report.clients = client_stats;

    // Cross-check the per-client averages against an independent replay of
    // the delivery log.
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> replay;  // layers, slots
    std::map<std::string, double> score_sum;
    for (const SlotReport& s : slots) {
        for (const ClientSlotOutcome& c : s.clients) {
            auto& acc = replay[c.client];
            acc.first += c.delivered_layers;
            acc.second += 1;
            score_sum[c.client] += c.quality_score;
        }
        report.fairness_trace.emplace_back(s.slot, s.fairness);
    }
    for (ClientSummary& c : report.clients) {
        auto it = replay.find(c.client);
        if (it == replay.end() || it->second.second == 0) continue;
        c.avg_layers = static_cast<double>(it->second.first) /
                       static_cast<double>(it->second.second);
        c.avg_quality = score_sum[c.client] / static_cast<double>(it->second.second);
    }
    return report;
}

}  // namespace svcflow
