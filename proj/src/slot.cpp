#include "svcflow/slot.hpp"

#include <algorithm>
#include <cstdlib>

#include "svcflow/errors.hpp"

namespace svcflow {

ClientHistory update_history(const ClientHistory& h, int delivered_layers) {
    ClientHistory out = h;
    if (h.first_request()) {
        out.last_layers = delivered_layers;
    } else {
        out.cum_intensity += std::abs(delivered_layers - h.last_layers);
        if (delivered_layers != h.last_layers) out.cum_switches += 1;
        out.last_layers = delivered_layers;
    }
    out.cum_layers += delivered_layers;
    out.requests_done += 1;
    return out;
}

SlotInput gather(int slot, double tau_s, const std::vector<SlotRequest>& requests,
                 const std::vector<ClientProfile>& profiles,
                 const std::vector<ClientHistory>& histories, const Catalog& catalog,
                 const NetworkGraph& graph, const CapacitySnapshot& snapshot) {
    SlotInput input;
    input.slot = slot;
    input.tau_s = tau_s;
    input.snapshot = snapshot;
    if (requests.empty()) return input;

    for (const SlotRequest& r : requests) {
        if (r.client_index < 0 || r.client_index >= static_cast<int>(profiles.size()))
            fail(ErrorKind::UnknownClient,
                 "request for unknown client index " + std::to_string(r.client_index));
        const ClientProfile& p = profiles[size_t(r.client_index)];
        const VideoEntry& v = catalog.video(p.video);
        if (r.segment < 1 || r.segment > v.segments)
            fail(ErrorKind::UnknownSegment,
                 "segment " + std::to_string(r.segment) + " outside catalog for " + p.name);

        Demand d;
        d.request = r;
        d.profile = p;
        d.history = histories.at(size_t(r.client_index));
        d.phi = d.history.requests_done + 1;
        input.demands.push_back(std::move(d));
    }
    std::sort(input.demands.begin(), input.demands.end(),
              [](const Demand& a, const Demand& b) {
                  return a.request.client_index < b.request.client_index;
              });
    for (size_t i = 1; i < input.demands.size(); ++i)
        if (input.demands[i].request.client_index ==
            input.demands[i - 1].request.client_index)
            fail(ErrorKind::Model,
                 "client " + input.demands[i].profile.name + " requested twice in one slot");

    // Candidate servers: every server holding at least one requested layer.
    for (int node : graph.nodes_with_role(NodeRole::Server)) {
        const std::string& name = graph.node(node).name;
        bool holds = false;
        for (const Demand& d : input.demands) {
            for (int l = 1; l <= d.profile.max_layers && !holds; ++l)
                holds = catalog.available(name, d.profile.video, d.request.segment, l);
            if (holds) break;
        }
        if (holds) input.servers.push_back(node);
    }
    std::sort(input.servers.begin(), input.servers.end());

    Normalizers n;
    n.t_max = n.i_max = n.n_max = 0;
    for (const Demand& d : input.demands) {
        n.t_max = std::max(n.t_max, d.history.cum_layers + d.profile.max_layers);
        n.i_max = std::max(n.i_max, d.history.cum_intensity + d.profile.max_layers);
        n.n_max = std::max(n.n_max, d.history.cum_switches + 1);
    }
    if (n.t_max < 1 || n.i_max < 1 || n.n_max < 1)
        fail(ErrorKind::Model, "degenerate normalizers");
    input.norms = n;
    return input;
}

double stall_safe_deadline(double segment_duration_s, double tau_s) {
    if (tau_s >= segment_duration_s)
        fail(ErrorKind::Validation,
             "time slot must be shorter than the segment duration");
    return segment_duration_s - tau_s;
}

}  // namespace svcflow
