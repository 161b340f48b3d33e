#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svcflow/catalog.hpp"
#include "svcflow/graph.hpp"

namespace svcflow {

struct ClientProfile {
    std::string name;
    int node = -1;           // client node in the topology
    int attach_switch = -1;  // its client-side switch
    std::string video;
    int max_layers = 1;      // highest quality the device supports
    double theta_s = 1.0;    // delivery deadline per request
    int join_slot = 1;       // slot whose optimization first includes this client
    double beta1 = 0.2;      // switch-intensity weight
    double beta2 = 0.2;      // switch-count weight
    double beta3 = 1.0;      // average-quality weight
};

// Per-client accumulators carried across slots.
struct ClientHistory {
    std::int64_t cum_layers = 0;     // total layers delivered so far
    std::int64_t cum_intensity = 0;  // sum of |delta layers| between consecutive slots
    std::int64_t cum_switches = 0;   // number of slots whose grant differed from the previous
    int last_layers = 0;             // grant in the previous slot
    std::int64_t requests_done = 0;  // completed requests (zero-grant slots included)

    bool first_request() const { return requests_done == 0; }
};

// A slot in which the grant differs from the previous one counts as a switch.
// The first-ever grant seeds last_layers and records no switch.
ClientHistory update_history(const ClientHistory& h, int delivered_layers);

struct SlotRequest {
    int id = 0;
    int client_index = 0;  // index into the scenario's profile list
    int segment = 1;
    double arrival_s = 0;
    int attempt = 1;  // >1 when a zero-grant slot re-queued the segment
};

// One client's entry in a slot's optimization input.
struct Demand {
    SlotRequest request;
    ClientProfile profile;
    ClientHistory history;
    std::int64_t phi = 1;  // requests so far including this one
};

struct Normalizers {
    std::int64_t t_max = 1;  // max over clients of cum_layers + max_layers
    std::int64_t i_max = 1;  // max over clients of cum_intensity + max_layers
    std::int64_t n_max = 1;  // max over clients of cum_switches + 1
};

struct SlotInput {
    int slot = 0;
    double tau_s = 0;
    std::vector<Demand> demands;       // ordered by client index
    std::vector<int> servers;          // nodes holding at least one requested layer
    CapacitySnapshot snapshot;
    Normalizers norms;

    bool empty() const { return demands.empty(); }
};

// Batches the requests gathered during slot k-1 into the input optimized at
// the start of slot k. Builds the candidate server set from availability and
// computes the normalizers.
SlotInput gather(int slot, double tau_s, const std::vector<SlotRequest>& requests,
                 const std::vector<ClientProfile>& profiles,
                 const std::vector<ClientHistory>& histories, const Catalog& catalog,
                 const NetworkGraph& graph, const CapacitySnapshot& snapshot);

// Largest deadline that still rules out stalls: segment_duration - tau.
double stall_safe_deadline(double segment_duration_s, double tau_s);

}  // namespace svcflow
