#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svcflow/catalog.hpp"
#include "svcflow/graph.hpp"
#include "svcflow/lpmodel.hpp"
#include "svcflow/slot.hpp"

namespace svcflow {

struct OptimizerWeights {
    double alpha = 1.0;
    double epsilon = 0.1;
    // Per-client beta weights ride along in each Demand's profile.
};

// Link rates inside the models are expressed in Mbps, and the objective's
// traffic term in units of 22 Mbps so the default weights trade one
// normalized QoE step against a few megabits of extra traffic.
constexpr double kModelRateUnitKbps = 1000.0;
constexpr double kTrafficObjectiveUnitKbps = 22000.0;

// Index bundle for one slot's server-selection model. `prog` holds the rows;
// the maps locate decision variables for extraction and testing.
struct MilpModel {
    LinearProgram prog;
    const NetworkGraph* graph = nullptr;
    std::vector<std::pair<int, int>> pairs;         // (demand index, layer)
    std::vector<std::vector<int>> omega;            // [pair][server pos] -> var
    std::vector<std::vector<int>> t_var;            // [pair][link id] -> var
    std::vector<int> z_var, nu_var, t_qual, i_qual, n_qual;  // per demand
    int q_var = -1;
    std::vector<int> servers;                        // node ids, sorted
    std::vector<Demand> demands;
    Normalizers norms;
    double alpha = 1, epsilon = 0.1;
    int variable_count = 0;
    std::vector<double> layer_size_kbits;            // per pair
    int pair_index(int demand, int layer) const;
};

MilpModel build_milp(const SlotInput& input, const NetworkGraph& graph,
                     const Catalog& catalog, const OptimizerWeights& weights);

struct SolverStats {
    double wall_ms = 0;
    std::int64_t lp_iterations = 0;
    std::int64_t nodes = 0;
    std::vector<std::pair<std::int64_t, double>> incumbent_trace;  // (node, objective)
};

struct MilpSolution {
    SolveStatus status = SolveStatus::Optimal;
    bool timed_out = false;
    double objective = 0;
    std::vector<int> served_layers;                 // per demand
    std::vector<std::vector<int>> layer_server;     // [demand][layer-1] -> node or -1
    // Per (demand, layer): link id -> rate in kbps on the real graph.
    std::vector<std::map<int, double>> layer_rates_kbps;  // indexed like pairs
    std::vector<int> nu;                            // per demand, recomputed from grants
    std::vector<double> t_norm, i_norm, n_norm;     // recomputed normalized metrics
    double q_gap = 0;                               // recomputed max normalized gap
    SolverStats stats;
};

struct MilpOptions {
    std::int64_t node_limit = 200000;
    double time_budget_s = 0;  // 0 = unlimited
    SimplexOptions lp;
};

// Best-bound branch and bound over the server-selection binaries with LP
// relaxation bounding. The oscillation flags are resolved exactly at
// integral nodes instead of being branched (they couple to nothing except
// their own penalty row).
MilpSolution solve_milp(const MilpModel& model, const MilpOptions& options = {});

// Continuous relaxation: one virtual server sources each client's aggregate
// flow and a fractional quality variable replaces the binary selections.
struct LpRelaxModel {
    LinearProgram prog;
    const NetworkGraph* graph = nullptr;  // augmented graph
    int source_node = -1;                 // the virtual server
    std::vector<int> chi_var;
    std::vector<std::vector<int>> t_var;  // [demand][link id] -> var
    std::vector<int> z_var, nu_var, t_qual, i_qual, n_qual;
    int q_var = -1;
    std::vector<Demand> demands;
    Normalizers norms;
    std::vector<int> servers;  // real servers reachable from the source
    double alpha = 1, epsilon = 0.1;
    std::vector<double> avg_layer_kbits;  // per demand
};

// `source_override` substitutes a real server for the virtual one (testing
// hook); by default the graph must contain a virtual server.
LpRelaxModel build_lp(const SlotInput& input, const NetworkGraph& augmented_graph,
                      const Catalog& catalog, const OptimizerWeights& weights,
                      int source_override = -1);

struct LpSolution {
    SolveStatus status = SolveStatus::Optimal;
    double objective = 0;
    std::vector<double> chi;                        // per demand
    std::vector<std::map<int, double>> client_rates_kbps;  // [demand] link->kbps
    std::vector<double> nu, t_norm, i_norm, n_norm;  // raw relaxation values
    double q_gap = 0;
    SolverStats stats;
};

LpSolution solve_lp(const LpRelaxModel& model, const SimplexOptions& options = {});

// Floor the fractional qualities and rebuild per-layer flows from the
// aggregate ones. Rates are scaled so delivered bits match the selected
// layers exactly; when non-uniform layer sizes push a link past capacity the
// rates are capped and the delivery window stretches instead.
struct LayerFlow {
    int server_node = -1;
    std::map<int, double> rates_kbps;  // real-graph link id -> kbps
};

struct IntegerizedPlan {
    std::vector<int> served_layers;                // per demand
    std::vector<std::vector<LayerFlow>> layers;    // [demand][layer-1]
    double stretch = 1.0;                          // delivery time multiplier
};

IntegerizedPlan integerize(const LpSolution& solution, const LpRelaxModel& model,
                           const SlotInput& input, const Catalog& catalog);

}  // namespace svcflow
