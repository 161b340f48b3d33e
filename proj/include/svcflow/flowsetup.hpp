#pragma once

#include <map>
#include <string>
#include <vector>

#include "svcflow/graph.hpp"
#include "svcflow/rational.hpp"

namespace svcflow {

// One (client, layer) flow laid over the physical graph. Decomposition adds
// virtual edges parallel to physical ones and consumes edges by marking them
// visited; `consumer` records which downstream edge an edge was allocated to.
class RateGraph {
public:
    struct Edge {
        int id = -1;
        int from = -1;
        int to = -1;
        Rational rate_kbps;
        bool visited = false;
        bool is_virtual = false;
        int consumer = kUnassigned;
    };
    static constexpr int kUnassigned = -1;
    static constexpr int kSinkConsumed = -2;

    RateGraph(const NetworkGraph& base, int source, int sink);

    int add_edge(int from, int to, Rational rate, bool visited, bool is_virtual);

    const NetworkGraph& base() const { return *base_; }
    int source() const { return source_; }
    int sink() const { return sink_; }
    const std::vector<Edge>& edges() const { return edges_; }
    Edge& edge(int id) { return edges_.at(size_t(id)); }
    const Edge& edge(int id) const { return edges_.at(size_t(id)); }
    std::vector<int> in_edges(int node) const;   // positive-rate edges only
    std::vector<int> out_edges(int node) const;

    Rational total_rate() const;  // net egress at the source
    // Exact conservation at every transit node; DecompositionError otherwise.
    void check_conservation() const;

private:
    const NetworkGraph* base_;
    int source_;
    int sink_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> in_;
    std::vector<std::vector<int>> out_;
};

// Builds a rate graph from exact per-link rates (fixture/test entry point).
RateGraph make_rate_graph(const NetworkGraph& base,
                          const std::map<int, Rational>& link_rates_kbps, int source,
                          int sink);

// Reconstructs an exactly conserving rational rate graph from a solver's
// floating-point link rates: peels paths, snaps them to a 1 bps grid and
// adjusts the last path so the total equals `target_rate` exactly.
RateGraph make_rate_graph_from_solution(const NetworkGraph& base,
                                        const std::map<int, double>& link_rates_kbps,
                                        int source, int sink, Rational target_rate);

struct TagEntry {
    int tag = 0;
    int server_side_switch = -1;     // head of the server egress edge
    Rational rate_kbps;
    Rational volume_kbits;           // rate * theta
    std::vector<int> path_nodes;     // server ... client-side switch
    std::vector<std::pair<int, int>> path_hops;  // physical (from, to) pairs
};

struct TagPlan {
    std::vector<TagEntry> entries;
    Rational total_rate_kbps;
    double theta_s = 0;
};

struct DecomposeOptions {
    int fanin_cap = 12;   // exact subset search bound per upstream node
    int max_tags = 64;    // ToS tag space per flow
};

// Walks from the client-side switch toward the serving server, matching each
// link's rate against exact combinations of unvisited upstream rates and
// splitting links through virtual edges where no combination exists. The
// final base rates are the server's egress rates, virtual edges included.
TagPlan base_data_rates(RateGraph& graph, int client_side_switch, int server,
                        double theta_s, const DecomposeOptions& options = {});

// Splitting steps, exposed for direct testing. `candidates` holds edge ids of
// unvisited incoming edges of the upstream node.
void update_data_rate_one(RateGraph& graph, int link_edge, std::vector<int> candidates);
void update_data_rate_two(RateGraph& graph, int link_edge, std::vector<int> candidates);

struct FlowRule {
    std::string switch_name;
    int tag = 0;
    std::string match_src;   // serving server
    std::string match_dst;   // client
    std::string forward_to;  // next hop node (or the client itself)
    bool rewrite_source = false;
};

struct ServerDirectiveEntry {
    int tag = 0;
    std::string server_side_switch;
    Rational rate_kbps;
    Rational volume_kbits;
};

struct ServerDirective {
    std::string server;
    std::string client;
    double theta_s = 0;
    std::vector<ServerDirectiveEntry> entries;
};

struct FlowConfig {
    std::vector<FlowRule> rules;
    ServerDirective directive;
};

// Match/forward rules per switch along each tagged path; the client-side
// switch rule additionally rewrites the source back to the default endpoint.
FlowConfig emit_rules(const TagPlan& plan, const RateGraph& graph,
                      const std::string& server_name, const std::string& client_name,
                      int client_node);

// Folds tag paths back onto physical (from, to) pairs; used to verify that
// the decomposition reconstructs the input rates exactly.
std::map<std::pair<int, int>, Rational> fold_tag_rates(const TagPlan& plan);

}  // namespace svcflow
