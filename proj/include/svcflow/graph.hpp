#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svcflow/rational.hpp"

namespace svcflow {

enum class NodeRole { Switch, Client, Server, VirtualServer };

const char* node_role_name(NodeRole role);

struct Node {
    int id = -1;
    std::string name;
    NodeRole role = NodeRole::Switch;
};

// Directed link i -> j. An undirected physical cable is declared as two
// directed links. Unbounded capacity is a flag, not a large number, so
// constraint builders can skip emitting capacity rows for those links.
struct Link {
    int id = -1;
    int from = -1;
    int to = -1;
    Rational capacity_kbps;  // meaningful only when !unbounded
    bool unbounded = false;
};

// Per-link available bandwidth at one instant (static capacity minus
// in-flight transmissions that outlast their slot).
struct CapacitySnapshot {
    std::vector<Rational> available_kbps;  // parallel to NetworkGraph::links()
    std::vector<bool> unbounded;
};

// Physical topology G = {V, E}. Immutable after construction; all operations
// returning graphs produce new values.
class NetworkGraph {
public:
    NetworkGraph() = default;
    NetworkGraph(std::vector<Node> nodes, std::vector<Link> links);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const Node& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }
    const Link& link(int id) const { return links_.at(static_cast<size_t>(id)); }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int link_count() const { return static_cast<int>(links_.size()); }

    int node_index(const std::string& name) const;          // NotFound on miss
    std::optional<int> find_node(const std::string& name) const;
    std::optional<int> find_link(int from, int to) const;

    const std::vector<int>& out_links(int node) const { return out_.at(static_cast<size_t>(node)); }
    const std::vector<int>& in_links(int node) const { return in_.at(static_cast<size_t>(node)); }

    std::vector<int> nodes_with_role(NodeRole role) const;
    bool has_virtual_server() const;
    int virtual_server() const;  // NotFound when none

    // The unique switch a client hangs off (its client-side switch).
    int attach_switch(int client_node) const;

    // Max-min (widest path) capacity between two nodes; unbounded links are
    // treated as infinitely wide. Returns nullopt when unreachable, and a
    // nullopt capacity when the whole path is unbounded.
    struct PathCapacity {
        bool reachable = false;
        bool unbounded = false;
        Rational bottleneck_kbps;
    };
    PathCapacity widest_path(int from, int to) const;

private:
    void build_indices();
    void validate() const;

    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<std::vector<int>> out_;
    std::vector<std::vector<int>> in_;
    std::map<std::string, int> by_name_;
    std::map<int, int> client_attach_;
};

// Parses and validates a JSON topology document:
//   {"nodes": [{"name": "...", "role": "switch|client|server"}],
//    "links": [{"from": "...", "to": "...", "kbps": 8000 | "unbounded"}]}
// Unknown keys are rejected.
NetworkGraph load_topology(const std::string& json_text);
NetworkGraph load_topology_file(const std::string& path);

// Static capacity minus per-link in-flight usage. Throws ValidationError when
// any residual exceeds the link capacity.
CapacitySnapshot snapshot_bandwidth(const NetworkGraph& graph,
                                    const std::map<int, Rational>& in_flight_kbps);

// Adds one VirtualServer node with an unbounded directed link to each listed
// real server. The input graph is untouched; augmenting twice is rejected.
NetworkGraph augment_virtual_server(const NetworkGraph& graph,
                                    const std::vector<int>& servers);

}  // namespace svcflow
