#include "svcflow/graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace svcflow {

using nlohmann::json;

const char* node_role_name(NodeRole role) {
    switch (role) {
        case NodeRole::Switch: return "switch";
        case NodeRole::Client: return "client";
        case NodeRole::Server: return "server";
        case NodeRole::VirtualServer: return "virtual-server";
    }
    return "?";
}

NetworkGraph::NetworkGraph(std::vector<Node> nodes, std::vector<Link> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
    build_indices();
    validate();
}

void NetworkGraph::build_indices() {
    out_.assign(nodes_.size(), {});
    in_.assign(nodes_.size(), {});
    by_name_.clear();
    for (size_t i = 0; i < nodes_.size(); ++i) {
        nodes_[i].id = static_cast<int>(i);
        if (!by_name_.emplace(nodes_[i].name, static_cast<int>(i)).second)
            fail(ErrorKind::Validation, "duplicate node name: " + nodes_[i].name);
    }
    std::set<std::pair<int, int>> seen;
    for (size_t i = 0; i < links_.size(); ++i) {
        Link& l = links_[i];
        l.id = static_cast<int>(i);
        if (l.from < 0 || l.from >= node_count() || l.to < 0 || l.to >= node_count())
            fail(ErrorKind::Validation, "link endpoint out of range");
        if (!seen.emplace(l.from, l.to).second)
            fail(ErrorKind::Validation, "duplicate link " + nodes_[size_t(l.from)].name +
                                            " -> " + nodes_[size_t(l.to)].name);
        out_[size_t(l.from)].push_back(l.id);
        in_[size_t(l.to)].push_back(l.id);
    }
}

void NetworkGraph::validate() const {
    if (nodes_.empty()) fail(ErrorKind::Validation, "topology has no nodes");
    int virtuals = 0;
    for (const Link& l : links_) {
        if (l.from == l.to)
            fail(ErrorKind::Validation, "self-loop at " + nodes_[size_t(l.from)].name);
        if (!l.unbounded && l.capacity_kbps.is_negative())
            fail(ErrorKind::Validation, "negative capacity on " + nodes_[size_t(l.from)].name +
                                            " -> " + nodes_[size_t(l.to)].name);
    }
    for (const Node& n : nodes_) {
        if (n.role == NodeRole::VirtualServer) ++virtuals;
        if (n.role != NodeRole::Client) continue;
        std::set<int> switches;
        for (int lid : out_[size_t(n.id)]) {
            int peer = links_[size_t(lid)].to;
            if (nodes_[size_t(peer)].role == NodeRole::Switch) switches.insert(peer);
        }
        for (int lid : in_[size_t(n.id)]) {
            int peer = links_[size_t(lid)].from;
            if (nodes_[size_t(peer)].role == NodeRole::Switch) switches.insert(peer);
        }
        if (switches.size() != 1)
            fail(ErrorKind::Validation,
                 "client " + n.name + " must attach to exactly one switch, has " +
                     std::to_string(switches.size()));
        const_cast<NetworkGraph*>(this)->client_attach_[n.id] = *switches.begin();
    }
    if (virtuals > 1) fail(ErrorKind::Validation, "more than one virtual server");
}

int NetworkGraph::node_index(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) fail(ErrorKind::NotFound, "unknown node: " + name);
    return it->second;
}

std::optional<int> NetworkGraph::find_node(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> NetworkGraph::find_link(int from, int to) const {
    for (int lid : out_.at(size_t(from)))
        if (links_[size_t(lid)].to == to) return lid;
    return std::nullopt;
}

std::vector<int> NetworkGraph::nodes_with_role(NodeRole role) const {
    std::vector<int> out;
    for (const Node& n : nodes_)
        if (n.role == role) out.push_back(n.id);
    return out;
}

bool NetworkGraph::has_virtual_server() const {
    return !nodes_with_role(NodeRole::VirtualServer).empty();
}

int NetworkGraph::virtual_server() const {
    auto v = nodes_with_role(NodeRole::VirtualServer);
    if (v.empty()) fail(ErrorKind::NotFound, "graph has no virtual server");
    return v.front();
}

int NetworkGraph::attach_switch(int client_node) const {
    auto it = client_attach_.find(client_node);
    if (it == client_attach_.end())
        fail(ErrorKind::NotFound, "node is not an attached client");
    return it->second;
}

NetworkGraph::PathCapacity NetworkGraph::widest_path(int from, int to) const {
    // Widest-path relaxation; unbounded links never narrow the bottleneck.
    struct Width {
        bool reached = false;
        bool unbounded = false;
        Rational cap;
        bool wider_than(const Width& o) const {
            if (!o.reached) return reached;
            if (unbounded != o.unbounded) return unbounded;
            if (unbounded) return false;
            return cap > o.cap;
        }
    };
    std::vector<Width> best(nodes_.size());
    best[size_t(from)] = {true, true, Rational()};
    for (int pass = 0; pass < node_count(); ++pass) {
        bool changed = false;
        for (const Link& l : links_) {
            const Width& src = best[size_t(l.from)];
            if (!src.reached) continue;
            Width cand = src;
            if (!l.unbounded) {
                if (cand.unbounded || l.capacity_kbps < cand.cap) {
                    cand.unbounded = false;
                    cand.cap = l.capacity_kbps;
                }
            }
            if (cand.wider_than(best[size_t(l.to)])) {
                best[size_t(l.to)] = cand;
                changed = true;
            }
        }
        if (!changed) break;
    }
    PathCapacity result;
    const Width& w = best[size_t(to)];
    result.reachable = w.reached;
    result.unbounded = w.unbounded;
    if (w.reached && !w.unbounded) result.bottleneck_kbps = w.cap;
    return result;
}

namespace {

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            fail(ErrorKind::Validation,
                 std::string("unknown key '") + it.key() + "' in " + where);
    }
}

NodeRole parse_role(const std::string& s) {
    if (s == "switch") return NodeRole::Switch;
    if (s == "client") return NodeRole::Client;
    if (s == "server") return NodeRole::Server;
    fail(ErrorKind::Validation, "unknown node role: " + s);
}

}  // namespace

NetworkGraph load_topology(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorKind::Parse, std::string("topology parse error: ") + e.what());
    }
    if (!doc.is_object()) fail(ErrorKind::Parse, "topology document must be an object");
    require_keys(doc, {"nodes", "links"}, "topology");
    if (!doc.contains("nodes") || !doc["nodes"].is_array())
        fail(ErrorKind::Parse, "topology needs a 'nodes' array");

    std::vector<Node> nodes;
    for (const json& jn : doc["nodes"]) {
        require_keys(jn, {"name", "role"}, "node");
        if (!jn.contains("name") || !jn.contains("role"))
            fail(ErrorKind::Parse, "node entries need 'name' and 'role'");
        Node n;
        n.name = jn["name"].get<std::string>();
        n.role = parse_role(jn["role"].get<std::string>());
        nodes.push_back(std::move(n));
    }
    if (nodes.empty()) fail(ErrorKind::Validation, "topology has no nodes");

    std::map<std::string, int> name_to_id;
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (!name_to_id.emplace(nodes[i].name, static_cast<int>(i)).second)
            fail(ErrorKind::Validation, "duplicate node name: " + nodes[i].name);
    }

    std::vector<Link> links;
    if (doc.contains("links")) {
        for (const json& jl : doc["links"]) {
            require_keys(jl, {"from", "to", "kbps"}, "link");
            if (!jl.contains("from") || !jl.contains("to") || !jl.contains("kbps"))
                fail(ErrorKind::Parse, "link entries need 'from', 'to', 'kbps'");
            Link l;
            auto from = name_to_id.find(jl["from"].get<std::string>());
            auto to = name_to_id.find(jl["to"].get<std::string>());
            if (from == name_to_id.end() || to == name_to_id.end())
                fail(ErrorKind::Validation, "link references undefined node");
            l.from = from->second;
            l.to = to->second;
            if (jl["kbps"].is_string()) {
                if (jl["kbps"].get<std::string>() != "unbounded")
                    fail(ErrorKind::Parse, "link kbps must be a number or \"unbounded\"");
                l.unbounded = true;
            } else if (jl["kbps"].is_number()) {
                double v = jl["kbps"].get<double>();
                if (v < 0) fail(ErrorKind::Validation, "negative link capacity");
                l.capacity_kbps = Rational::from_kbps(v);
            } else {
                fail(ErrorKind::Parse, "link kbps must be a number or \"unbounded\"");
            }
            links.push_back(std::move(l));
        }
    }
    return NetworkGraph(std::move(nodes), std::move(links));
}

NetworkGraph load_topology_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::NotFound, "cannot open topology file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_topology(ss.str());
}

CapacitySnapshot snapshot_bandwidth(const NetworkGraph& graph,
                                    const std::map<int, Rational>& in_flight_kbps) {
    CapacitySnapshot snap;
    snap.available_kbps.resize(graph.links().size());
    snap.unbounded.resize(graph.links().size(), false);
    for (const Link& l : graph.links()) {
        auto it = in_flight_kbps.find(l.id);
        Rational used = (it == in_flight_kbps.end()) ? Rational() : it->second;
        if (used.is_negative())
            fail(ErrorKind::Validation, "negative in-flight usage");
        if (l.unbounded) {
            snap.unbounded[size_t(l.id)] = true;
            continue;
        }
        if (used > l.capacity_kbps)
            fail(ErrorKind::Validation,
                 "in-flight usage " + used.str() + " exceeds capacity " +
                     l.capacity_kbps.str() + " on link " + graph.node(l.from).name + " -> " +
                     graph.node(l.to).name);
        snap.available_kbps[size_t(l.id)] = l.capacity_kbps - used;
    }
    return snap;
}

NetworkGraph augment_virtual_server(const NetworkGraph& graph,
                                    const std::vector<int>& servers) {
    if (servers.empty())
        fail(ErrorKind::Validation, "virtual server needs at least one real server");
    if (graph.has_virtual_server())
        fail(ErrorKind::Validation, "graph already contains a virtual server");
    for (int s : servers)
        if (graph.node(s).role != NodeRole::Server)
            fail(ErrorKind::Validation,
                 "virtual server target " + graph.node(s).name + " is not a server");

    std::vector<Node> nodes = graph.nodes();
    std::vector<Link> links = graph.links();
    Node vs;
    vs.name = "__virtual_server__";
    vs.role = NodeRole::VirtualServer;
    int vs_id = static_cast<int>(nodes.size());
    nodes.push_back(vs);
    for (int s : servers) {
        Link l;
        l.from = vs_id;
        l.to = s;
        l.unbounded = true;
        links.push_back(l);
    }
    return NetworkGraph(std::move(nodes), std::move(links));
}

}  // namespace svcflow
