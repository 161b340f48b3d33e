#include "svcflow/flowsetup.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

#include "svcflow/errors.hpp"

namespace svcflow {

RateGraph::RateGraph(const NetworkGraph& base, int source, int sink)
    : base_(&base), source_(source), sink_(sink) {
    in_.resize(size_t(base.node_count()));
    out_.resize(size_t(base.node_count()));
}

int RateGraph::add_edge(int from, int to, Rational rate, bool visited, bool is_virtual) {
    Edge e;
    e.id = static_cast<int>(edges_.size());
    e.from = from;
    e.to = to;
    e.rate_kbps = rate;
    e.visited = visited;
    e.is_virtual = is_virtual;
    edges_.push_back(e);
    out_.at(size_t(from)).push_back(e.id);
    in_.at(size_t(to)).push_back(e.id);
    return e.id;
}

std::vector<int> RateGraph::in_edges(int node) const {
    std::vector<int> ids;
    for (int id : in_.at(size_t(node)))
        if (!edges_[size_t(id)].rate_kbps.is_zero()) ids.push_back(id);
    return ids;
}

std::vector<int> RateGraph::out_edges(int node) const {
    std::vector<int> ids;
    for (int id : out_.at(size_t(node)))
        if (!edges_[size_t(id)].rate_kbps.is_zero()) ids.push_back(id);
    return ids;
}

Rational RateGraph::total_rate() const {
    Rational total(0);
    for (int id : out_edges(source_)) total += edges_[size_t(id)].rate_kbps;
    for (int id : in_edges(source_)) total -= edges_[size_t(id)].rate_kbps;
    return total;
}

void RateGraph::check_conservation() const {
    for (const Node& node : base_->nodes()) {
        if (node.id == source_ || node.id == sink_) continue;
        Rational balance(0);
        for (int id : in_edges(node.id)) balance += edges_[size_t(id)].rate_kbps;
        for (int id : out_edges(node.id)) balance -= edges_[size_t(id)].rate_kbps;
        if (!balance.is_zero())
            fail(ErrorKind::Decomposition,
                 "flow is not conserved at " + node.name + " (imbalance " + balance.str() +
                     " kbps)");
    }
}

RateGraph make_rate_graph(const NetworkGraph& base,
                          const std::map<int, Rational>& link_rates_kbps, int source,
                          int sink) {
    RateGraph rg(base, source, sink);
    for (const auto& [link_id, rate] : link_rates_kbps) {
        if (rate.is_zero()) continue;
        if (rate.is_negative()) fail(ErrorKind::Decomposition, "negative link rate");
        const Link& l = base.link(link_id);
        rg.add_edge(l.from, l.to, rate, false, false);
    }
    rg.check_conservation();
    return rg;
}

RateGraph make_rate_graph_from_solution(const NetworkGraph& base,
                                        const std::map<int, double>& link_rates_kbps,
                                        int source, int sink, Rational target_rate) {
    // Peel float paths source -> sink (widest next hop first).
    std::map<int, double> flow;
    for (const auto& [lid, rate] : link_rates_kbps)
        if (rate > 1e-7) flow[lid] = rate;
    struct Path {
        std::vector<int> links;
        double rate;
    };
    std::vector<Path> paths;
    for (;;) {
        double out_total = 0;
        for (int lid : base.out_links(source)) {
            auto it = flow.find(lid);
            if (it != flow.end()) out_total += it->second;
        }
        if (out_total <= 1e-7) break;
        Path p;
        int at = source;
        double bottleneck = std::numeric_limits<double>::infinity();
        int guard = 0;
        while (at != sink) {
            if (++guard > base.link_count() + 1)
                fail(ErrorKind::Decomposition, "cycle while peeling solver flow");
            int best = -1;
            double best_rate = 1e-7;
            for (int lid : base.out_links(at)) {
                auto it = flow.find(lid);
                if (it != flow.end() && it->second > best_rate) {
                    best_rate = it->second;
                    best = lid;
                }
            }
            if (best < 0)
                fail(ErrorKind::Decomposition, "solver flow stalls before the sink");
            p.links.push_back(best);
            bottleneck = std::min(bottleneck, flow[best]);
            at = base.link(best).to;
        }
        for (int lid : p.links) {
            flow[lid] -= bottleneck;
            if (flow[lid] <= 1e-7) flow.erase(lid);
        }
        p.rate = bottleneck;
        paths.push_back(std::move(p));
    }
    if (paths.empty())
        fail(ErrorKind::Decomposition, "no flow to reconstruct");

    // Snap to the 1 bps grid; the last big-enough path absorbs the residue so
    // the totals match the exact target.
    std::vector<Rational> rates(paths.size());
    size_t adjust = paths.size();
    Rational others(0);
    while (adjust > 0) {
        --adjust;
        others = Rational(0);
        for (size_t i = 0; i < paths.size(); ++i) {
            if (i == adjust) continue;
            rates[i] = Rational::from_kbps(paths[i].rate);
            others += rates[i];
        }
        if (target_rate - others > Rational(0)) break;
        paths[adjust].rate = 0;  // too small to carry the correction
        if (adjust == 0)
            fail(ErrorKind::Decomposition, "cannot reconcile flow with its target rate");
    }
    rates[adjust] = target_rate - others;

    std::map<std::pair<int, int>, Rational> folded;
    for (size_t i = 0; i < paths.size(); ++i) {
        if (rates[i].is_zero()) continue;
        for (int lid : paths[i].links) {
            const Link& l = base.link(lid);
            folded[{l.from, l.to}] += rates[i];
        }
    }
    RateGraph rg(base, source, sink);
    for (const auto& [ft, rate] : folded) rg.add_edge(ft.first, ft.second, rate, false, false);
    rg.check_conservation();
    return rg;
}

namespace {

// Exact subset-sum over candidate edges, searched in ascending-rate order.
// Returns the matching edge ids or empty when no combination exists.
bool find_combination(const RateGraph& rg, const std::vector<int>& candidates,
                      const Rational& target, std::vector<int>& chosen) {
    chosen.clear();
    if (target <= Rational(0)) return false;
    std::vector<int> order = candidates;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (rg.edge(a).rate_kbps != rg.edge(b).rate_kbps)
            return rg.edge(a).rate_kbps < rg.edge(b).rate_kbps;
        return a < b;
    });
    std::vector<Rational> suffix(order.size() + 1, Rational(0));
    for (size_t i = order.size(); i > 0; --i)
        suffix[i - 1] = suffix[i] + rg.edge(order[i - 1]).rate_kbps;

    std::vector<int> stack;
    std::function<bool(size_t, Rational)> dfs = [&](size_t idx, Rational remaining) -> bool {
        if (remaining.is_zero()) return true;
        if (idx >= order.size()) return false;
        if (suffix[idx] < remaining) return false;
        const Rational& r = rg.edge(order[idx]).rate_kbps;
        if (r <= remaining) {
            stack.push_back(order[idx]);
            if (dfs(idx + 1, remaining - r)) return true;
            stack.pop_back();
        }
        return dfs(idx + 1, remaining);
    };
    if (dfs(0, target)) {
        chosen = stack;
        return true;
    }
    return false;
}

Rational max_rate(const RateGraph& rg, const std::vector<int>& candidates) {
    Rational best(0);
    for (int id : candidates) best = std::max(best, rg.edge(id).rate_kbps);
    return best;
}

}  // namespace

void update_data_rate_one(RateGraph& rg, int link_edge, std::vector<int> candidates) {
    const Rational target = rg.edge(link_edge).rate_kbps;
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        if (rg.edge(a).rate_kbps != rg.edge(b).rate_kbps)
            return rg.edge(a).rate_kbps < rg.edge(b).rate_kbps;
        return a < b;
    });
    Rational acc(0);
    int last = -1;
    for (int id : candidates) {
        rg.edge(id).visited = true;
        rg.edge(id).consumer = link_edge;
        acc += rg.edge(id).rate_kbps;
        last = id;
        if (acc >= target) break;
    }
    if (acc < target)
        fail(ErrorKind::Decomposition,
             "upstream rates cannot cover a downstream link (conservation violated)");
    Rational excess = acc - target;
    if (!excess.is_zero()) {
        // The tail of the accumulated set is split: the surplus moves onto an
        // unvisited virtual twin of the last link.
        rg.add_edge(rg.edge(last).from, rg.edge(last).to, excess, false, true);
        rg.edge(last).rate_kbps -= excess;
    }
}

void update_data_rate_two(RateGraph& rg, int link_edge, std::vector<int> candidates) {
    const Rational target = rg.edge(link_edge).rate_kbps;
    int l2 = -1;
    for (int id : candidates) {
        if (l2 < 0 || rg.edge(id).rate_kbps > rg.edge(l2).rate_kbps ||
            (rg.edge(id).rate_kbps == rg.edge(l2).rate_kbps && id < l2))
            l2 = id;
    }
    if (l2 < 0 || rg.edge(l2).rate_kbps < target)
        fail(ErrorKind::Decomposition, "no upstream link can host the virtual twin");
    int vl = rg.add_edge(rg.edge(l2).from, rg.edge(l2).to, target, true, true);
    rg.edge(vl).consumer = link_edge;
    rg.edge(l2).rate_kbps -= target;
}

namespace {

// Decomposes every incoming rate of node n into exact combinations of its
// upstream nodes' unvisited rates, splitting through virtual twins when no
// combination exists.
void decompose_node(RateGraph& rg, int n, int server, const DecomposeOptions& options,
                    std::vector<bool>& handled) {
    std::vector<int> incoming = rg.in_edges(n);
    std::sort(incoming.begin(), incoming.end(), [&](int a, int b) {
        if (rg.edge(a).from != rg.edge(b).from) return rg.edge(a).from < rg.edge(b).from;
        return a < b;
    });
    for (int l : incoming) {
        handled[size_t(l)] = true;
        int p = rg.edge(l).from;
        if (p == server) continue;  // server egress edges are the base rates
        std::vector<int> unvisited;
        for (int id : rg.in_edges(p))
            if (!rg.edge(id).visited) unvisited.push_back(id);
        if (static_cast<int>(unvisited.size()) > options.fanin_cap)
            fail(ErrorKind::Decomposition,
                 "fan-in exceeds the exact-combination search cap at " +
                     rg.base().node(p).name);
        std::vector<int> combo;
        if (find_combination(rg, unvisited, rg.edge(l).rate_kbps, combo)) {
            for (int id : combo) {
                rg.edge(id).visited = true;
                rg.edge(id).consumer = l;
            }
            continue;
        }
        if (unvisited.empty())
            fail(ErrorKind::Decomposition,
                 "no unvisited upstream rates left at " + rg.base().node(p).name);
        if (rg.edge(l).rate_kbps > max_rate(rg, unvisited))
            update_data_rate_one(rg, l, unvisited);
        else
            update_data_rate_two(rg, l, unvisited);
    }
}

}  // namespace

TagPlan base_data_rates(RateGraph& rg, int client_side_switch, int server, double theta_s,
                        const DecomposeOptions& options) {
    rg.check_conservation();
    if (rg.total_rate() <= Rational(0))
        fail(ErrorKind::Decomposition, "flow carries no traffic");

    // Walk the flow from the client-side switch toward the server in reverse
    // topological order: a node's incoming rates are only decomposed once
    // every rate it forwards has been matched downstream, otherwise a later
    // split could strand an already-paired rate. Ties go to the highest node
    // id. Virtual edges created along the way queue up like physical ones.
    std::vector<bool> handled;
    std::set<int> processed;
    for (;;) {
        handled.resize(rg.edges().size(), false);  // grows as virtuals appear
        int next = -1;
        for (const Node& node : rg.base().nodes()) {
            if (node.id == server || processed.count(node.id)) continue;
            if (node.id != client_side_switch && rg.in_edges(node.id).empty()) continue;
            bool ready = true;
            for (int out : rg.out_edges(node.id))
                if (!handled[size_t(out)]) ready = false;
            if (ready && node.id > next) next = node.id;
        }
        if (next < 0) break;
        processed.insert(next);
        decompose_node(rg, next, server, options, handled);
    }

    // Sink-side edges are consumed by the client itself.
    for (int id : rg.in_edges(client_side_switch))
        if (rg.edge(id).consumer == RateGraph::kUnassigned && !rg.edge(id).visited)
            rg.edge(id).consumer = RateGraph::kSinkConsumed;

    for (const RateGraph::Edge& e : rg.edges()) {
        if (e.rate_kbps.is_zero()) continue;
        if (e.consumer == RateGraph::kUnassigned)
            fail(ErrorKind::Decomposition,
                 "edge " + rg.base().node(e.from).name + " -> " + rg.base().node(e.to).name +
                     " was never allocated (non-conserving or unreachable flow)");
    }

    TagPlan plan;
    plan.theta_s = theta_s;
    plan.total_rate_kbps = rg.total_rate();
    Rational theta = Rational::from_kbps(theta_s);

    std::vector<int> egress = rg.out_edges(server);
    std::sort(egress.begin(), egress.end(), [&](int a, int b) {
        if (rg.edge(a).rate_kbps != rg.edge(b).rate_kbps)
            return rg.edge(a).rate_kbps < rg.edge(b).rate_kbps;
        if (rg.edge(a).to != rg.edge(b).to) return rg.edge(a).to < rg.edge(b).to;
        return a < b;
    });
    if (static_cast<int>(egress.size()) > options.max_tags)
        fail(ErrorKind::Decomposition,
             "flow needs " + std::to_string(egress.size()) +
                 " tags, more than the tag field can carry");

    int tag = 1;
    for (int e0 : egress) {
        TagEntry entry;
        entry.tag = tag++;
        entry.server_side_switch = rg.edge(e0).to;
        entry.rate_kbps = rg.edge(e0).rate_kbps;
        entry.volume_kbits = entry.rate_kbps * theta;
        int cur = e0;
        entry.path_nodes.push_back(rg.edge(cur).from);
        size_t guard = 0;
        for (;;) {
            if (++guard > rg.edges().size() + 1)
                fail(ErrorKind::Decomposition, "cycle while tracing a tag path");
            entry.path_nodes.push_back(rg.edge(cur).to);
            entry.path_hops.emplace_back(rg.edge(cur).from, rg.edge(cur).to);
            if (rg.edge(cur).consumer == RateGraph::kSinkConsumed) break;
            cur = rg.edge(cur).consumer;
        }
        std::set<int> unique_nodes(entry.path_nodes.begin(), entry.path_nodes.end());
        if (unique_nodes.size() != entry.path_nodes.size())
            fail(ErrorKind::Decomposition, "tag path revisits a node");
        if (entry.path_nodes.back() != client_side_switch)
            fail(ErrorKind::Decomposition, "tag path does not end at the client-side switch");
        plan.entries.push_back(std::move(entry));
    }
    return plan;
}

FlowConfig emit_rules(const TagPlan& plan, const RateGraph& rg,
                      const std::string& server_name, const std::string& client_name,
                      int client_node) {
    FlowConfig config;
    config.directive.server = server_name;
    config.directive.client = client_name;
    config.directive.theta_s = plan.theta_s;
    const NetworkGraph& base = rg.base();

    for (const TagEntry& entry : plan.entries) {
        ServerDirectiveEntry de;
        de.tag = entry.tag;
        de.server_side_switch = base.node(entry.server_side_switch).name;
        de.rate_kbps = entry.rate_kbps;
        de.volume_kbits = entry.volume_kbits;
        config.directive.entries.push_back(std::move(de));

        // One rule per switch on the path; the last switch hands the packet
        // to the client and restores the default source endpoint.
        for (size_t i = 1; i < entry.path_nodes.size(); ++i) {
            FlowRule rule;
            rule.switch_name = base.node(entry.path_nodes[i]).name;
            rule.tag = entry.tag;
            rule.match_src = server_name;
            rule.match_dst = client_name;
            if (i + 1 < entry.path_nodes.size()) {
                rule.forward_to = base.node(entry.path_nodes[i + 1]).name;
            } else {
                rule.forward_to = base.node(client_node).name;
                rule.rewrite_source = true;
            }
            config.rules.push_back(std::move(rule));
        }
    }
    return config;
}

std::map<std::pair<int, int>, Rational> fold_tag_rates(const TagPlan& plan) {
    std::map<std::pair<int, int>, Rational> folded;
    for (const TagEntry& entry : plan.entries)
        for (const auto& hop : entry.path_hops) folded[hop] += entry.rate_kbps;
    return folded;
}

}  // namespace svcflow
