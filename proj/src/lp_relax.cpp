#include <algorithm>
#include <chrono>
#include <cmath>

#include "svcflow/errors.hpp"
#include "svcflow/optimizer.hpp"

namespace svcflow {

LpRelaxModel build_lp(const SlotInput& input, const NetworkGraph& graph,
                      const Catalog& catalog, const OptimizerWeights& weights,
                      int source_override) {
    if (input.empty()) fail(ErrorKind::Model, "cannot build a model for an empty slot");
    LpRelaxModel m;
    m.graph = &graph;
    m.demands = input.demands;
    m.norms = input.norms;
    m.alpha = weights.alpha;
    m.epsilon = weights.epsilon;
    m.source_node = source_override >= 0 ? source_override : graph.virtual_server();
    m.servers = input.servers;

    // The snapshot describes the physical links; virtual-server links are
    // appended after them and are always unbounded.
    const size_t snap_links = input.snapshot.available_kbps.size();
    if (snap_links > graph.links().size())
        fail(ErrorKind::Model, "capacity snapshot does not match the graph");

    const int num_demands = static_cast<int>(m.demands.size());
    const double traffic_coeff =
        weights.epsilon * (kModelRateUnitKbps / kTrafficObjectiveUnitKbps);
    LinearProgram& prog = m.prog;
    auto cname = [&](int d) { return m.demands[size_t(d)].profile.name; };

    for (int d = 0; d < num_demands; ++d) {
        const Demand& dem = m.demands[size_t(d)];
        m.chi_var.push_back(prog.add_variable("chi_" + cname(d)));
        m.avg_layer_kbits.push_back(
            catalog
                .avg_layer_size(dem.profile.video, dem.request.segment,
                                dem.profile.max_layers)
                .to_double());
    }
    m.t_var.resize(size_t(num_demands));
    for (int d = 0; d < num_demands; ++d) {
        m.t_var[size_t(d)].resize(graph.links().size(), -1);
        for (const Link& link : graph.links()) {
            // Hops out of the virtual node are bookkeeping, not traffic.
            double coeff = graph.node(link.from).role == NodeRole::VirtualServer
                               ? 0.0
                               : traffic_coeff;
            m.t_var[size_t(d)][size_t(link.id)] = prog.add_variable(
                "t_" + cname(d) + "_e" + std::to_string(link.id), coeff);
        }
    }
    for (int d = 0; d < num_demands; ++d) {
        const Demand& dem = m.demands[size_t(d)];
        m.z_var.push_back(prog.add_variable("z_" + cname(d)));
        m.nu_var.push_back(prog.add_variable("nu_" + cname(d)));
        m.t_qual.push_back(
            prog.add_variable("T_" + cname(d), -dem.profile.beta3 / num_demands));
        m.i_qual.push_back(
            prog.add_variable("I_" + cname(d), dem.profile.beta1 / num_demands));
        m.n_qual.push_back(
            prog.add_variable("N_" + cname(d), dem.profile.beta2 / num_demands));
    }
    m.q_var = prog.add_variable("Q", weights.alpha);

    for (const Node& node : graph.nodes()) {
        if (node.role != NodeRole::Client) continue;
        if (!graph.out_links(node.id).empty()) continue;
        for (int lid : graph.in_links(node.id))
            for (int d = 0; d < num_demands; ++d)
                prog.fix_variable(m.t_var[size_t(d)][size_t(lid)], 0.0);
    }

    for (int d = 0; d < num_demands; ++d) {
        const Demand& dem = m.demands[size_t(d)];
        const double theta = dem.profile.theta_s;
        const double m_c = dem.profile.max_layers;
        const double phi = static_cast<double>(dem.phi);
        const double avg_mb = m.avg_layer_kbits[size_t(d)] / kModelRateUnitKbps;
        const int chi = m.chi_var[size_t(d)];

        for (const Node& node : graph.nodes()) {
            if (node.role == NodeRole::Client && graph.out_links(node.id).empty()) continue;
            LinearProgram::Row row;
            row.sense = RowSense::Equal;
            row.rhs = 0.0;
            row.name = "flow_" + cname(d) + "_" + node.name;
            for (int lid : graph.out_links(node.id))
                row.terms.emplace_back(m.t_var[size_t(d)][size_t(lid)], theta);
            for (int lid : graph.in_links(node.id))
                row.terms.emplace_back(m.t_var[size_t(d)][size_t(lid)], -theta);
            if (node.id == m.source_node) {
                row.terms.emplace_back(chi, -avg_mb);
            } else if (node.id == dem.profile.attach_switch) {
                row.terms.emplace_back(chi, avg_mb);
            }
            prog.add_row(std::move(row));
        }

        LinearProgram::Row chimax;
        chimax.name = "chimax_" + cname(d);
        chimax.terms.emplace_back(chi, 1.0);
        chimax.sense = RowSense::LessEq;
        chimax.rhs = m_c;
        prog.add_row(std::move(chimax));

        LinearProgram::Row gap;
        gap.name = "gap_" + cname(d);
        gap.terms.emplace_back(chi, -1.0);
        gap.terms.emplace_back(m.q_var, -m_c);
        gap.sense = RowSense::LessEq;
        gap.rhs = -m_c;
        prog.add_row(std::move(gap));

        LinearProgram::Row avg;
        avg.name = "quality_" + cname(d);
        avg.terms.emplace_back(chi, 1.0);
        avg.terms.emplace_back(m.t_qual[size_t(d)],
                               -phi * static_cast<double>(m.norms.t_max));
        avg.sense = RowSense::Equal;
        avg.rhs = -static_cast<double>(dem.history.cum_layers);
        prog.add_row(std::move(avg));

        if (dem.history.first_request()) {
            prog.fix_variable(m.z_var[size_t(d)], 0.0);
            prog.fix_variable(m.nu_var[size_t(d)], 0.0);
        } else {
            const double last = static_cast<double>(dem.history.last_layers);
            LinearProgram::Row zpos, zneg, trigger;
            zpos.name = "osc_pos_" + cname(d);
            zpos.terms.emplace_back(chi, 1.0);
            zpos.terms.emplace_back(m.z_var[size_t(d)], -1.0);
            zpos.sense = RowSense::LessEq;
            zpos.rhs = last;
            prog.add_row(std::move(zpos));
            zneg.name = "osc_neg_" + cname(d);
            zneg.terms.emplace_back(chi, -1.0);
            zneg.terms.emplace_back(m.z_var[size_t(d)], -1.0);
            zneg.sense = RowSense::LessEq;
            zneg.rhs = -last;
            prog.add_row(std::move(zneg));
            trigger.name = "osc_flag_" + cname(d);
            trigger.terms.emplace_back(m.z_var[size_t(d)], 1.0);
            trigger.terms.emplace_back(m.nu_var[size_t(d)], -m_c);
            trigger.sense = RowSense::LessEq;
            trigger.rhs = 0.0;
            prog.add_row(std::move(trigger));
        }

        LinearProgram::Row intensity;
        intensity.name = "intensity_" + cname(d);
        intensity.terms.emplace_back(m.z_var[size_t(d)], 1.0);
        intensity.terms.emplace_back(m.i_qual[size_t(d)],
                                     -phi * static_cast<double>(m.norms.i_max));
        intensity.sense = RowSense::LessEq;
        intensity.rhs = -static_cast<double>(dem.history.cum_intensity);
        prog.add_row(std::move(intensity));

        LinearProgram::Row switches;
        switches.name = "switches_" + cname(d);
        switches.terms.emplace_back(m.nu_var[size_t(d)], 1.0);
        switches.terms.emplace_back(m.n_qual[size_t(d)],
                                    -phi * static_cast<double>(m.norms.n_max));
        switches.sense = RowSense::LessEq;
        switches.rhs = -static_cast<double>(dem.history.cum_switches);
        prog.add_row(std::move(switches));

        for (int var : {m.t_qual[size_t(d)], m.i_qual[size_t(d)], m.n_qual[size_t(d)],
                        m.nu_var[size_t(d)]}) {
            LinearProgram::Row ub;
            ub.name = "ub_" + prog.variable_name(var);
            ub.terms.emplace_back(var, 1.0);
            ub.sense = RowSense::LessEq;
            ub.rhs = 1.0;
            prog.add_row(std::move(ub));
        }
    }

    for (const Link& link : graph.links()) {
        bool unbounded = size_t(link.id) < input.snapshot.unbounded.size()
                             ? input.snapshot.unbounded[size_t(link.id)]
                             : link.unbounded;
        if (unbounded) continue;
        LinearProgram::Row cap;
        cap.name = "cap_e" + std::to_string(link.id);
        for (int d = 0; d < num_demands; ++d)
            cap.terms.emplace_back(m.t_var[size_t(d)][size_t(link.id)], 1.0);
        cap.sense = RowSense::LessEq;
        cap.rhs = input.snapshot.available_kbps[size_t(link.id)].to_double() /
                  kModelRateUnitKbps;
        prog.add_row(std::move(cap));
    }

    LinearProgram::Row qub;
    qub.name = "ub_Q";
    qub.terms.emplace_back(m.q_var, 1.0);
    qub.sense = RowSense::LessEq;
    qub.rhs = 1.0;
    prog.add_row(std::move(qub));

    return m;
}

LpSolution solve_lp(const LpRelaxModel& model, const SimplexOptions& options) {
    auto start = std::chrono::steady_clock::now();
    LpSolveResult res = solve_program(model.prog, options);
    if (res.status == SolveStatus::Infeasible)
        fail(ErrorKind::Internal, "relaxation cannot be infeasible");
    if (res.status != SolveStatus::Optimal)
        fail(ErrorKind::Numerical, "relaxation did not reach an optimum");

    LpSolution sol;
    sol.status = res.status;
    sol.objective = res.objective;
    const int num_demands = static_cast<int>(model.demands.size());
    sol.chi.resize(size_t(num_demands));
    sol.client_rates_kbps.resize(size_t(num_demands));
    sol.nu.resize(size_t(num_demands));
    sol.t_norm.resize(size_t(num_demands));
    sol.i_norm.resize(size_t(num_demands));
    sol.n_norm.resize(size_t(num_demands));
    for (int d = 0; d < num_demands; ++d) {
        sol.chi[size_t(d)] = res.x[size_t(model.chi_var[size_t(d)])];
        sol.nu[size_t(d)] = res.x[size_t(model.nu_var[size_t(d)])];
        sol.t_norm[size_t(d)] = res.x[size_t(model.t_qual[size_t(d)])];
        sol.i_norm[size_t(d)] = res.x[size_t(model.i_qual[size_t(d)])];
        sol.n_norm[size_t(d)] = res.x[size_t(model.n_qual[size_t(d)])];
        for (size_t lid = 0; lid < model.graph->links().size(); ++lid) {
            double mbps = res.x[size_t(model.t_var[size_t(d)][lid])];
            if (mbps > 1e-9)
                sol.client_rates_kbps[size_t(d)][static_cast<int>(lid)] =
                    mbps * kModelRateUnitKbps;
        }
    }
    sol.q_gap = res.x[size_t(model.q_var)];
    sol.stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    sol.stats.lp_iterations = res.iterations;
    sol.stats.nodes = 1;
    return sol;
}

namespace {

struct FlowPath {
    std::vector<int> links;
    double rate = 0;
    double unassigned = 0;
};

// Greedy widest-first path peeling of one client's aggregate flow.
std::vector<FlowPath> peel_paths(const NetworkGraph& graph, std::map<int, double> flow,
                                 int source, int sink) {
    std::vector<FlowPath> paths;
    const double tol = 1e-7;
    for (;;) {
        double total_out = 0;
        for (int lid : graph.out_links(source)) {
            auto it = flow.find(lid);
            if (it != flow.end()) total_out += it->second;
        }
        if (total_out <= tol) break;
        FlowPath path;
        int at = source;
        double bottleneck = std::numeric_limits<double>::infinity();
        int guard = 0;
        while (at != sink) {
            if (++guard > graph.link_count() + 1)
                fail(ErrorKind::Decomposition, "cycle while peeling flow paths");
            int best = -1;
            double best_rate = tol;
            for (int lid : graph.out_links(at)) {
                auto it = flow.find(lid);
                if (it == flow.end()) continue;
                if (it->second > best_rate) {
                    best_rate = it->second;
                    best = lid;
                }
            }
            if (best < 0) fail(ErrorKind::Decomposition, "flow path stalls before the sink");
            path.links.push_back(best);
            bottleneck = std::min(bottleneck, flow[best]);
            at = graph.link(best).to;
        }
        for (int lid : path.links) {
            flow[lid] -= bottleneck;
            if (flow[lid] <= tol) flow.erase(lid);
        }
        path.rate = bottleneck;
        path.unassigned = bottleneck;
        paths.push_back(std::move(path));
    }
    return paths;
}

}  // namespace

namespace {

// Residual-widest route from `from` to `to`, given the load already staged on
// each link; used when a layer's chosen server cannot feed it from the
// relaxation's own paths.
std::vector<int> widest_residual_path(const NetworkGraph& graph,
                                      const CapacitySnapshot& snapshot,
                                      const std::map<int, double>& load, int from,
                                      int to) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> width(size_t(graph.node_count()),
                              -std::numeric_limits<double>::infinity());
    std::vector<bool> reached(size_t(graph.node_count()), false);
    std::vector<int> via(size_t(graph.node_count()), -1);
    width[size_t(from)] = inf;
    reached[size_t(from)] = true;
    for (int pass = 0; pass < graph.node_count(); ++pass) {
        bool changed = false;
        for (const Link& l : graph.links()) {
            if (graph.node(l.to).role == NodeRole::Client) continue;
            if (!reached[size_t(l.from)]) continue;
            double residual = inf;
            bool unbounded = size_t(l.id) < snapshot.unbounded.size()
                                 ? snapshot.unbounded[size_t(l.id)]
                                 : l.unbounded;
            if (!unbounded) {
                residual = snapshot.available_kbps[size_t(l.id)].to_double();
                auto it = load.find(l.id);
                if (it != load.end()) residual -= it->second;
            }
            double cand = std::min(width[size_t(l.from)], residual);
            if (cand > width[size_t(l.to)] + 1e-12) {
                width[size_t(l.to)] = cand;
                reached[size_t(l.to)] = true;
                via[size_t(l.to)] = l.id;
                changed = true;
            }
        }
        if (!changed) break;
    }
    std::vector<int> links;
    int at = to;
    while (at != from) {
        int lid = via[size_t(at)];
        if (lid < 0 || static_cast<int>(links.size()) > graph.node_count())
            fail(ErrorKind::Decomposition, "no route from the chosen server");
        links.push_back(lid);
        at = graph.link(lid).from;
    }
    std::reverse(links.begin(), links.end());
    return links;
}

}  // namespace

IntegerizedPlan integerize(const LpSolution& solution, const LpRelaxModel& model,
                           const SlotInput& input, const Catalog& catalog) {
    const NetworkGraph& graph = *model.graph;
    IntegerizedPlan plan;
    const int num_demands = static_cast<int>(model.demands.size());
    plan.served_layers.assign(size_t(num_demands), 0);
    plan.layers.resize(size_t(num_demands));
    std::map<int, double> staged_load;  // across demands and layers

    for (int d = 0; d < num_demands; ++d) {
        const Demand& dem = model.demands[size_t(d)];
        double chi = solution.chi[size_t(d)];
        int floors = static_cast<int>(std::floor(chi + 1e-6));
        floors = std::max(0, std::min(floors, dem.profile.max_layers));
        plan.served_layers[size_t(d)] = floors;
        if (floors == 0 || chi <= 1e-9) continue;

        double selected_kbits = 0;
        for (int l = 1; l <= floors; ++l)
            selected_kbits +=
                catalog.layer_size(dem.profile.video, dem.request.segment, l).to_double();
        double lp_kbits = model.avg_layer_kbits[size_t(d)] * chi;
        double scale = selected_kbits / lp_kbits;

        std::vector<FlowPath> paths = peel_paths(graph, solution.client_rates_kbps[size_t(d)],
                                                 model.source_node, dem.profile.attach_switch);
        for (FlowPath& p : paths) {
            p.rate *= scale;
            p.unassigned = p.rate;
        }

        // Residual feed per real server, measured on the virtual egress hop.
        std::map<int, double> residual;
        for (const FlowPath& p : paths) {
            int first = p.links.front();
            residual[graph.link(first).to] += p.rate;
        }

        for (int l = 1; l <= floors; ++l) {
            double need =
                catalog.layer_size(dem.profile.video, dem.request.segment, l).to_double() /
                dem.profile.theta_s;
            // Serve the layer from the holder with the most unassigned feed.
            int server = -1;
            double best = -1;
            for (int s : model.servers) {
                if (!catalog.available(graph.node(s).name, dem.profile.video,
                                       dem.request.segment, l))
                    continue;
                double r = residual.count(s) ? residual[s] : 0.0;
                if (r > best + 1e-12) {
                    best = r;
                    server = s;
                }
            }
            if (server < 0)
                fail(ErrorKind::Model, "no server holds a selected layer");

            LayerFlow lf;
            lf.server_node = server;
            double remaining = need;
            for (FlowPath& p : paths) {
                if (remaining <= 1e-9) break;
                if (p.unassigned <= 1e-9) continue;
                if (graph.link(p.links.front()).to != server) continue;
                double take = std::min(p.unassigned, remaining);
                p.unassigned -= take;
                remaining -= take;
                residual[server] -= take;
                for (size_t i = 1; i < p.links.size(); ++i)
                    lf.rates_kbps[p.links[size_t(i)]] += take;
            }
            if (remaining > 1e-6) {
                // The chosen server's own feed fell short (the relaxation
                // split its flow across servers, a layer cannot). Route the
                // remainder over the links with the most spare capacity; the
                // stretch pass below is the backstop when nothing is spare.
                std::map<int, double> seen = staged_load;
                for (const auto& [lid, rate] : lf.rates_kbps) seen[lid] += rate;
                std::vector<int> route = widest_residual_path(
                    graph, input.snapshot, seen, server, dem.profile.attach_switch);
                for (int lid : route) lf.rates_kbps[lid] += remaining;
            }
            for (const auto& [lid, rate] : lf.rates_kbps) staged_load[lid] += rate;
            plan.layers[size_t(d)].push_back(std::move(lf));
        }
    }

    // Capacity check after scaling; stretching the delivery window keeps the
    // link loads legal when up-scaling overshoots.
    double stretch = 1.0;
    std::map<int, double> load;
    for (const auto& layer_list : plan.layers)
        for (const LayerFlow& lf : layer_list)
            for (const auto& [lid, rate] : lf.rates_kbps) load[lid] += rate;
    for (const auto& [lid, rate] : load) {
        if (size_t(lid) >= input.snapshot.available_kbps.size()) continue;
        if (input.snapshot.unbounded[size_t(lid)]) continue;
        double cap = input.snapshot.available_kbps[size_t(lid)].to_double();
        if (cap <= 0) continue;
        stretch = std::max(stretch, rate / cap);
    }
    if (stretch > 1.0 + 1e-9) {
        for (auto& layer_list : plan.layers)
            for (LayerFlow& lf : layer_list)
                for (auto& [lid, rate] : lf.rates_kbps) rate /= stretch;
        plan.stretch = stretch;
    }
    return plan;
}

}  // namespace svcflow
