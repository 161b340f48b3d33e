#include <algorithm>
#include <cmath>

#include "svcflow/errors.hpp"
#include "svcflow/optimizer.hpp"

namespace svcflow {

int MilpModel::pair_index(int demand, int layer) const {
    for (size_t p = 0; p < pairs.size(); ++p)
        if (pairs[p].first == demand && pairs[p].second == layer) return static_cast<int>(p);
    fail(ErrorKind::Internal, "unknown (demand, layer) pair");
}

namespace {

// Capacity of a link in model units (Mbps); unbounded links emit no row.
double snapshot_mbps(const CapacitySnapshot& snap, int link_id) {
    return snap.available_kbps[size_t(link_id)].to_double() / kModelRateUnitKbps;
}

}  // namespace

MilpModel build_milp(const SlotInput& input, const NetworkGraph& graph,
                     const Catalog& catalog, const OptimizerWeights& weights) {
    if (input.empty()) fail(ErrorKind::Model, "cannot build a model for an empty slot");
    if (graph.has_virtual_server())
        fail(ErrorKind::Model, "the selection model runs on the physical graph");
    if (input.snapshot.available_kbps.size() != graph.links().size())
        fail(ErrorKind::Model, "capacity snapshot does not match the graph");

    MilpModel m;
    m.graph = &graph;
    m.servers = input.servers;
    m.demands = input.demands;
    m.norms = input.norms;
    m.alpha = weights.alpha;
    m.epsilon = weights.epsilon;
    if (weights.alpha < 0 || weights.epsilon < 0)
        fail(ErrorKind::Model, "weights must be non-negative");

    const int num_demands = static_cast<int>(m.demands.size());
    const int num_links = graph.link_count();
    const double traffic_coeff =
        weights.epsilon * (kModelRateUnitKbps / kTrafficObjectiveUnitKbps);

    for (int d = 0; d < num_demands; ++d)
        for (int l = 1; l <= m.demands[size_t(d)].profile.max_layers; ++l)
            m.pairs.emplace_back(d, l);

    LinearProgram& prog = m.prog;
    auto cname = [&](int d) { return m.demands[size_t(d)].profile.name; };

    // Selection binaries, then per-pair link rates, then QoE bookkeeping.
    m.omega.resize(m.pairs.size());
    m.layer_size_kbits.resize(m.pairs.size());
    for (size_t p = 0; p < m.pairs.size(); ++p) {
        auto [d, l] = m.pairs[p];
        const Demand& dem = m.demands[size_t(d)];
        m.layer_size_kbits[p] =
            catalog.layer_size(dem.profile.video, dem.request.segment, l).to_double();
        for (int s : m.servers) {
            int var = prog.add_variable(
                "w_" + cname(d) + "_l" + std::to_string(l) + "_" + graph.node(s).name);
            m.omega[p].push_back(var);
            if (!catalog.available(graph.node(s).name, dem.profile.video,
                                   dem.request.segment, l))
                prog.fix_variable(var, 0.0);  // server does not hold this layer
        }
    }
    m.t_var.resize(m.pairs.size());
    for (size_t p = 0; p < m.pairs.size(); ++p) {
        auto [d, l] = m.pairs[p];
        m.t_var[p].resize(size_t(num_links), -1);
        for (const Link& link : graph.links()) {
            int var = prog.add_variable("t_" + cname(d) + "_l" + std::to_string(l) + "_e" +
                                            std::to_string(link.id),
                                        traffic_coeff);
            m.t_var[p][size_t(link.id)] = var;
        }
    }
    for (int d = 0; d < num_demands; ++d) {
        const Demand& dem = m.demands[size_t(d)];
        double b1 = dem.profile.beta1, b2 = dem.profile.beta2, b3 = dem.profile.beta3;
        if (b1 < 0 || b2 < 0 || b3 < 0) fail(ErrorKind::Model, "weights must be non-negative");
        m.z_var.push_back(prog.add_variable("z_" + cname(d)));
        m.nu_var.push_back(prog.add_variable("nu_" + cname(d)));
        m.t_qual.push_back(prog.add_variable("T_" + cname(d), -b3 / num_demands));
        m.i_qual.push_back(prog.add_variable("I_" + cname(d), b1 / num_demands));
        m.n_qual.push_back(prog.add_variable("N_" + cname(d), b2 / num_demands));
    }
    m.q_var = prog.add_variable("Q", weights.alpha);
    m.variable_count = prog.num_variables();

    // Dead-end clients cannot relay traffic: pin their incident rates.
    for (const Node& node : graph.nodes()) {
        if (node.role != NodeRole::Client) continue;
        if (!graph.out_links(node.id).empty()) continue;
        for (int lid : graph.in_links(node.id))
            for (size_t p = 0; p < m.pairs.size(); ++p)
                prog.fix_variable(m.t_var[p][size_t(lid)], 0.0);
    }

    for (size_t p = 0; p < m.pairs.size(); ++p) {
        auto [d, l] = m.pairs[p];
        const Demand& dem = m.demands[size_t(d)];
        const double theta = dem.profile.theta_s;
        const double size_mb = m.layer_size_kbits[p] / kModelRateUnitKbps;

        // One server serves a requested layer.
        LinearProgram::Row uniq;
        uniq.name = "one_server_" + cname(d) + "_l" + std::to_string(l);
        for (int v : m.omega[p]) uniq.terms.emplace_back(v, 1.0);
        uniq.sense = RowSense::LessEq;
        uniq.rhs = 1.0;
        prog.add_row(std::move(uniq));

        // Layer prefix: layer l+1 only together with layer l.
        if (l < dem.profile.max_layers) {
            LinearProgram::Row prefix;
            prefix.name = "prefix_" + cname(d) + "_l" + std::to_string(l);
            int p_next = static_cast<int>(p) + 1;  // pairs are (d,1..m) consecutive
            for (int v : m.omega[size_t(p_next)]) prefix.terms.emplace_back(v, 1.0);
            for (int v : m.omega[p]) prefix.terms.emplace_back(v, -1.0);
            prefix.sense = RowSense::LessEq;
            prefix.rhs = 0.0;
            prog.add_row(std::move(prefix));
        }

        // Flow conservation: sources at serving servers, a sink at the
        // client-side switch, zero elsewhere. Dead-end clients were presolved.
        for (const Node& node : graph.nodes()) {
            if (node.role == NodeRole::Client && graph.out_links(node.id).empty()) continue;
            LinearProgram::Row row;
            row.sense = RowSense::Equal;
            row.rhs = 0.0;
            row.name = "flow_" + cname(d) + "_l" + std::to_string(l) + "_" + node.name;
            for (int lid : graph.out_links(node.id))
                row.terms.emplace_back(m.t_var[p][size_t(lid)], theta);
            for (int lid : graph.in_links(node.id))
                row.terms.emplace_back(m.t_var[p][size_t(lid)], -theta);
            auto sit = std::find(m.servers.begin(), m.servers.end(), node.id);
            if (sit != m.servers.end()) {
                int spos = static_cast<int>(sit - m.servers.begin());
                row.terms.emplace_back(m.omega[p][size_t(spos)], -size_mb);
            } else if (node.id == dem.profile.attach_switch) {
                for (int v : m.omega[p]) row.terms.emplace_back(v, size_mb);
            }
            prog.add_row(std::move(row));
        }
    }

    // Shared link capacity.
    for (const Link& link : graph.links()) {
        if (input.snapshot.unbounded[size_t(link.id)]) continue;
        LinearProgram::Row cap;
        cap.name = "cap_e" + std::to_string(link.id);
        for (size_t p = 0; p < m.pairs.size(); ++p)
            cap.terms.emplace_back(m.t_var[p][size_t(link.id)], 1.0);
        cap.sense = RowSense::LessEq;
        cap.rhs = snapshot_mbps(input.snapshot, link.id);
        prog.add_row(std::move(cap));
    }

    for (int d = 0; d < num_demands; ++d) {
        const Demand& dem = m.demands[size_t(d)];
        const double m_c = dem.profile.max_layers;
        const double phi = static_cast<double>(dem.phi);
        auto omega_sum_terms = [&](LinearProgram::Row& row, double coeff) {
            for (int l = 1; l <= dem.profile.max_layers; ++l) {
                int p = m.pair_index(d, l);
                for (int v : m.omega[size_t(p)]) row.terms.emplace_back(v, coeff);
            }
        };

        // Largest normalized shortfall the solution tolerates.
        LinearProgram::Row gap;
        gap.name = "gap_" + cname(d);
        omega_sum_terms(gap, -1.0);
        gap.terms.emplace_back(m.q_var, -m_c);
        gap.sense = RowSense::LessEq;
        gap.rhs = -m_c;
        prog.add_row(std::move(gap));

        // Running average quality, normalized.
        LinearProgram::Row avg;
        avg.name = "quality_" + cname(d);
        omega_sum_terms(avg, 1.0);
        avg.terms.emplace_back(m.t_qual[size_t(d)],
                               -phi * static_cast<double>(m.norms.t_max));
        avg.sense = RowSense::Equal;
        avg.rhs = -static_cast<double>(dem.history.cum_layers);
        prog.add_row(std::move(avg));

        if (dem.history.first_request()) {
            // The first grant seeds the oscillation baseline.
            prog.fix_variable(m.z_var[size_t(d)], 0.0);
            prog.fix_variable(m.nu_var[size_t(d)], 0.0);
        } else {
            const double last = static_cast<double>(dem.history.last_layers);
            LinearProgram::Row zpos, zneg;
            zpos.name = "osc_pos_" + cname(d);
            omega_sum_terms(zpos, 1.0);
            zpos.terms.emplace_back(m.z_var[size_t(d)], -1.0);
            zpos.sense = RowSense::LessEq;
            zpos.rhs = last;
            prog.add_row(std::move(zpos));
            zneg.name = "osc_neg_" + cname(d);
            omega_sum_terms(zneg, -1.0);
            zneg.terms.emplace_back(m.z_var[size_t(d)], -1.0);
            zneg.sense = RowSense::LessEq;
            zneg.rhs = -last;
            prog.add_row(std::move(zneg));

            // A nonzero quality change raises the oscillation flag.
            LinearProgram::Row trigger;
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
    LinearProgram::Row qub;
    qub.name = "ub_Q";
    qub.terms.emplace_back(m.q_var, 1.0);
    qub.sense = RowSense::LessEq;
    qub.rhs = 1.0;
    prog.add_row(std::move(qub));

    return m;
}

}  // namespace svcflow
