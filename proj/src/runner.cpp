#include "svcflow/runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "svcflow/errors.hpp"
#include "svcflow/flowsetup.hpp"
#include "svcflow/svg.hpp"

namespace svcflow {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::NotFound, "cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve(const Scenario& scenario, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(scenario.base_dir) / p).string();
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
}

// Delivery in flight; occupies links until `end_s`.
struct ActiveDelivery {
    double end_s = 0;
    std::map<int, Rational> link_rates;  // real link id -> kbps
};

struct PendingDelivery {
    double time_s = 0;
    int client_index = 0;
    int segment = 0;
    int layers = 0;
};

struct PerClientMetrics {
    double t_norm = 0, i_norm = 0, n_norm = 0;
    int nu = 0;
};

PerClientMetrics recompute_metrics(const Demand& demand, int delivered,
                                   const Normalizers& norms) {
    PerClientMetrics m;
    double phi = static_cast<double>(demand.phi);
    int z = demand.history.first_request()
                ? 0
                : std::abs(delivered - demand.history.last_layers);
    m.nu = demand.history.first_request() ? 0 : (z > 0 ? 1 : 0);
    m.t_norm = (static_cast<double>(demand.history.cum_layers) + delivered) /
               (phi * static_cast<double>(norms.t_max));
    m.i_norm = (static_cast<double>(demand.history.cum_intensity) + z) /
               (phi * static_cast<double>(norms.i_max));
    m.n_norm = (static_cast<double>(demand.history.cum_switches) + m.nu) /
               (phi * static_cast<double>(norms.n_max));
    return m;
}

struct RuleSink {
    std::vector<std::string> rule_lines;
    std::vector<std::string> directive_lines;
};

int emit_flow_config(const NetworkGraph& graph, RateGraph& rate_graph, int slot,
                     const ClientProfile& profile, int layer, int server_node,
                     double theta_eff, RuleSink& sink) {
    TagPlan plan = base_data_rates(rate_graph, profile.attach_switch, server_node, theta_eff);
    FlowConfig config = emit_rules(plan, rate_graph, graph.node(server_node).name,
                                   profile.name, profile.node);
    for (const FlowRule& rule : config.rules) {
        ordered_json j;
        j["slot"] = slot;
        j["client"] = profile.name;
        j["layer"] = layer;
        j["switch"] = rule.switch_name;
        j["tag"] = rule.tag;
        j["match_src"] = rule.match_src;
        j["match_dst"] = rule.match_dst;
        j["forward_to"] = rule.forward_to;
        j["rewrite_source"] = rule.rewrite_source;
        sink.rule_lines.push_back(j.dump());
    }
    ordered_json dj;
    dj["slot"] = slot;
    dj["client"] = profile.name;
    dj["layer"] = layer;
    dj["server"] = config.directive.server;
    dj["theta_s"] = config.directive.theta_s;
    ordered_json entries = ordered_json::array();
    for (const ServerDirectiveEntry& e : config.directive.entries) {
        ordered_json je;
        je["tag"] = e.tag;
        je["server_side_switch"] = e.server_side_switch;
        je["rate_kbps"] = e.rate_kbps.to_double();
        je["volume_kbits"] = e.volume_kbits.to_double();
        entries.push_back(je);
    }
    dj["sends"] = entries;
    sink.directive_lines.push_back(dj.dump());
    return static_cast<int>(config.rules.size());
}

}  // namespace

ValidationSummary validate_scenario(const Scenario& scenario) {
    ValidationSummary summary;
    NetworkGraph graph = load_topology_file(resolve(scenario, scenario.topology_path));
    Catalog catalog = load_catalog_file(resolve(scenario, scenario.catalog_path));
    summary.nodes = graph.node_count();
    summary.links = graph.link_count();
    summary.clients = static_cast<int>(scenario.clients.size());

    double seg = 0;
    for (const ClientProfile& c : scenario.clients) {
        int node = graph.node_index(c.name);
        if (graph.node(node).role != NodeRole::Client)
            fail(ErrorKind::Validation, c.name + " is not a client node");
        const VideoEntry& v = catalog.video(c.video);
        seg = v.segment_duration_s;
        if (c.max_layers > v.layers)
            fail(ErrorKind::Validation,
                 c.name + " requests more layers than the video carries");
    }
    summary.stall_safe_theta_s = stall_safe_deadline(seg, scenario.tau_s);
    for (const ClientProfile& c : scenario.clients)
        if (c.theta_s > summary.stall_safe_theta_s + 1e-9)
            summary.warnings.push_back(c.name + ": deadline " + fmt(c.theta_s, 2) +
                                       "s exceeds the stall-safe bound " +
                                       fmt(summary.stall_safe_theta_s, 2) + "s");
    if (graph.nodes_with_role(NodeRole::Server).empty())
        fail(ErrorKind::Validation, "topology has no servers");
    return summary;
}

RunResult run_scenario(const Scenario& scenario, const std::string& out_dir,
                       const RunOptions& options) {
    const std::string solver =
        options.solver_override.empty() ? scenario.solver : options.solver_override;
    if (solver != "milp" && solver != "lp")
        fail(ErrorKind::Validation, "solver must be 'milp' or 'lp'");

    const std::string topo_text = read_file(resolve(scenario, scenario.topology_path));
    const std::string cat_text = read_file(resolve(scenario, scenario.catalog_path));
    NetworkGraph graph = load_topology(topo_text);
    Catalog catalog = load_catalog(cat_text);

    // Bind client profiles to topology nodes.
    std::vector<ClientProfile> profiles = scenario.clients;
    for (ClientProfile& p : profiles) {
        p.node = graph.node_index(p.name);
        if (graph.node(p.node).role != NodeRole::Client)
            fail(ErrorKind::Validation, p.name + " is not a client node");
        p.attach_switch = graph.attach_switch(p.node);
        (void)catalog.video(p.video);
    }

    const double tau = scenario.tau_s;
    std::mt19937_64 rng(scenario.seed);

    std::vector<ClientHistory> histories(profiles.size());
    std::vector<ClientState> states;
    std::vector<int> total_segments(profiles.size());
    for (size_t i = 0; i < profiles.size(); ++i) {
        const VideoEntry& v = catalog.video(profiles[i].video);
        total_segments[i] = v.segments;
        states.emplace_back(profiles[i], v.segments, v.segment_duration_s);
    }

    // Requests keyed by the slot whose gathering window holds their arrival.
    std::map<int, std::vector<SlotRequest>> request_queue;
    int next_request_id = 1;
    auto enqueue_request = [&](int client_index, int segment, double arrival,
                               int attempt) {
        SlotRequest r;
        r.id = next_request_id++;
        r.client_index = client_index;
        r.segment = segment;
        r.arrival_s = arrival;
        r.attempt = attempt;
        int slot = static_cast<int>(std::floor(arrival / tau + 1e-9)) + 1;
        request_queue[slot].push_back(r);
        states[size_t(client_index)].note_request(segment, arrival);
    };

    // Join-time requests; phase inside the gathering window is fixed at its
    // start unless the scenario randomizes arrivals.
    for (size_t i = 0; i < profiles.size(); ++i) {
        double window_start = (profiles[i].join_slot - 1) * tau;
        double phase = 0;
        if (scenario.randomize_arrival) {
            std::uniform_real_distribution<double> dist(0.0, tau * (1.0 - 1e-9));
            phase = dist(rng);
        }
        enqueue_request(static_cast<int>(i), 1, window_start + phase, 1);
    }

    std::vector<ActiveDelivery> in_flight;
    std::vector<PendingDelivery> pending;
    RuleSink rules;
    std::vector<SlotReport> slot_reports;
    std::vector<std::string> warnings;
    std::vector<double> result_slot_wall;
    std::vector<std::array<double, 3>> timing_rows;  // slot, wall_ms, nodes
    std::vector<std::int64_t> lp_iter_rows;
    bool any_timeout = false;
    double total_wall = 0;
    const double qual_min = catalog.quality_min();
    const double qual_max = catalog.quality_max();

    OptimizerWeights weights;
    weights.alpha = scenario.alpha;
    weights.epsilon = scenario.epsilon;

    auto deliver_due = [&](double until) {
        std::sort(pending.begin(), pending.end(),
                  [](const PendingDelivery& a, const PendingDelivery& b) {
                      if (a.time_s != b.time_s) return a.time_s < b.time_s;
                      return a.client_index < b.client_index;
                  });
        std::vector<PendingDelivery> keep;
        for (const PendingDelivery& d : pending) {
            if (d.time_s > until + 1e-12) {
                keep.push_back(d);
                continue;
            }
            ClientState& st = states[size_t(d.client_index)];
            st.deliver(d.segment, d.layers, d.time_s);
            if (d.segment < total_segments[size_t(d.client_index)])
                enqueue_request(d.client_index, d.segment + 1, d.time_s, 1);
        }
        pending = std::move(keep);
    };

    for (int slot = 1; slot <= scenario.slots; ++slot) {
        const double opt_time = slot * tau;
        deliver_due(opt_time);

        std::vector<SlotRequest> arrivals;
        auto qit = request_queue.find(slot);
        if (qit != request_queue.end()) {
            arrivals = qit->second;
            request_queue.erase(qit);
        }
        if (arrivals.empty()) {
            for (ClientState& st : states) st.advance(opt_time);
            continue;
        }

        // Available bandwidth: static capacity minus transmissions that
        // outlast their slot.
        std::map<int, Rational> residual;
        std::vector<ActiveDelivery> still;
        for (ActiveDelivery& a : in_flight) {
            if (a.end_s <= opt_time + 1e-12) continue;
            for (const auto& [lid, rate] : a.link_rates) residual[lid] += rate;
            still.push_back(std::move(a));
        }
        in_flight = std::move(still);
        CapacitySnapshot snapshot = snapshot_bandwidth(graph, residual);

        SlotInput input =
            gather(slot, tau, arrivals, profiles, histories, catalog, graph, snapshot);

        std::vector<int> served(input.demands.size(), 0);
        std::vector<std::vector<int>> layer_servers(input.demands.size());
        std::vector<std::vector<std::map<int, double>>> layer_rates(input.demands.size());
        double objective = 0;
        double wall_ms = 0;
        std::int64_t nodes = 1, lp_iters = 0;
        double stretch = 1.0;

        if (solver == "milp") {
            MilpModel model = build_milp(input, graph, catalog, weights);
            if (options.dump_lp && !out_dir.empty()) {
                fs::create_directories(out_dir);
                std::ofstream lp_out(fs::path(out_dir) /
                                     ("slot" + std::to_string(slot) + "_milp.lp"));
                lp_out << model.prog.to_lp_format(scenario.name + " slot " +
                                                  std::to_string(slot));
            }
            MilpOptions mo = options.milp;
            mo.lp = options.lp;
            MilpSolution sol = solve_milp(model, mo);
            any_timeout |= sol.timed_out;
            objective = sol.objective;
            wall_ms = sol.stats.wall_ms;
            nodes = sol.stats.nodes;
            lp_iters = sol.stats.lp_iterations;
            for (size_t d = 0; d < input.demands.size(); ++d) {
                served[d] = sol.served_layers[d];
                layer_servers[d].resize(size_t(served[d]), -1);
                layer_rates[d].resize(size_t(served[d]));
                for (int l = 1; l <= served[d]; ++l) {
                    int pair = model.pair_index(static_cast<int>(d), l);
                    layer_servers[d][size_t(l - 1)] = sol.layer_server[d][size_t(l - 1)];
                    layer_rates[d][size_t(l - 1)] = sol.layer_rates_kbps[size_t(pair)];
                }
            }
        } else {
            NetworkGraph augmented = augment_virtual_server(graph, input.servers);
            LpRelaxModel model = build_lp(input, augmented, catalog, weights);
            if (options.dump_lp && !out_dir.empty()) {
                fs::create_directories(out_dir);
                std::ofstream lp_out(fs::path(out_dir) /
                                     ("slot" + std::to_string(slot) + "_lp.lp"));
                lp_out << model.prog.to_lp_format(scenario.name + " slot " +
                                                  std::to_string(slot));
            }
            LpSolution sol = solve_lp(model, options.lp);
            objective = sol.objective;
            wall_ms = sol.stats.wall_ms;
            lp_iters = sol.stats.lp_iterations;
            IntegerizedPlan plan = integerize(sol, model, input, catalog);
            stretch = plan.stretch;
            if (stretch > 1.0 + 1e-9)
                warnings.push_back("slot " + std::to_string(slot) +
                                   ": rescaled rates hit link capacity; deliveries "
                                   "stretched by x" + fmt(stretch, 3) +
                                   " past their deadline");
            for (size_t d = 0; d < input.demands.size(); ++d) {
                served[d] = plan.served_layers[d];
                layer_servers[d].resize(size_t(served[d]), -1);
                layer_rates[d].resize(size_t(served[d]));
                for (int l = 1; l <= served[d]; ++l) {
                    layer_servers[d][size_t(l - 1)] =
                        plan.layers[d][size_t(l - 1)].server_node;
                    layer_rates[d][size_t(l - 1)] =
                        plan.layers[d][size_t(l - 1)].rates_kbps;
                }
            }
        }
        total_wall += wall_ms;

        // Decompose each granted layer into tagged sub-flows and stage the
        // delivery wiring.
        SlotReport report;
        report.slot = slot;
        report.solver = solver;
        report.norms = input.norms;
        report.objective = objective;
        double sent_kbits = 0;
        int rule_count = 0;
        for (size_t d = 0; d < input.demands.size(); ++d) {
            const Demand& dem = input.demands[d];
            const ClientProfile& profile = profiles[size_t(dem.request.client_index)];
            double theta_eff = profile.theta_s * stretch;
            ActiveDelivery delivery;
            delivery.end_s = opt_time + theta_eff;
            for (int l = 1; l <= served[d]; ++l) {
                Rational size =
                    catalog.layer_size(profile.video, dem.request.segment, l);
                Rational target = size / Rational::from_kbps(theta_eff);
                RateGraph rg = make_rate_graph_from_solution(
                    graph, layer_rates[d][size_t(l - 1)],
                    layer_servers[d][size_t(l - 1)], profile.attach_switch, target);
                rule_count += emit_flow_config(graph, rg, slot, profile, l,
                                               layer_servers[d][size_t(l - 1)], theta_eff,
                                               rules);
                sent_kbits += size.to_double();
                for (const RateGraph::Edge& e : rg.edges()) {
                    if (e.rate_kbps.is_zero()) continue;
                    auto lid = graph.find_link(e.from, e.to);
                    if (lid.has_value()) delivery.link_rates[*lid] += e.rate_kbps;
                }
            }
            if (served[d] > 0) {
                if (delivery.end_s > (slot + 1) * tau + 1e-12) in_flight.push_back(delivery);
                PendingDelivery pd;
                pd.time_s = opt_time + theta_eff;
                pd.client_index = dem.request.client_index;
                pd.segment = dem.request.segment;
                pd.layers = served[d];
                pending.push_back(pd);
            } else {
                // Zero grant: the segment is asked for again next slot.
                ClientState& st = states[size_t(dem.request.client_index)];
                st.note_zero_grant(opt_time);
                enqueue_request(dem.request.client_index, dem.request.segment, opt_time,
                                dem.request.attempt + 1);
            }

            PerClientMetrics pm = recompute_metrics(dem, served[d], input.norms);
            ClientSlotOutcome outcome;
            outcome.client = profile.name;
            outcome.requested_layers = profile.max_layers;
            outcome.delivered_layers = served[d];
            outcome.quality_score =
                catalog.quality_of(profile.video, dem.request.segment, served[d]);
            outcome.t_norm = pm.t_norm;
            outcome.i_norm = pm.i_norm;
            outcome.n_norm = pm.n_norm;
            report.clients.push_back(std::move(outcome));
            report.phi.push_back(dem.phi);

            histories[size_t(dem.request.client_index)] =
                update_history(dem.history, served[d]);
        }
        report.sent_kbits = sent_kbits;
        report.rule_count = rule_count;
        double q = 0;
        for (const ClientSlotOutcome& c : report.clients)
            q = std::max(q, 1.0 - static_cast<double>(c.delivered_layers) /
                                      static_cast<double>(c.requested_layers));
        report.q_gap = q;
        if (qual_max > qual_min)
            fill_slot_fairness(report, qual_min, qual_max);
        else {
            fill_slot_fairness(report, 0.0, 1.0);
            report.fairness = 1.0;
        }
        slot_reports.push_back(std::move(report));
        result_slot_wall.push_back(wall_ms);
        timing_rows.push_back({double(slot), wall_ms, double(nodes)});
        lp_iter_rows.push_back(lp_iters);

        for (ClientState& st : states) st.advance(opt_time);
    }

    // Flush deliveries past the last slot and let playback drain.
    double horizon = (scenario.slots + 1) * tau;
    for (const PendingDelivery& d : pending) horizon = std::max(horizon, d.time_s);
    deliver_due(horizon + 1e-9);
    double drain = horizon;
    for (size_t i = 0; i < profiles.size(); ++i) {
        const VideoEntry& v = catalog.video(profiles[i].video);
        drain = std::max(drain, horizon + v.segments * v.segment_duration_s + 1.0);
    }
    for (ClientState& st : states) st.advance(drain);

    RunResult result;
    result.solver = solver;
    result.slots = std::move(slot_reports);
    result.any_timeout = any_timeout;
    result.total_wall_ms = total_wall;
    result.slot_wall_ms = std::move(result_slot_wall);
    result.warnings = std::move(warnings);

    for (size_t i = 0; i < profiles.size(); ++i) {
        ClientSummary cs;
        cs.client = profiles[i].name;
        cs.startup_delay_s = states[i].startup_delay_s().value_or(-1);
        cs.stall_count = states[i].stall_count();
        cs.switch_count = histories[i].cum_switches;
        cs.switch_intensity = histories[i].cum_intensity;
        cs.segments_completed = states[i].delivered_segments();
        result.summaries.push_back(std::move(cs));
        for (const ClientEvent& e : states[i].events()) {
            result.events.push_back(e);
            result.event_clients.push_back(profiles[i].name);
        }
    }
    result.qoe = compile_run_report(result.slots, result.summaries);
    result.summaries = result.qoe.clients;
    result.replay_error = replay_consistency_error(result.slots);

    // Manifest fingerprint over every input that shapes the run.
    std::uint64_t h = fnv1a(topo_text);
    h = fnv1a(cat_text, h);
    h = fnv1a(solver, h);
    h = fnv1a(std::to_string(scenario.seed), h);
    h = fnv1a(std::to_string(scenario.slots), h);
    h = fnv1a(fmt(scenario.tau_s) + fmt(scenario.alpha) + fmt(scenario.epsilon), h);
    for (const ClientProfile& c : scenario.clients)
        h = fnv1a(c.name + std::to_string(c.max_layers) + fmt(c.theta_s) +
                      std::to_string(c.join_slot) + fmt(c.beta1) + fmt(c.beta2) +
                      fmt(c.beta3),
                  h);
    result.manifest_hash = hash_hex(h);

    if (options.write_artifacts && !out_dir.empty()) {
        fs::create_directories(out_dir);
        {
            std::ofstream out(fs::path(out_dir) / "slots.csv");
            out << "slot,solver,client,requested_m,delivered,quality,T,I,N,phi,q_gap,"
                   "variance,max_gap,fairness,sent_kbits,rule_count\n";
            for (const SlotReport& r : result.slots) {
                for (size_t i = 0; i < r.clients.size(); ++i) {
                    const ClientSlotOutcome& c = r.clients[i];
                    out << r.slot << ',' << r.solver << ',' << c.client << ','
                        << c.requested_layers << ',' << c.delivered_layers << ','
                        << fmt(c.quality_score) << ',' << fmt(c.t_norm) << ','
                        << fmt(c.i_norm) << ',' << fmt(c.n_norm) << ',' << r.phi[i] << ','
                        << fmt(r.q_gap) << ',' << fmt(r.quality_variance) << ','
                        << fmt(r.max_gap) << ',' << fmt(r.fairness) << ','
                        << fmt(r.sent_kbits, 3) << ',' << r.rule_count << "\n";
                }
            }
        }
        {
            std::ofstream out(fs::path(out_dir) / "summary.csv");
            out << "client,startup_delay_s,stalls,avg_layers,avg_quality,switch_count,"
                   "switch_intensity,segments_completed\n";
            for (const ClientSummary& c : result.summaries)
                out << c.client << ',' << fmt(c.startup_delay_s) << ',' << c.stall_count
                    << ',' << fmt(c.avg_layers) << ',' << fmt(c.avg_quality) << ','
                    << c.switch_count << ',' << c.switch_intensity << ','
                    << c.segments_completed << "\n";
        }
        {
            std::ofstream out(fs::path(out_dir) / "events.csv");
            out << "client,time_s,event,segment,layers,buffer_s\n";
            for (size_t i = 0; i < result.events.size(); ++i) {
                const ClientEvent& e = result.events[i];
                out << result.event_clients[i] << ',' << fmt(e.time_s, 3) << ',' << e.kind
                    << ',' << e.segment << ',' << e.layers << ',' << fmt(e.buffer_s, 3)
                    << "\n";
            }
        }
        {
            std::ofstream out(fs::path(out_dir) / "timings.csv");
            out << "slot,solver,wall_ms,nodes,lp_iterations\n";
            for (size_t i = 0; i < timing_rows.size(); ++i)
                out << int(timing_rows[i][0]) << ',' << solver << ','
                    << fmt(timing_rows[i][1], 3) << ',' << int(timing_rows[i][2]) << ','
                    << lp_iter_rows[i] << "\n";
        }
        {
            std::ofstream out(fs::path(out_dir) / "rules.jsonl");
            for (const std::string& line : rules.rule_lines) out << line << "\n";
        }
        {
            std::ofstream out(fs::path(out_dir) / "directives.jsonl");
            for (const std::string& line : rules.directive_lines) out << line << "\n";
        }
        {
            ordered_json manifest;
            manifest["scenario"] = scenario.name;
            manifest["solver"] = solver;
            manifest["seed"] = scenario.seed;
            manifest["slots"] = scenario.slots;
            manifest["tau_s"] = scenario.tau_s;
            manifest["alpha"] = scenario.alpha;
            manifest["epsilon"] = scenario.epsilon;
            manifest["topology"] = scenario.topology_path;
            manifest["catalog"] = scenario.catalog_path;
            manifest["hash"] = result.manifest_hash;
            std::ofstream out(fs::path(out_dir) / "manifest.json");
            out << manifest.dump(2) << "\n";
        }
    }
    return result;
}

SweepResult sweep_scenario(const Scenario& scenario, const std::string& parameter,
                           const std::vector<double>& values, const std::string& client,
                           const std::string& out_dir, const RunOptions& options) {
    if (values.empty()) fail(ErrorKind::Validation, "sweep needs at least one value");
    SweepResult result;
    result.values = values;
    result.runs.resize(values.size());

    std::vector<Scenario> variants;
    for (double v : values) {
        Scenario s = scenario;
        ParameterOverride o;
        o.parameter = parameter;
        o.value = v;
        o.client = client;
        apply_override(s, o);  // validates the parameter name up front
        variants.push_back(std::move(s));
    }

    bool failed = false;
    std::string failure;
#pragma omp parallel for schedule(dynamic) if (values.size() > 1)
    for (int i = 0; i < static_cast<int>(values.size()); ++i) {
        try {
            std::string sub = out_dir.empty()
                                  ? std::string()
                                  : out_dir + "/" + parameter + "_" + fmt(values[size_t(i)], 3);
            result.runs[size_t(i)] = run_scenario(variants[size_t(i)], sub, options);
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                failure = e.what();
            }
        }
    }
    if (failed) fail(ErrorKind::Internal, "sweep run failed: " + failure);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(fs::path(out_dir) / "sweep.csv");
        out << "parameter,value,client,avg_layers,avg_quality,stalls,startup_delay_s\n";
        for (size_t i = 0; i < values.size(); ++i)
            for (const ClientSummary& c : result.runs[i].summaries)
                out << parameter << ',' << fmt(values[i], 3) << ',' << c.client << ','
                    << fmt(c.avg_layers) << ',' << fmt(c.avg_quality) << ','
                    << c.stall_count << ',' << fmt(c.startup_delay_s) << "\n";

        SvgChart chart(760, 420, parameter + " sweep: mean delivered layers per slot");
        for (size_t i = 0; i < values.size(); ++i) {
            std::vector<double> xs, ys;
            for (const SlotReport& r : result.runs[i].slots) {
                double mean = 0;
                for (const ClientSlotOutcome& c : r.clients) mean += c.delivered_layers;
                mean /= static_cast<double>(r.clients.size());
                xs.push_back(r.slot);
                ys.push_back(mean);
            }
            chart.add_series(parameter + "=" + fmt(values[i], 2), xs, ys);
        }
        chart.write(fs::path(out_dir) / "sweep.svg", "");
    }
    return result;
}

CompareResult compare_solvers(const Scenario& scenario, const std::string& out_dir,
                              const RunOptions& options) {
    CompareResult cmp;
    RunOptions milp_opts = options;
    milp_opts.solver_override = "milp";
    RunOptions lp_opts = options;
    lp_opts.solver_override = "lp";
    cmp.milp = run_scenario(scenario, out_dir.empty() ? "" : out_dir + "/milp", milp_opts);
    cmp.lp = run_scenario(scenario, out_dir.empty() ? "" : out_dir + "/lp", lp_opts);

    std::map<int, CompareRow> rows;
    auto fold = [&](const RunResult& run, bool is_milp) {
        for (size_t i = 0; i < run.slots.size(); ++i) {
            const SlotReport& r = run.slots[i];
            CompareRow& row = rows[r.slot];
            row.slot = r.slot;
            int requested = 0, delivered = 0;
            for (const ClientSlotOutcome& c : r.clients) {
                requested += c.requested_layers;
                delivered += c.delivered_layers;
            }
            if (is_milp) {
                row.requested_layers = requested;
                row.milp_objective = r.objective;
                row.milp_layers = delivered;
                row.milp_kbits = r.sent_kbits;
            } else {
                row.lp_objective = r.objective;
                row.lp_layers = delivered;
                row.lp_kbits = r.sent_kbits;
            }
        }
    };
    fold(cmp.milp, true);
    fold(cmp.lp, false);
    for (auto& [slot, row] : rows) cmp.rows.push_back(row);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(fs::path(out_dir) / "compare.csv");
        out << "slot,requested_layers,milp_objective,lp_objective,milp_layers,lp_layers,"
               "milp_kbits,lp_kbits\n";
        for (const CompareRow& r : cmp.rows)
            out << r.slot << ',' << r.requested_layers << ',' << fmt(r.milp_objective)
                << ',' << fmt(r.lp_objective) << ',' << r.milp_layers << ',' << r.lp_layers
                << ',' << fmt(r.milp_kbits, 3) << ',' << fmt(r.lp_kbits, 3) << "\n";
    }
    return cmp;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::MissingData, "missing data file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) fail(ErrorKind::MissingData, "empty data file: " + path);
    return rows;
}

std::string manifest_hash_of(const std::string& run_dir) {
    std::ifstream in(fs::path(run_dir) / "manifest.json");
    if (!in) return "";
    nlohmann::json j;
    in >> j;
    return j.value("hash", std::string());
}

}  // namespace

std::string plot_family(const std::string& run_dir, const std::string& family) {
    const std::string hash = manifest_hash_of(run_dir);
    std::string out_path = run_dir + "/" + family + ".svg";
    if (family == "delivered") {
        auto rows = read_csv(run_dir + "/slots.csv");
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
        for (size_t i = 1; i < rows.size(); ++i) {
            series[rows[i][2]].first.push_back(std::stod(rows[i][0]));
            series[rows[i][2]].second.push_back(std::stod(rows[i][4]));
        }
        SvgChart chart(760, 420, "delivered quality layers per slot");
        for (const auto& [client, xy] : series)
            chart.add_series(client, xy.first, xy.second);
        chart.write(out_path, hash);
    } else if (family == "fairness") {
        auto rows = read_csv(run_dir + "/slots.csv");
        std::map<int, std::array<double, 3>> per_slot;
        for (size_t i = 1; i < rows.size(); ++i)
            per_slot[std::stoi(rows[i][0])] = {std::stod(rows[i][11]),
                                               std::stod(rows[i][12]),
                                               std::stod(rows[i][13])};
        std::vector<double> xs, var, gap, fair;
        for (const auto& [slot, v] : per_slot) {
            xs.push_back(slot);
            var.push_back(v[0]);
            gap.push_back(v[1]);
            fair.push_back(v[2]);
        }
        SvgChart chart(760, 420, "fairness per slot");
        chart.add_series("variance", xs, var);
        chart.add_series("max_gap", xs, gap);
        chart.add_series("f_index", xs, fair);
        chart.write(out_path, hash);
    } else if (family == "compare") {
        auto rows = read_csv(run_dir + "/compare.csv");
        std::vector<double> xs, milp_kb, lp_kb, milp_l, lp_l;
        for (size_t i = 1; i < rows.size(); ++i) {
            xs.push_back(std::stod(rows[i][0]));
            milp_l.push_back(std::stod(rows[i][4]));
            lp_l.push_back(std::stod(rows[i][5]));
            milp_kb.push_back(std::stod(rows[i][6]) / 1000.0);
            lp_kb.push_back(std::stod(rows[i][7]) / 1000.0);
        }
        SvgChart chart(760, 420, "solver routes: layers and sent data (Mbit)");
        chart.add_series("exact_layers", xs, milp_l);
        chart.add_series("relaxed_layers", xs, lp_l);
        chart.add_series("exact_mbit", xs, milp_kb);
        chart.add_series("relaxed_mbit", xs, lp_kb);
        chart.write(out_path, hash);
    } else {
        fail(ErrorKind::Validation, "unknown figure family: " + family);
    }
    return out_path;
}

}  // namespace svcflow
