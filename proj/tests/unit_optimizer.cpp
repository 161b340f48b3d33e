#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "svcflow/errors.hpp"
#include "svcflow/optimizer.hpp"
#include "oracles.hpp"

using namespace svcflow;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(SVCFLOW_DATA_DIR) + "/" + name);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ClientProfile make_profile(const NetworkGraph& g, const std::string& name,
                           const std::string& video, int m, double theta, int join) {
    ClientProfile p;
    p.name = name;
    p.video = video;
    p.max_layers = m;
    p.theta_s = theta;
    p.join_slot = join;
    p.node = g.node_index(name);
    p.attach_switch = g.attach_switch(p.node);
    return p;
}

SlotRequest make_request(int client, int segment) {
    SlotRequest r;
    r.id = client + 1;
    r.client_index = client;
    r.segment = segment;
    return r;
}

// srv -> s0 -> s1 -> c with one capacity-limited core link.
struct SingleClientWorld {
    NetworkGraph graph;
    Catalog catalog;
    std::vector<ClientProfile> profiles;
    std::vector<ClientHistory> histories;

    SingleClientWorld(double core_kbps, int max_layers, double theta = 1.0)
        : graph(load_topology(std::string(R"({"nodes":[
            {"name":"srv","role":"server"},{"name":"s0","role":"switch"},
            {"name":"s1","role":"switch"},{"name":"c","role":"client"}],
            "links":[{"from":"srv","to":"s0","kbps":"unbounded"},
                     {"from":"s0","to":"s1","kbps":)") +
                              std::to_string(core_kbps) +
                              R"(},{"from":"s1","to":"c","kbps":"unbounded"}]})")),
          catalog(load_catalog(R"({"video":"clip","segment_duration_s":4,"segments":3,
            "layers":[{"cumulative_kbps":500,"quality":0.7},
                      {"cumulative_kbps":1000,"quality":0.9}],
            "availability":{"srv":2}})")) {
        profiles.push_back(make_profile(graph, "c", "clip", max_layers, theta, 1));
        histories.emplace_back();
    }

    SlotInput input(int slot = 1) {
        CapacitySnapshot snap = snapshot_bandwidth(graph, {});
        return gather(slot, 2.0, {make_request(0, 1)}, profiles, histories, catalog,
                      graph, snap);
    }
};

}  // namespace

// layer sizes: 500*4 = 2000 kbits, 500*4 = 2000 kbits; theta=1 -> 2000 kbps/layer
TEST_CASE("forced single-client model serves iff capacity admits the rate") {
    OptimizerWeights w;
    SUBCASE("capacity covers one layer only") {
        SingleClientWorld world(2000, 1);
        MilpModel model = build_milp(world.input(), world.graph, world.catalog, w);
        MilpSolution sol = solve_milp(model);
        CHECK(sol.status == SolveStatus::Optimal);
        CHECK(sol.served_layers[0] == 1);
        CHECK(sol.q_gap == doctest::Approx(0.0));
        // the single layer's flow uses exactly size/theta on the core link
        const auto& rates = sol.layer_rates_kbps[0];
        double total = 0;
        for (const auto& [lid, r] : rates)
            if (!world.graph.link(lid).unbounded) total += r;
        CHECK(total == doctest::Approx(2000.0).epsilon(1e-6));
    }
    SUBCASE("capacity below the base-layer rate leaves the client unserved") {
        SingleClientWorld world(1999, 1);
        MilpModel model = build_milp(world.input(), world.graph, world.catalog, w);
        MilpSolution sol = solve_milp(model);
        CHECK(sol.served_layers[0] == 0);
        CHECK(sol.q_gap == doctest::Approx(1.0));
    }
    SUBCASE("two layers fit at 4000 kbps") {
        SingleClientWorld world(4000, 2);
        MilpModel model = build_milp(world.input(), world.graph, world.catalog, w);
        MilpSolution sol = solve_milp(model);
        CHECK(sol.served_layers[0] == 2);
    }
}

TEST_CASE("model variable count follows the closed form") {
    NetworkGraph graph = load_topology(slurp("default_topology.json"));
    Catalog catalog = load_catalog(slurp("catalog_main.json"));
    std::vector<ClientProfile> profiles;
    std::vector<ClientHistory> histories;
    int idx = 0;
    for (auto [name, m] : {std::pair{"c1", 4}, {"c2", 4}, {"c3", 3}, {"c4", 2}, {"c5", 4}}) {
        profiles.push_back(make_profile(graph, name, "factory", m, 1.0, 1));
        histories.emplace_back();
        ++idx;
    }
    std::vector<SlotRequest> reqs;
    for (int c = 0; c < 5; ++c) reqs.push_back(make_request(c, 1));
    CapacitySnapshot snap = snapshot_bandwidth(graph, {});
    SlotInput input = gather(6, 2.0, reqs, profiles, histories, catalog, graph, snap);
    MilpModel model = build_milp(input, graph, catalog, {});

    // independent enumeration of the expected count
    int sum_m = 4 + 4 + 3 + 2 + 4;
    int expected = sum_m * (2 + graph.link_count())  // selections + per-layer rates
                   + 4 * 5                           // z, T, I, N per client
                   + 5                               // oscillation flags
                   + 1;                              // the shared gap variable
    CHECK(model.variable_count == expected);
    CHECK(model.prog.num_variables() == expected);
}

TEST_CASE("zero-capacity network serves nothing and prices the full gap") {
    SingleClientWorld world(0, 2);
    // histories such that the floors of I and N are visible
    world.histories[0].cum_layers = 3;
    world.histories[0].cum_intensity = 1;
    world.histories[0].cum_switches = 1;
    world.histories[0].last_layers = 2;
    world.histories[0].requests_done = 2;
    OptimizerWeights w;
    SlotInput input = world.input(3);
    MilpModel model = build_milp(input, world.graph, world.catalog, w);
    MilpSolution sol = solve_milp(model);
    CHECK(sol.served_layers[0] == 0);

    // closed-form objective: alpha*1 + (b1*I + b2*N - b3*T)
    const Demand& dem = input.demands[0];
    double phi = 3;
    double t_norm = (3.0 + 0) / (phi * input.norms.t_max);
    double i_norm = (1.0 + 2) / (phi * input.norms.i_max);  // z = |0 - 2|
    double n_norm = (1.0 + 1) / (phi * input.norms.n_max);
    double expect = w.alpha * 1.0 + dem.profile.beta1 * i_norm +
                    dem.profile.beta2 * n_norm - dem.profile.beta3 * t_norm;
    CHECK(sol.objective == doctest::Approx(expect).epsilon(1e-9));
    CHECK(sol.nu[0] == 1);
    CHECK(sol.t_norm[0] == doctest::Approx(t_norm));
}

TEST_CASE("branch and bound matches exhaustive enumeration on small instances") {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<int> servers_d(1, 2), clients_d(1, 2), m_d(1, 2);
    std::uniform_int_distribution<int> cap_d(300, 3000);
    std::uniform_real_distribution<double> w_d(0.05, 1.0);
    int agreements = 0;
    for (int trial = 0; trial < 12; ++trial) {
        int num_servers = servers_d(rng), num_clients = clients_d(rng);
        std::ostringstream topo;
        topo << R"({"nodes":[{"name":"x1","role":"switch"},{"name":"x2","role":"switch"})";
        for (int s = 0; s < num_servers; ++s)
            topo << R"(,{"name":"srv)" << s << R"(","role":"server"})";
        for (int c = 0; c < num_clients; ++c)
            topo << R"(,{"name":"c)" << c << R"(","role":"client"})";
        topo << R"(],"links":[{"from":"x1","to":"x2","kbps":)" << cap_d(rng) << "}";
        for (int s = 0; s < num_servers; ++s)
            topo << R"(,{"from":"srv)" << s << R"(","to":"x1","kbps":)" << cap_d(rng)
                 << "}";
        for (int c = 0; c < num_clients; ++c)
            topo << R"(,{"from":"x2","to":"c)" << c << R"(","kbps":"unbounded"})";
        topo << "]}";
        NetworkGraph graph = load_topology(topo.str());

        std::ostringstream cat;
        cat << R"({"video":"v","segment_duration_s":2,"segments":1,"layers":[
             {"cumulative_kbps":400,"quality":0.6},{"cumulative_kbps":900,"quality":0.9}],
             "availability":{)";
        for (int s = 0; s < num_servers; ++s) {
            if (s) cat << ',';
            cat << "\"srv" << s << "\":" << m_d(rng);
        }
        cat << "}}";
        Catalog catalog = load_catalog(cat.str());

        std::vector<ClientProfile> profiles;
        std::vector<ClientHistory> histories;
        for (int c = 0; c < num_clients; ++c) {
            ClientProfile p = make_profile(graph, "c" + std::to_string(c), "v", m_d(rng),
                                           1.0, 1);
            p.beta1 = w_d(rng);
            p.beta2 = w_d(rng);
            p.beta3 = w_d(rng);
            profiles.push_back(p);
            ClientHistory h;
            if (trial % 2) {
                h.cum_layers = trial % 5;
                h.last_layers = trial % 3;
                h.requests_done = 1 + trial % 4;
            }
            histories.push_back(h);
        }
        std::vector<SlotRequest> reqs;
        for (int c = 0; c < num_clients; ++c) reqs.push_back(make_request(c, 1));
        CapacitySnapshot snap = snapshot_bandwidth(graph, {});
        SlotInput input = gather(1, 2.0, reqs, profiles, histories, catalog, graph, snap);
        if (input.servers.empty()) continue;

        OptimizerWeights w;
        w.alpha = w_d(rng);
        w.epsilon = w_d(rng);
        MilpModel model = build_milp(input, graph, catalog, w);
        MilpSolution sol = solve_milp(model);
        REQUIRE(sol.status == SolveStatus::Optimal);

        oracles::BruteResult brute =
            oracles::brute_force_selection(input, graph, catalog, w);
        REQUIRE(brute.feasible);
        CHECK(sol.objective == doctest::Approx(brute.objective).epsilon(1e-6));
        ++agreements;
    }
    CHECK(agreements >= 10);
}

TEST_CASE("relaxation stays below the exact optimum on equal layer sizes") {
    std::mt19937_64 rng(321);
    std::uniform_int_distribution<int> cap_d(500, 6000), m_d(1, 3);
    for (int trial = 0; trial < 10; ++trial) {
        std::ostringstream topo;
        topo << R"({"nodes":[{"name":"x1","role":"switch"},{"name":"x2","role":"switch"},
            {"name":"srv0","role":"server"},{"name":"srv1","role":"server"},
            {"name":"ca","role":"client"},{"name":"cb","role":"client"}],
            "links":[{"from":"x1","to":"x2","kbps":)"
             << cap_d(rng) << R"(},{"from":"srv0","to":"x1","kbps":)" << cap_d(rng)
             << R"(},{"from":"srv1","to":"x1","kbps":)" << cap_d(rng)
             << R"(},{"from":"x2","to":"ca","kbps":"unbounded"},
                 {"from":"x2","to":"cb","kbps":"unbounded"}]})";
        NetworkGraph graph = load_topology(topo.str());
        // equal layer sizes: every layer adds the same bitrate
        Catalog catalog = load_catalog(R"({"video":"v","segment_duration_s":2,"segments":1,
            "layers":[{"cumulative_kbps":400,"quality":0.5},
                      {"cumulative_kbps":800,"quality":0.7},
                      {"cumulative_kbps":1200,"quality":0.9}],
            "availability":{"srv0":3,"srv1":3}})");
        std::vector<ClientProfile> profiles{make_profile(graph, "ca", "v", m_d(rng), 1.0, 1),
                                            make_profile(graph, "cb", "v", m_d(rng), 1.0, 1)};
        std::vector<ClientHistory> histories(2);
        if (trial % 2) {
            histories[0].cum_layers = 2;
            histories[0].last_layers = 2;
            histories[0].requests_done = 1;
        }
        CapacitySnapshot snap = snapshot_bandwidth(graph, {});
        SlotInput input = gather(1, 2.0, {make_request(0, 1), make_request(1, 1)},
                                 profiles, histories, catalog, graph, snap);
        OptimizerWeights w;
        MilpModel milp = build_milp(input, graph, catalog, w);
        MilpSolution exact = solve_milp(milp);

        NetworkGraph aug = augment_virtual_server(graph, input.servers);
        LpRelaxModel relax = build_lp(input, aug, catalog, w);
        LpSolution lp = solve_lp(relax);
        CHECK(lp.objective <= exact.objective + 1e-6);
    }
}

namespace {

double max_row_violation(const LinearProgram& prog, const std::vector<double>& x) {
    double worst = 0;
    for (const LinearProgram::Row& row : prog.rows()) {
        double lhs = 0;
        for (const auto& [var, coeff] : row.terms) lhs += coeff * x.at(size_t(var));
        switch (row.sense) {
            case RowSense::LessEq: worst = std::max(worst, lhs - row.rhs); break;
            case RowSense::GreaterEq: worst = std::max(worst, row.rhs - lhs); break;
            case RowSense::Equal: worst = std::max(worst, std::fabs(lhs - row.rhs)); break;
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("an exact solution maps onto a relaxation point of equal objective") {
    // With equal layer sizes, chi = sum of selections and per-client flows =
    // summed per-layer flows give a feasible relaxation point whose objective
    // matches; the relaxation optimum therefore never exceeds the exact one.
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<int> cap_d(600, 5000), m_d(1, 3);
    int mapped = 0;
    for (int trial = 0; trial < 8; ++trial) {
        std::ostringstream topo;
        topo << R"({"nodes":[{"name":"x1","role":"switch"},{"name":"x2","role":"switch"},
            {"name":"srv0","role":"server"},{"name":"srv1","role":"server"},
            {"name":"ca","role":"client"},{"name":"cb","role":"client"}],
            "links":[{"from":"x1","to":"x2","kbps":)"
             << cap_d(rng) << R"(},{"from":"srv0","to":"x1","kbps":)" << cap_d(rng)
             << R"(},{"from":"srv1","to":"x1","kbps":)" << cap_d(rng)
             << R"(},{"from":"x2","to":"ca","kbps":"unbounded"},
                 {"from":"x2","to":"cb","kbps":"unbounded"}]})";
        NetworkGraph graph = load_topology(topo.str());
        Catalog catalog = load_catalog(R"({"video":"v","segment_duration_s":2,"segments":1,
            "layers":[{"cumulative_kbps":400,"quality":0.5},
                      {"cumulative_kbps":800,"quality":0.7},
                      {"cumulative_kbps":1200,"quality":0.9}],
            "availability":{"srv0":3,"srv1":3}})");
        std::vector<ClientProfile> profiles{make_profile(graph, "ca", "v", m_d(rng), 1.0, 1),
                                            make_profile(graph, "cb", "v", m_d(rng), 1.0, 1)};
        std::vector<ClientHistory> histories(2);
        histories[0].cum_layers = trial % 4;
        histories[0].last_layers = trial % 2;
        histories[0].requests_done = trial % 3;
        CapacitySnapshot snap = snapshot_bandwidth(graph, {});
        SlotInput input = gather(1, 2.0, {make_request(0, 1), make_request(1, 1)},
                                 profiles, histories, catalog, graph, snap);
        OptimizerWeights w;
        MilpModel milp = build_milp(input, graph, catalog, w);
        MilpSolution exact = solve_milp(milp);

        NetworkGraph aug = augment_virtual_server(graph, input.servers);
        LpRelaxModel relax = build_lp(input, aug, catalog, w);

        // map the exact solution into the relaxation's variable space
        std::vector<double> x(size_t(relax.prog.num_variables()), 0.0);
        for (size_t d = 0; d < input.demands.size(); ++d) {
            const Demand& dem = input.demands[d];
            double chi = exact.served_layers[d];
            x[size_t(relax.chi_var[d])] = chi;
            x[size_t(relax.t_qual[d])] = exact.t_norm[d];
            x[size_t(relax.i_qual[d])] = exact.i_norm[d];
            x[size_t(relax.n_qual[d])] = exact.n_norm[d];
            x[size_t(relax.nu_var[d])] = exact.nu[d];
            if (!dem.history.first_request())
                x[size_t(relax.z_var[d])] = std::fabs(chi - dem.history.last_layers);
            for (int l = 1; l <= exact.served_layers[d]; ++l) {
                int pair = milp.pair_index(static_cast<int>(d), l);
                for (const auto& [lid, kbps] : exact.layer_rates_kbps[size_t(pair)])
                    x[size_t(relax.t_var[d][size_t(lid)])] += kbps / kModelRateUnitKbps;
                // feed the serving server through the virtual hop
                int server = exact.layer_server[d][size_t(l - 1)];
                auto vs_link = aug.find_link(relax.source_node, server);
                REQUIRE(vs_link.has_value());
                double rate_mbps =
                    catalog.layer_size(dem.profile.video, dem.request.segment, l)
                        .to_double() /
                    dem.profile.theta_s / kModelRateUnitKbps;
                x[size_t(relax.t_var[d][size_t(*vs_link)])] += rate_mbps;
            }
        }
        x[size_t(relax.q_var)] = exact.q_gap;

        CHECK(max_row_violation(relax.prog, x) < 1e-6);
        CHECK(relax.prog.objective_value(x) == doctest::Approx(exact.objective).epsilon(1e-6));
        LpSolution lp = solve_lp(relax);
        CHECK(lp.objective <= exact.objective + 1e-6);
        ++mapped;
    }
    CHECK(mapped == 8);
}

TEST_CASE("relaxation through one virtual server equals the direct-source model") {
    SingleClientWorld world(1500, 2);
    SlotInput input = world.input();
    OptimizerWeights w;
    NetworkGraph aug = augment_virtual_server(world.graph, input.servers);
    LpRelaxModel via_virtual = build_lp(input, aug, world.catalog, w);
    LpSolution a = solve_lp(via_virtual);

    // testing hook: source the flow at the lone real server, no virtual node
    LpRelaxModel direct =
        build_lp(input, world.graph, world.catalog, w, world.graph.node_index("srv"));
    LpSolution b = solve_lp(direct);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
    CHECK(a.chi[0] == doctest::Approx(b.chi[0]).epsilon(1e-9));
}

TEST_CASE("relaxed quality hits the capacity-scaled fraction") {
    // avg layer size = 2000 kbits, theta 1s: chi = cap / 2000
    SUBCASE("capacity ample") {
        SingleClientWorld world(5000, 2);
        SlotInput input = world.input();
        NetworkGraph aug = augment_virtual_server(world.graph, input.servers);
        LpRelaxModel model = build_lp(input, aug, world.catalog, {});
        LpSolution sol = solve_lp(model);
        CHECK(sol.chi[0] == doctest::Approx(2.0));
    }
    SUBCASE("capacity binds") {
        SingleClientWorld world(3000, 2);
        SlotInput input = world.input();
        NetworkGraph aug = augment_virtual_server(world.graph, input.servers);
        LpRelaxModel model = build_lp(input, aug, world.catalog, {});
        LpSolution sol = solve_lp(model);
        CHECK(sol.chi[0] == doctest::Approx(1.5));
    }
    SUBCASE("zero capacity") {
        SingleClientWorld world(0, 2);
        SlotInput input = world.input();
        NetworkGraph aug = augment_virtual_server(world.graph, input.servers);
        LpRelaxModel model = build_lp(input, aug, world.catalog, {});
        LpSolution sol = solve_lp(model);
        CHECK(sol.chi[0] == doctest::Approx(0.0));
    }
}

TEST_CASE("integerize floors fractional qualities and rescales flows") {
    SUBCASE("chi = 1.5 keeps one layer") {
        SingleClientWorld world(3000, 2);
        SlotInput input = world.input();
        NetworkGraph aug = augment_virtual_server(world.graph, input.servers);
        LpRelaxModel model = build_lp(input, aug, world.catalog, {});
        LpSolution sol = solve_lp(model);
        REQUIRE(sol.chi[0] == doctest::Approx(1.5));
        IntegerizedPlan plan = integerize(sol, model, input, world.catalog);
        CHECK(plan.served_layers[0] == 1);
        REQUIRE(plan.layers[0].size() == 1);
        // uniform sizes: the layer flow carries size/theta = 2000 kbps
        double total = 0;
        for (const auto& [lid, r] : plan.layers[0][0].rates_kbps)
            if (!world.graph.link(lid).unbounded) total += r;
        CHECK(total == doctest::Approx(2000.0).epsilon(1e-6));
        CHECK(plan.stretch == doctest::Approx(1.0));
    }
    SUBCASE("chi below one layer keeps nothing") {
        SingleClientWorld world(1500, 2);
        SlotInput input = world.input();
        NetworkGraph aug = augment_virtual_server(world.graph, input.servers);
        LpRelaxModel model = build_lp(input, aug, world.catalog, {});
        LpSolution sol = solve_lp(model);
        REQUIRE(sol.chi[0] == doctest::Approx(0.75));
        IntegerizedPlan plan = integerize(sol, model, input, world.catalog);
        CHECK(plan.served_layers[0] == 0);
        CHECK(plan.layers[0].empty());
    }
    SUBCASE("integral chi keeps the relaxation's flow unchanged") {
        SingleClientWorld world(4000, 2);
        SlotInput input = world.input();
        NetworkGraph aug = augment_virtual_server(world.graph, input.servers);
        LpRelaxModel model = build_lp(input, aug, world.catalog, {});
        LpSolution sol = solve_lp(model);
        REQUIRE(sol.chi[0] == doctest::Approx(2.0));
        IntegerizedPlan plan = integerize(sol, model, input, world.catalog);
        CHECK(plan.served_layers[0] == 2);
        double total = 0;
        for (const LayerFlow& lf : plan.layers[0])
            for (const auto& [lid, r] : lf.rates_kbps)
                if (!world.graph.link(lid).unbounded) total += r;
        CHECK(total == doctest::Approx(4000.0).epsilon(1e-6));  // scale factor 1
    }
}

TEST_CASE("solutions satisfy the structural invariants") {
    std::mt19937_64 rng(55);
    NetworkGraph graph = load_topology(slurp("default_topology.json"));
    Catalog catalog = load_catalog(slurp("catalog_main.json"));
    std::uniform_int_distribution<int> m_d(1, 4), hist_d(0, 4);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<ClientProfile> profiles;
        std::vector<ClientHistory> histories;
        int idx = 0;
        for (const char* name : {"c1", "c2", "c3", "c4", "c5"}) {
            profiles.push_back(make_profile(graph, name, "factory", m_d(rng), 1.0, 1));
            ClientHistory h;
            if (trial) {
                h.cum_layers = hist_d(rng);
                h.last_layers = hist_d(rng) % (profiles.back().max_layers + 1);
                h.requests_done = 1;
            }
            histories.push_back(h);
            ++idx;
        }
        std::vector<SlotRequest> reqs;
        for (int c = 0; c < 5; ++c) reqs.push_back(make_request(c, 1 + trial));
        CapacitySnapshot snap = snapshot_bandwidth(graph, {});
        SlotInput input = gather(1 + trial, 2.0, reqs, profiles, histories, catalog,
                                 graph, snap);
        MilpModel model = build_milp(input, graph, catalog, {});
        MilpSolution sol = solve_milp(model);
        REQUIRE(sol.status == SolveStatus::Optimal);

        // prefix grants, metric ranges, flow conservation, capacity
        for (size_t d = 0; d < input.demands.size(); ++d) {
            CHECK(sol.served_layers[d] >= 0);
            CHECK(sol.served_layers[d] <= input.demands[d].profile.max_layers);
            CHECK(sol.t_norm[d] >= -1e-9);
            CHECK(sol.t_norm[d] <= 1 + 1e-9);
            CHECK(sol.i_norm[d] <= 1 + 1e-9);
            CHECK(sol.n_norm[d] <= 1 + 1e-9);
            CHECK((sol.nu[d] == 0 || sol.nu[d] == 1));
        }
        CHECK(sol.q_gap >= -1e-9);
        CHECK(sol.q_gap <= 1 + 1e-9);

        std::map<int, double> link_load;
        for (size_t p = 0; p < model.pairs.size(); ++p) {
            auto [d, l] = model.pairs[p];
            if (l > sol.served_layers[size_t(d)]) continue;
            const Demand& dem = input.demands[size_t(d)];
            double theta = dem.profile.theta_s;
            // conservation within 1e-6 kbps at every non-terminal node
            std::vector<double> balance(size_t(graph.node_count()), 0.0);
            for (const auto& [lid, rate] : sol.layer_rates_kbps[p]) {
                balance[size_t(graph.link(lid).from)] += rate;
                balance[size_t(graph.link(lid).to)] -= rate;
                link_load[lid] += rate;
            }
            double size_rate =
                catalog.layer_size(dem.profile.video, dem.request.segment, l).to_double() /
                theta;
            int server = sol.layer_server[size_t(d)][size_t(l - 1)];
            for (const Node& node : graph.nodes()) {
                double expect = 0;
                if (node.id == server) expect = size_rate;
                if (node.id == dem.profile.attach_switch) expect = -size_rate;
                CHECK(std::fabs(balance[size_t(node.id)] - expect) < 1e-6);
            }
        }
        for (const auto& [lid, load] : link_load) {
            if (graph.link(lid).unbounded) continue;
            CHECK(load <= graph.link(lid).capacity_kbps.to_double() + 1e-6);
        }
    }
}

TEST_CASE("monotonicity probes on the fixed fleet") {
    NetworkGraph graph = load_topology(slurp("default_topology.json"));
    Catalog catalog = load_catalog(slurp("catalog_main.json"));
    std::vector<ClientProfile> profiles;
    std::vector<ClientHistory> histories;
    for (auto [name, m] : {std::pair{"c1", 4}, {"c2", 4}, {"c3", 3}, {"c4", 2}, {"c5", 4}}) {
        profiles.push_back(make_profile(graph, name, "factory", m, 1.0, 1));
        histories.emplace_back();
    }
    // c1 and c2 carry history, c3..c5 are new (the congested-join picture)
    histories[0] = {20, 0, 0, 4, 5};
    histories[1] = {8, 0, 0, 4, 2};
    std::vector<SlotRequest> reqs;
    for (int c = 0; c < 5; ++c) reqs.push_back(make_request(c, 1));
    CapacitySnapshot snap = snapshot_bandwidth(graph, {});

    auto solve_with = [&](double alpha, double beta3_c2) {
        std::vector<ClientProfile> p = profiles;
        p[1].beta3 = beta3_c2;
        SlotInput input = gather(6, 2.0, reqs, p, histories, catalog, graph, snap);
        OptimizerWeights w;
        w.alpha = alpha;
        MilpModel model = build_milp(input, graph, catalog, w);
        return solve_milp(model);
    };

    SUBCASE("raising the c2 quality weight never lowers c2's share") {
        double last = -1;
        for (double b3 : {1.0, 2.0, 3.0}) {
            MilpSolution sol = solve_with(1.0, b3);
            CHECK(sol.t_norm[1] >= last - 1e-9);
            last = sol.t_norm[1];
        }
    }
    SUBCASE("raising the fairness weight never widens the worst gap") {
        double last = 2;
        for (double alpha : {0.1, 0.5, 1.0}) {
            MilpSolution sol = solve_with(alpha, 1.0);
            CHECK(sol.q_gap <= last + 1e-9);
            last = sol.q_gap;
        }
    }
}

TEST_CASE("deterministic search: identical incumbent traces across runs") {
    SingleClientWorld world(3000, 2);
    SlotInput input = world.input();
    MilpModel model = build_milp(input, world.graph, world.catalog, {});
    MilpSolution a = solve_milp(model);
    MilpSolution b = solve_milp(model);
    REQUIRE(a.stats.incumbent_trace.size() == b.stats.incumbent_trace.size());
    for (size_t i = 0; i < a.stats.incumbent_trace.size(); ++i) {
        CHECK(a.stats.incumbent_trace[i].first == b.stats.incumbent_trace[i].first);
        CHECK(a.stats.incumbent_trace[i].second == b.stats.incumbent_trace[i].second);
    }
    CHECK(a.objective == b.objective);
    CHECK(a.stats.nodes == b.stats.nodes);
}

TEST_CASE("build_milp rejects broken inputs") {
    SingleClientWorld world(1000, 1);
    SlotInput empty;
    CHECK_THROWS_AS(build_milp(empty, world.graph, world.catalog, {}), Error);
    SlotInput input = world.input();
    OptimizerWeights bad;
    bad.alpha = -1;
    CHECK_THROWS_AS(build_milp(input, world.graph, world.catalog, bad), Error);
}
