#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "svcflow/errors.hpp"
#include "svcflow/slot.hpp"

using namespace svcflow;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(SVCFLOW_DATA_DIR) + "/" + name);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Fixture {
    NetworkGraph graph = load_topology(slurp("default_topology.json"));
    Catalog catalog = load_catalog(slurp("catalog_main.json"));
    std::vector<ClientProfile> profiles;
    std::vector<ClientHistory> histories;

    Fixture() {
        int id = 0;
        for (auto [name, m, join] :
             {std::tuple{"c1", 4, 1}, {"c2", 4, 4}, {"c3", 3, 6}, {"c4", 2, 6},
              {"c5", 4, 6}}) {
            ClientProfile p;
            p.name = name;
            p.video = "factory";
            p.max_layers = m;
            p.theta_s = 1.0;
            p.join_slot = join;
            p.node = graph.node_index(name);
            p.attach_switch = graph.attach_switch(p.node);
            profiles.push_back(p);
            histories.emplace_back();
            ++id;
        }
        (void)id;
    }

    SlotRequest request(int client, int segment) const {
        SlotRequest r;
        r.id = client + 1;
        r.client_index = client;
        r.segment = segment;
        return r;
    }
};

}  // namespace

TEST_CASE("history updates follow the accumulator rules") {
    ClientHistory h;
    h.cum_layers = 4;
    h.last_layers = 4;
    h.requests_done = 1;

    SUBCASE("a drop from 4 to 2 counts intensity and one switch") {
        ClientHistory u = update_history(h, 2);
        CHECK(u.cum_layers == 6);
        CHECK(u.cum_intensity == 2);
        CHECK(u.cum_switches == 1);
        CHECK(u.last_layers == 2);
        CHECK(u.requests_done == 2);
    }
    SUBCASE("delivering the previous count changes nothing but totals") {
        ClientHistory u = update_history(h, 4);
        CHECK(u.cum_intensity == 0);
        CHECK(u.cum_switches == 0);
        CHECK(u.last_layers == 4);
    }
    SUBCASE("the first-ever grant seeds the baseline without a switch") {
        ClientHistory fresh;
        ClientHistory u = update_history(fresh, 3);
        CHECK(u.cum_layers == 3);
        CHECK(u.cum_intensity == 0);
        CHECK(u.cum_switches == 0);
        CHECK(u.last_layers == 3);
        CHECK(u.requests_done == 1);
    }
}

TEST_CASE("history replay is deterministic") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> d(0, 4);
    std::vector<int> grants;
    for (int i = 0; i < 40; ++i) grants.push_back(d(rng));
    ClientHistory a, b;
    for (int g : grants) a = update_history(a, g);
    for (int g : grants) b = update_history(b, g);
    CHECK(a.cum_layers == b.cum_layers);
    CHECK(a.cum_intensity == b.cum_intensity);
    CHECK(a.cum_switches == b.cum_switches);
    CHECK(a.last_layers == b.last_layers);
    CHECK(a.requests_done == b.requests_done);
    CHECK(a.cum_switches <= a.requests_done);
}

TEST_CASE("gather batches the slot-6 fleet") {
    Fixture fx;
    CapacitySnapshot snap = snapshot_bandwidth(fx.graph, {});

    // continuing clients have some history by slot 6
    fx.histories[0].cum_layers = 20;
    fx.histories[0].last_layers = 4;
    fx.histories[0].requests_done = 5;
    fx.histories[1].cum_layers = 8;
    fx.histories[1].last_layers = 4;
    fx.histories[1].requests_done = 2;

    std::vector<SlotRequest> reqs;
    reqs.push_back(fx.request(0, 6));
    reqs.push_back(fx.request(1, 3));
    for (int c : {2, 3, 4}) reqs.push_back(fx.request(c, 1));

    SlotInput input =
        gather(6, 2.0, reqs, fx.profiles, fx.histories, fx.catalog, fx.graph, snap);
    CHECK(input.demands.size() == 5);
    CHECK(input.servers.size() == 2);
    CHECK(input.norms.t_max == 24);  // c1: 20 cumulative + 4 supported
    CHECK(input.norms.i_max == 4);
    CHECK(input.norms.n_max == 1);
    CHECK(input.demands[0].phi == 6);
    CHECK(input.demands[2].phi == 1);
    CHECK(input.demands[2].history.first_request());
}

TEST_CASE("a fresh client contributes join-time normalizers") {
    Fixture fx;
    CapacitySnapshot snap = snapshot_bandwidth(fx.graph, {});
    SlotInput input = gather(1, 2.0, {fx.request(0, 1)}, fx.profiles, fx.histories,
                             fx.catalog, fx.graph, snap);
    CHECK(input.norms.t_max == 4);  // 0 history + m = 4
    CHECK(input.norms.i_max == 4);
    CHECK(input.norms.n_max == 1);
}

TEST_CASE("gather rejects unknown clients and segments") {
    Fixture fx;
    CapacitySnapshot snap = snapshot_bandwidth(fx.graph, {});
    SlotRequest bad_client = fx.request(0, 1);
    bad_client.client_index = 99;
    CHECK_THROWS_AS(gather(1, 2.0, {bad_client}, fx.profiles, fx.histories, fx.catalog,
                           fx.graph, snap),
                    Error);
    SlotRequest bad_segment = fx.request(0, 42);
    CHECK_THROWS_AS(gather(1, 2.0, {bad_segment}, fx.profiles, fx.histories, fx.catalog,
                           fx.graph, snap),
                    Error);
}

TEST_CASE("empty slots produce an empty input") {
    Fixture fx;
    CapacitySnapshot snap = snapshot_bandwidth(fx.graph, {});
    SlotInput input =
        gather(3, 2.0, {}, fx.profiles, fx.histories, fx.catalog, fx.graph, snap);
    CHECK(input.empty());
}

TEST_CASE("candidate servers track availability") {
    Fixture fx;
    // srvB holds nothing of this video
    Catalog partial = load_catalog(R"({"video":"factory","segment_duration_s":5,
        "segments":12,
        "layers":[{"cumulative_kbps":650,"quality":0.8},
                  {"cumulative_kbps":1100,"quality":0.88}],
        "availability":{"srvA":2,"srvB":0}})");
    CapacitySnapshot snap = snapshot_bandwidth(fx.graph, {});
    fx.profiles[0].max_layers = 2;
    SlotInput input = gather(1, 2.0, {fx.request(0, 1)}, fx.profiles, fx.histories,
                             partial, fx.graph, snap);
    REQUIRE(input.servers.size() == 1);
    CHECK(fx.graph.node(input.servers[0]).name == "srvA");
}

TEST_CASE("stall-safe deadline") {
    CHECK(stall_safe_deadline(5.0, 2.0) == doctest::Approx(3.0));
    CHECK(stall_safe_deadline(10.0, 2.0) == doctest::Approx(8.0));
    CHECK_THROWS_AS(stall_safe_deadline(5.0, 5.0), Error);
}
