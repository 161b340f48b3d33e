#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "svcflow/catalog.hpp"
#include "svcflow/errors.hpp"
#include "svcflow/graph.hpp"
#include "svcflow/rational.hpp"

using namespace svcflow;

namespace {

std::string data_file(const std::string& name) {
    return std::string(SVCFLOW_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("rational arithmetic is exact") {
    Rational a(1, 3), b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2));
    CHECK(Rational(-4, 8) == Rational(-1, 2));
    CHECK(Rational(3, -6) == Rational(-1, 2));
    CHECK(Rational(1, 3) + Rational(2, 3) == Rational(1));
    CHECK(Rational::from_kbps(0.001) == Rational(1, 1000));
    CHECK(Rational::from_kbps(8000.0) == Rational(8000));
    CHECK(Rational(5, 2).to_double() == doctest::Approx(2.5));
    CHECK(Rational(1, 2) < Rational(2, 3));
    CHECK_THROWS_AS(Rational(1, 0), Error);
}

TEST_CASE("default topology loads with 14 nodes and 8 Mbps core links") {
    NetworkGraph g = load_topology(slurp(data_file("default_topology.json")));
    CHECK(g.node_count() == 14);
    int switch_links = 0;
    for (const Link& l : g.links()) {
        bool ss = g.node(l.from).role == NodeRole::Switch &&
                  g.node(l.to).role == NodeRole::Switch;
        if (ss) {
            ++switch_links;
            CHECK(l.capacity_kbps == Rational(8000));
        }
        if (!l.unbounded) CHECK(!l.capacity_kbps.is_negative());
    }
    CHECK(switch_links == 16);
    CHECK(g.attach_switch(g.node_index("c1")) == g.node_index("v6"));
    CHECK(g.attach_switch(g.node_index("c2")) == g.node_index("v7"));
}

TEST_CASE("topology validation rejects bad documents") {
    CHECK_THROWS_AS(load_topology("{\"nodes\": []}"), Error);
    CHECK_THROWS_AS(load_topology("not json"), Error);
    // dangling endpoint
    CHECK_THROWS_AS(
        load_topology(R"({"nodes":[{"name":"a","role":"switch"}],
                          "links":[{"from":"a","to":"ghost","kbps":5}]})"),
        Error);
    // client with two attachment switches
    CHECK_THROWS_AS(load_topology(R"({"nodes":[
        {"name":"s1","role":"switch"},{"name":"s2","role":"switch"},
        {"name":"c","role":"client"}],
        "links":[{"from":"s1","to":"c","kbps":10},{"from":"s2","to":"c","kbps":10}]})"),
                    Error);
    // negative capacity
    CHECK_THROWS_AS(load_topology(R"({"nodes":[
        {"name":"s1","role":"switch"},{"name":"s2","role":"switch"}],
        "links":[{"from":"s1","to":"s2","kbps":-3}]})"),
                    Error);
    // duplicate links
    CHECK_THROWS_AS(load_topology(R"({"nodes":[
        {"name":"s1","role":"switch"},{"name":"s2","role":"switch"}],
        "links":[{"from":"s1","to":"s2","kbps":3},{"from":"s1","to":"s2","kbps":4}]})"),
                    Error);
    // unknown keys are rejected
    CHECK_THROWS_AS(load_topology(R"({"nodes":[{"name":"a","role":"switch","x":1}]})"),
                    Error);
}

TEST_CASE("three-node chain answers the bottleneck capacity query") {
    NetworkGraph g = load_topology(R"({"nodes":[
        {"name":"srv","role":"server"},{"name":"s1","role":"switch"},
        {"name":"c","role":"client"}],
        "links":[{"from":"srv","to":"s1","kbps":1000},
                 {"from":"s1","to":"c","kbps":1000}]})");
    auto cap = g.widest_path(g.node_index("srv"), g.node_index("c"));
    CHECK(cap.reachable);
    CHECK(!cap.unbounded);
    CHECK(cap.bottleneck_kbps == Rational(1000));
}

TEST_CASE("bandwidth snapshot subtracts in-flight usage") {
    NetworkGraph g = load_topology(slurp(data_file("default_topology.json")));
    int lid = *g.find_link(g.node_index("v1"), g.node_index("v3"));

    SUBCASE("no in-flight flows leaves the static matrix") {
        CapacitySnapshot s = snapshot_bandwidth(g, {});
        CHECK(s.available_kbps[size_t(lid)] == Rational(8000));
        for (const Link& l : g.links())
            if (!l.unbounded) CHECK(s.available_kbps[size_t(l.id)] == l.capacity_kbps);
    }
    SUBCASE("a 3000 kbps flow leaves 5000 on an 8000 link") {
        CapacitySnapshot s = snapshot_bandwidth(g, {{lid, Rational(3000)}});
        CHECK(s.available_kbps[size_t(lid)] == Rational(5000));
    }
    SUBCASE("over-capacity usage is rejected") {
        CHECK_THROWS_AS(snapshot_bandwidth(g, {{lid, Rational(9000)}}), Error);
    }
    SUBCASE("snapshot is monotone in the in-flight map") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 30; ++trial) {
            std::map<int, Rational> use_a, use_b;
            for (const Link& l : g.links()) {
                if (l.unbounded) continue;
                std::uniform_int_distribution<int> d(0, 8000);
                int a = d(rng);
                use_a[l.id] = Rational(a);
                std::uniform_int_distribution<int> d2(a, 8000);
                use_b[l.id] = Rational(d2(rng));
            }
            CapacitySnapshot sa = snapshot_bandwidth(g, use_a);
            CapacitySnapshot sb = snapshot_bandwidth(g, use_b);
            for (const Link& l : g.links())
                if (!l.unbounded)
                    CHECK(sb.available_kbps[size_t(l.id)] <=
                          sa.available_kbps[size_t(l.id)]);
        }
    }
}

TEST_CASE("virtual server augmentation") {
    NetworkGraph g = load_topology(slurp(data_file("default_topology.json")));
    std::vector<int> servers = g.nodes_with_role(NodeRole::Server);
    REQUIRE(servers.size() == 2);

    NetworkGraph aug = augment_virtual_server(g, servers);
    CHECK(aug.node_count() == g.node_count() + 1);
    CHECK(aug.link_count() == g.link_count() + 2);
    int vs = aug.virtual_server();
    CHECK(aug.out_links(vs).size() == 2);
    for (int lid : aug.out_links(vs)) CHECK(aug.link(lid).unbounded);
    CHECK(g.node_count() == 14);  // original untouched

    CHECK_THROWS_AS(augment_virtual_server(g, {}), Error);
    CHECK_THROWS_AS(augment_virtual_server(g, {g.node_index("v1")}), Error);
    CHECK_THROWS_AS(augment_virtual_server(aug, servers), Error);  // no double augment
}

TEST_CASE("catalog derives layer sizes from the bitrate ladder") {
    Catalog cat = load_catalog(slurp(data_file("catalog_main.json")));
    const VideoEntry& v = cat.video("factory");
    CHECK(v.segments == 12);
    CHECK(v.layers == 4);
    CHECK(cat.layer_size("factory", 1, 1) == Rational(3250));
    CHECK(cat.layer_size("factory", 1, 2) == Rational(2250));
    CHECK(cat.layer_size("factory", 1, 3) == Rational(2750));
    CHECK(cat.layer_size("factory", 1, 4) == Rational(3250));

    // mean of the four layers, checked against direct summation
    Rational direct(0);
    for (int l = 1; l <= 4; ++l) direct += cat.layer_size("factory", 1, l);
    direct /= Rational(4);
    CHECK(direct == Rational(2875));
    CHECK(cat.avg_layer_size("factory", 1, 4) == direct);
    CHECK(cat.avg_layer_size("factory", 1, 1) == cat.layer_size("factory", 1, 1));

    CHECK_THROWS_AS(cat.layer_size("factory", 1, 5), Error);
    CHECK_THROWS_AS(cat.layer_size("factory", 13, 1), Error);
    CHECK_THROWS_AS(cat.layer_size("ghost", 1, 1), Error);

    // prefix sums match the ladder times the duration, exactly
    for (int m = 1; m <= 4; ++m) {
        Rational sum(0);
        for (int l = 1; l <= m; ++l) sum += cat.layer_size("factory", 1, l);
        CHECK(sum == v.cumulative_kbps[size_t(m - 1)] * Rational(5));
    }
}

TEST_CASE("catalog quality lookups") {
    Catalog cat = load_catalog(slurp(data_file("catalog_main.json")));
    CHECK(cat.quality_of("factory", 1, 0) == 0.0);
    CHECK(cat.quality_of("factory", 1, 4) == doctest::Approx(0.975));
    CHECK(cat.quality_of("factory", 3, 2) == doctest::Approx(0.88));
    for (int seg = 1; seg <= 12; ++seg)
        for (int l = 1; l <= 4; ++l)
            CHECK(cat.quality_of("factory", seg, l) >=
                  cat.quality_of("factory", seg, l - 1));
    CHECK(cat.quality_min() == doctest::Approx(0.80));
    CHECK(cat.quality_max() == doctest::Approx(0.975));
}

TEST_CASE("catalog accepts explicit sizes and rejects bad manifests") {
    Catalog cat = load_catalog(R"({"video":"v","segment_duration_s":2,"segments":1,
        "layers":[{"cumulative_kbps":100,"quality":0.5,"size_kbits":123}],
        "availability":{"s1":1}})");
    CHECK(cat.layer_size("v", 1, 1) == Rational(123));

    // non-monotone ladder
    CHECK_THROWS_AS(load_catalog(R"({"video":"v","segment_duration_s":2,"segments":1,
        "layers":[{"cumulative_kbps":200,"quality":0.5},
                  {"cumulative_kbps":150,"quality":0.6}]})"),
                    Error);
    // enhancement layer stored without its base
    CHECK_THROWS_AS(load_catalog(R"({"video":"v","segment_duration_s":2,"segments":1,
        "layers":[{"cumulative_kbps":100,"quality":0.5},
                  {"cumulative_kbps":200,"quality":0.6}],
        "availability_explicit":{"s1":[[0,1]]}})"),
                    Error);
    // quality must not decrease with layers
    CHECK_THROWS_AS(load_catalog(R"({"video":"v","segment_duration_s":2,"segments":1,
        "layers":[{"cumulative_kbps":100,"quality":0.9},
                  {"cumulative_kbps":200,"quality":0.6}]})"),
                    Error);
}

TEST_CASE("catalogs can carry several videos keyed by id") {
    Catalog cat = load_catalog(R"({"videos": [
        {"video":"a","segment_duration_s":2,"segments":1,
         "layers":[{"cumulative_kbps":100,"quality":0.5}],"availability":{"s1":1}},
        {"video":"b","segment_duration_s":4,"segments":2,
         "layers":[{"cumulative_kbps":200,"quality":0.6},
                   {"cumulative_kbps":300,"quality":0.7}],"availability":{"s1":2}}]})");
    CHECK(cat.video_ids().size() == 2);
    CHECK(cat.layer_size("a", 1, 1) == Rational(200));
    CHECK(cat.layer_size("b", 2, 2) == Rational(400));
    CHECK_THROWS_AS(load_catalog(R"({"videos": [
        {"video":"a","segment_duration_s":2,"segments":1,
         "layers":[{"cumulative_kbps":100,"quality":0.5}]},
        {"video":"a","segment_duration_s":2,"segments":1,
         "layers":[{"cumulative_kbps":100,"quality":0.5}]}]})"),
                    Error);
}

TEST_CASE("availability respects the layer-prefix rule after every load") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> layers_d(1, 5), segs_d(1, 4), max_d(0, 5);
        int layers = layers_d(rng), segs = segs_d(rng);
        std::ostringstream manifest;
        manifest << R"({"video":"v","segment_duration_s":2,"segments":)" << segs
                 << ",\"layers\":[";
        for (int l = 0; l < layers; ++l) {
            if (l) manifest << ',';
            manifest << R"({"cumulative_kbps":)" << 100 * (l + 1) << R"(,"quality":)"
                     << 0.1 * (l + 1) << "}";
        }
        manifest << R"(],"availability":{"s1":[)";
        for (int s = 0; s < segs; ++s) {
            if (s) manifest << ',';
            manifest << std::min(max_d(rng), layers);
        }
        manifest << "]}}";
        Catalog cat = load_catalog(manifest.str());
        for (int s = 1; s <= segs; ++s)
            for (int l = 2; l <= layers; ++l)
                if (cat.available("s1", "v", s, l))
                    CHECK(cat.available("s1", "v", s, l - 1));
    }
}
