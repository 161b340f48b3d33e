#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "svcflow/errors.hpp"
#include "svcflow/runner.hpp"

using namespace svcflow;
namespace fs = std::filesystem;

namespace {

std::string data_dir() { return SVCFLOW_DATA_DIR; }

Scenario small_scenario() {
    // default fleet trimmed to 8 slots so unit runs stay quick
    Scenario s = load_scenario_file(data_dir() + "/default.scenario.json");
    s.slots = 8;
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "svcflow_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("scenario files load and validate") {
    Scenario s = load_scenario_file(data_dir() + "/default.scenario.json");
    CHECK(s.clients.size() == 5);
    CHECK(s.tau_s == doctest::Approx(2.0));
    CHECK(s.clients[2].max_layers == 3);
    CHECK(s.clients[4].join_slot == 6);

    ValidationSummary v = validate_scenario(s);
    CHECK(v.nodes == 14);
    CHECK(v.clients == 5);
    CHECK(v.stall_safe_theta_s == doctest::Approx(3.0));
    CHECK(v.warnings.empty());

    apply_override(s, {"theta", 3.5, ""});
    ValidationSummary v2 = validate_scenario(s);
    CHECK(v2.warnings.size() == 5);  // deadline beyond the stall-safe bound

    CHECK_THROWS_AS(apply_override(s, {"nonsense", 1.0, ""}), Error);
    CHECK_THROWS_AS(apply_override(s, {"beta3", 1.0, "ghost"}), Error);
}

TEST_CASE("a short run produces coherent artifacts") {
    fs::path dir = fresh_dir("short_run");
    Scenario s = small_scenario();
    RunResult r = run_scenario(s, dir.string());
    CHECK(r.solver == "milp");
    CHECK(!r.slots.empty());
    CHECK(r.replay_error < 1e-6);

    for (const char* f : {"slots.csv", "summary.csv", "events.csv", "timings.csv",
                          "rules.jsonl", "directives.jsonl", "manifest.json"})
        CHECK(fs::exists(dir / f));

    // slot 1 serves c1 its full quality through the 16 Mbps ingress
    const SlotReport& first = r.slots.front();
    REQUIRE(first.clients.size() == 1);
    CHECK(first.clients[0].client == "c1");
    CHECK(first.clients[0].delivered_layers == 4);
    CHECK(first.sent_kbits == doctest::Approx(11500.0));

    // delivered volume equals the tagged sub-flow volume, slot by slot
    std::map<int, double> tagged_kbits;
    std::ifstream directives(dir / "directives.jsonl");
    std::string line;
    while (std::getline(directives, line)) {
        nlohmann::json j = nlohmann::json::parse(line);
        double sum = 0;
        for (const auto& e : j["sends"]) sum += e["volume_kbits"].get<double>();
        tagged_kbits[j["slot"].get<int>()] += sum;
    }
    for (const SlotReport& slot : r.slots)
        CHECK(tagged_kbits[slot.slot] == doctest::Approx(slot.sent_kbits).epsilon(1e-9));
}

TEST_CASE("artifact schemas are frozen") {
    fs::path dir = fresh_dir("schema");
    Scenario s = small_scenario();
    s.slots = 5;
    run_scenario(s, dir.string());
    compare_solvers(s, dir.string() + "/cmp");

    auto first_line = [](const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::getline(in, line);
        return line;
    };
    CHECK(first_line(dir / "slots.csv") ==
          "slot,solver,client,requested_m,delivered,quality,T,I,N,phi,q_gap,variance,"
          "max_gap,fairness,sent_kbits,rule_count");
    CHECK(first_line(dir / "summary.csv") ==
          "client,startup_delay_s,stalls,avg_layers,avg_quality,switch_count,"
          "switch_intensity,segments_completed");
    CHECK(first_line(dir / "events.csv") == "client,time_s,event,segment,layers,buffer_s");
    CHECK(first_line(dir / "timings.csv") == "slot,solver,wall_ms,nodes,lp_iterations");
    CHECK(first_line(dir / "cmp" / "compare.csv") ==
          "slot,requested_layers,milp_objective,lp_objective,milp_layers,lp_layers,"
          "milp_kbits,lp_kbits");

    // one rule per line, stable field order
    std::ifstream rules(dir / "rules.jsonl");
    std::string line;
    REQUIRE(std::getline(rules, line));
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(line);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"slot", "client", "layer", "switch", "tag",
                                           "match_src", "match_dst", "forward_to",
                                           "rewrite_source"});
}

TEST_CASE("identical runs are byte-identical, across thread counts too") {
    Scenario s = small_scenario();
    fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c");
    run_scenario(s, a.string());
    run_scenario(s, b.string());
#ifdef _OPENMP
    int old = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    run_scenario(s, c.string());
#ifdef _OPENMP
    omp_set_num_threads(old);
#endif
    for (const char* f : {"slots.csv", "summary.csv", "events.csv", "rules.jsonl",
                          "directives.jsonl", "manifest.json"}) {
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(slurp(a / f) == slurp(c / f));
    }
}

TEST_CASE("the relaxation route runs the same pipeline") {
    Scenario s = small_scenario();
    s.slots = 6;
    RunOptions opt;
    opt.solver_override = "lp";
    fs::path dir = fresh_dir("lp_route");
    RunResult r = run_scenario(s, dir.string(), opt);
    CHECK(r.solver == "lp");
    CHECK(!r.slots.empty());
    CHECK(r.replay_error < 1e-6);
    CHECK(r.slots.front().clients[0].delivered_layers == 4);
}

TEST_CASE("plots render for each family and embed the manifest hash") {
    Scenario s = small_scenario();
    s.slots = 6;
    fs::path dir = fresh_dir("plots");
    RunResult r = run_scenario(s, dir.string());
    for (const char* family : {"delivered", "fairness"}) {
        std::string path = plot_family(dir.string(), family);
        CHECK(fs::exists(path));
        std::string svg = slurp(path);
        CHECK(svg.size() > 500);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find(r.manifest_hash) != std::string::npos);
    }
    CHECK_THROWS_AS(plot_family(dir.string(), "compare"), Error);  // no compare.csv
    CHECK_THROWS_AS(plot_family(dir.string(), "nope"), Error);
}

TEST_CASE("sweeps validate their parameter and isolate outputs") {
    Scenario s = small_scenario();
    s.slots = 5;
    CHECK_THROWS_AS(sweep_scenario(s, "gamma", {1.0}, "", ""), Error);

    fs::path dir = fresh_dir("sweep");
    SweepResult r = sweep_scenario(s, "theta", {0.6, 1.0}, "", dir.string());
    CHECK(r.runs.size() == 2);
    CHECK(fs::exists(dir / "sweep.csv"));
    CHECK(fs::exists(dir / "sweep.svg"));
    CHECK(fs::exists(dir / "theta_0.600" / "slots.csv"));
    CHECK(fs::exists(dir / "theta_1.000" / "slots.csv"));
}

TEST_CASE("compare runs both routes over the same scenario") {
    Scenario s = small_scenario();
    s.slots = 5;
    fs::path dir = fresh_dir("compare");
    CompareResult cmp = compare_solvers(s, dir.string());
    CHECK(!cmp.rows.empty());
    CHECK(fs::exists(dir / "compare.csv"));
    CHECK(fs::exists(dir / "milp" / "slots.csv"));
    CHECK(fs::exists(dir / "lp" / "slots.csv"));
    std::string svg_path = plot_family(dir.string(), "compare");
    CHECK(fs::exists(svg_path));
    for (const CompareRow& row : cmp.rows) {
        CHECK(row.milp_layers >= 0);
        CHECK(row.lp_layers >= 0);
    }
}

TEST_CASE("feasible deadlines keep every randomized run stall-free") {
    // theta <= segment_duration - tau and ample capacity: the stall-freedom
    // bound, checked across random fleets.
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> m_d(1, 4), join_d(1, 4), n_d(1, 4);
    std::uniform_real_distribution<double> theta_d(0.5, 3.0);
    for (int trial = 0; trial < 8; ++trial) {
        int n = n_d(rng);
        nlohmann::json topo;
        topo["nodes"] = {{{"name", "srvA"}, {"role", "server"}},
                         {{"name", "sw"}, {"role", "switch"}}};
        topo["links"] = {{{"from", "srvA"}, {"to", "sw"}, {"kbps", "unbounded"}}};
        nlohmann::json clients = nlohmann::json::array();
        for (int c = 0; c < n; ++c) {
            std::string name = "r" + std::to_string(c);
            topo["nodes"].push_back({{"name", name}, {"role", "client"}});
            topo["links"].push_back(
                {{"from", "sw"}, {"to", name}, {"kbps", "unbounded"}});
            clients.push_back({{"name", name},
                               {"video", "factory"},
                               {"max_layers", m_d(rng)},
                               {"theta_s", theta_d(rng)},
                               {"join_slot", join_d(rng)}});
        }
        fs::path dir = fresh_dir("stall_free_" + std::to_string(trial));
        {
            std::ofstream out(dir / "topo.json");
            out << topo.dump();
        }
        nlohmann::json scen = {{"name", "rand"},
                               {"topology", "topo.json"},
                               {"catalog", data_dir() + "/catalog_main.json"},
                               {"tau_s", 2},
                               {"slots", 32},
                               {"seed", 7 + trial},
                               {"randomize_arrival", true},
                               {"clients", clients}};
        std::string path = (dir / "scen.json").string();
        {
            std::ofstream out(path);
            out << scen.dump();
        }
        Scenario s = load_scenario_file(path);
        RunOptions opt;
        opt.write_artifacts = false;
        RunResult r = run_scenario(s, "", opt);
        for (const ClientSummary& c : r.summaries) {
            CHECK(c.stall_count == 0);
            CHECK(c.segments_completed == 12);
            CHECK(c.startup_delay_s >= theta_d.min() - 1e-9);
        }
    }
}

TEST_CASE("a starved node budget reports a timeout with a usable incumbent") {
    Scenario s = small_scenario();
    s.slots = 7;  // includes the congested slot
    RunOptions opt;
    opt.write_artifacts = false;
    opt.milp.node_limit = 2;
    RunResult r = run_scenario(s, "", opt);
    CHECK(r.any_timeout);
    CHECK(!r.slots.empty());  // the run still completes with incumbents
}

TEST_CASE("the extended fleet completes with rules logged every active slot") {
    Scenario s = load_scenario_file(data_dir() + "/extended.scenario.json");
    fs::path dir = fresh_dir("extended");
    RunResult r = run_scenario(s, dir.string());
    CHECK(!r.any_timeout);
    for (const SlotReport& rep : r.slots) {
        CHECK(rep.rule_count > 0);
        CHECK(rep.sent_kbits > 0);
    }
    for (const ClientSummary& c : r.summaries) {
        CHECK(c.stall_count == 0);
        CHECK(c.segments_completed == 12);
    }
}

TEST_CASE("lp text dumps are written when asked for") {
    Scenario s = small_scenario();
    s.slots = 2;
    RunOptions opt;
    opt.dump_lp = true;
    fs::path dir = fresh_dir("dump");
    run_scenario(s, dir.string(), opt);
    CHECK(fs::exists(dir / "slot1_milp.lp"));
    std::string text = slurp(dir / "slot1_milp.lp");
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
}
