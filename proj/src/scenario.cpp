#include "svcflow/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "svcflow/errors.hpp"

namespace svcflow {

using nlohmann::json;

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

}  // namespace

Scenario load_scenario(const std::string& json_text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorKind::Parse, std::string("scenario parse error: ") + e.what());
    }
    require_keys(doc,
                 {"name", "topology", "catalog", "tau_s", "alpha", "epsilon", "solver",
                  "slots", "seed", "randomize_arrival", "clients"},
                 "scenario");
    for (const char* key : {"topology", "catalog", "clients"})
        if (!doc.contains(key))
            fail(ErrorKind::Parse, std::string("scenario missing '") + key + "'");

    Scenario s;
    s.base_dir = base_dir;
    s.name = doc.value("name", std::string("scenario"));
    s.topology_path = doc["topology"].get<std::string>();
    s.catalog_path = doc["catalog"].get<std::string>();
    s.tau_s = doc.value("tau_s", 2.0);
    s.alpha = doc.value("alpha", 1.0);
    s.epsilon = doc.value("epsilon", 0.1);
    s.solver = doc.value("solver", std::string("milp"));
    s.slots = doc.value("slots", 12);
    s.seed = doc.value("seed", std::uint64_t(1));
    s.randomize_arrival = doc.value("randomize_arrival", false);
    if (s.solver != "milp" && s.solver != "lp")
        fail(ErrorKind::Validation, "solver must be 'milp' or 'lp'");
    if (s.tau_s <= 0) fail(ErrorKind::Validation, "tau must be positive");
    if (s.slots < 1) fail(ErrorKind::Validation, "slot count must be positive");

    for (const json& jc : doc["clients"]) {
        require_keys(jc,
                     {"name", "video", "max_layers", "theta_s", "join_slot", "beta1",
                      "beta2", "beta3"},
                     "client");
        for (const char* key : {"name", "video", "max_layers"})
            if (!jc.contains(key))
                fail(ErrorKind::Parse, std::string("client entry missing '") + key + "'");
        ClientProfile p;
        p.name = jc["name"].get<std::string>();
        p.video = jc["video"].get<std::string>();
        p.max_layers = jc["max_layers"].get<int>();
        p.theta_s = jc.value("theta_s", 1.0);
        p.join_slot = jc.value("join_slot", 1);
        p.beta1 = jc.value("beta1", 0.2);
        p.beta2 = jc.value("beta2", 0.2);
        p.beta3 = jc.value("beta3", 1.0);
        if (p.max_layers < 1) fail(ErrorKind::Validation, "max_layers must be >= 1");
        if (p.theta_s <= 0) fail(ErrorKind::Validation, "theta must be positive");
        if (p.join_slot < 1) fail(ErrorKind::Validation, "join_slot must be >= 1");
        s.clients.push_back(std::move(p));
    }
    if (s.clients.empty()) fail(ErrorKind::Validation, "scenario has no clients");
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::NotFound, "cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string dir = std::filesystem::path(path).parent_path().string();
    Scenario s = load_scenario(ss.str(), dir.empty() ? "." : dir);
    if (s.name == "scenario") s.name = std::filesystem::path(path).stem().string();
    return s;
}

void apply_override(Scenario& scenario, const ParameterOverride& o) {
    auto for_clients = [&](auto&& fn) {
        bool hit = false;
        for (ClientProfile& c : scenario.clients) {
            if (!o.client.empty() && c.name != o.client) continue;
            fn(c);
            hit = true;
        }
        if (!hit) fail(ErrorKind::Validation, "override matches no client: " + o.client);
    };
    if (o.parameter == "theta") {
        if (o.value <= 0) fail(ErrorKind::Validation, "theta must be positive");
        for_clients([&](ClientProfile& c) { c.theta_s = o.value; });
    } else if (o.parameter == "tau") {
        if (o.value <= 0) fail(ErrorKind::Validation, "tau must be positive");
        scenario.tau_s = o.value;
    } else if (o.parameter == "alpha") {
        scenario.alpha = o.value;
    } else if (o.parameter == "epsilon") {
        scenario.epsilon = o.value;
    } else if (o.parameter == "beta1") {
        for_clients([&](ClientProfile& c) { c.beta1 = o.value; });
    } else if (o.parameter == "beta2") {
        for_clients([&](ClientProfile& c) { c.beta2 = o.value; });
    } else if (o.parameter == "beta3") {
        for_clients([&](ClientProfile& c) { c.beta3 = o.value; });
    } else {
        fail(ErrorKind::Validation, "unknown sweep parameter: " + o.parameter);
    }
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf);
}

}  // namespace svcflow
