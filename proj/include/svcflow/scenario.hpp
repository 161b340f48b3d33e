#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svcflow/slot.hpp"

namespace svcflow {

// Everything one experiment needs: file references, the control period, the
// objective weights, the solver route and the client fleet.
struct Scenario {
    std::string name;
    std::string topology_path;
    std::string catalog_path;
    std::string base_dir;  // directory of the scenario file, for relative paths
    double tau_s = 2.0;
    double alpha = 1.0;
    double epsilon = 0.1;
    std::string solver = "milp";  // "milp" | "lp"
    int slots = 12;
    std::uint64_t seed = 1;
    bool randomize_arrival = false;  // draw arrival phases inside the slot
    std::vector<ClientProfile> clients;
};

Scenario load_scenario_file(const std::string& path);
Scenario load_scenario(const std::string& json_text, const std::string& base_dir);

// Sweepable parameters; beta weights may target a single client.
struct ParameterOverride {
    std::string parameter;  // theta | tau | alpha | epsilon | beta1 | beta2 | beta3
    double value = 0;
    std::string client;     // empty = all clients (betas/theta)
};

void apply_override(Scenario& scenario, const ParameterOverride& o);

// 64-bit FNV-1a, used for input fingerprints in run manifests.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 1469598103934665603ULL);
std::string hash_hex(std::uint64_t value);

}  // namespace svcflow
