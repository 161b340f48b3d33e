#pragma once

#include <map>
#include <string>
#include <vector>

#include "svcflow/clientsim.hpp"
#include "svcflow/metrics.hpp"
#include "svcflow/optimizer.hpp"
#include "svcflow/scenario.hpp"

namespace svcflow {

struct RunOptions {
    std::string solver_override;  // empty = scenario's choice
    bool dump_lp = false;         // write per-slot LP text files
    bool write_artifacts = true;  // false = in-memory run (tests, sweeps)
    MilpOptions milp;
    SimplexOptions lp;
};

struct RunResult {
    std::string solver;
    std::vector<SlotReport> slots;
    std::vector<ClientSummary> summaries;
    QoEReport qoe;
    bool any_timeout = false;
    double total_wall_ms = 0;
    std::vector<double> slot_wall_ms;  // parallel to `slots`
    std::vector<std::string> warnings;  // e.g. stretched delivery windows
    std::string manifest_hash;
    std::vector<ClientEvent> events;          // merged, tagged by client below
    std::vector<std::string> event_clients;   // parallel to events
    double replay_error = 0;                  // offline accumulator deviation
};

// Drives the slot loop: snapshot -> gather -> solve -> decompose & emit rules
// -> schedule deliveries -> update histories -> reports. Artifacts: slots.csv,
// summary.csv, events.csv, compare/timings CSVs, rules.jsonl, directives.jsonl,
// manifest.json. Timing columns live in timings.csv so every other artifact is
// byte-identical across reruns and thread counts.
RunResult run_scenario(const Scenario& scenario, const std::string& out_dir,
                       const RunOptions& options = {});

struct SweepResult {
    std::vector<double> values;
    std::vector<RunResult> runs;
};

// One run per value, isolated output directories, joint CSV + overlay chart.
SweepResult sweep_scenario(const Scenario& scenario, const std::string& parameter,
                           const std::vector<double>& values, const std::string& client,
                           const std::string& out_dir, const RunOptions& options = {});

struct CompareRow {
    int slot = 0;
    int requested_layers = 0;
    double milp_objective = 0, lp_objective = 0;
    int milp_layers = 0, lp_layers = 0;
    double milp_kbits = 0, lp_kbits = 0;
};

struct CompareResult {
    std::vector<CompareRow> rows;
    RunResult milp;
    RunResult lp;
};

// Runs both solver routes on one scenario and tabulates them per slot.
CompareResult compare_solvers(const Scenario& scenario, const std::string& out_dir,
                              const RunOptions& options = {});

// Renders one figure family ("delivered", "fairness", "compare") from a run
// directory's CSV files into an SVG. MissingData when inputs are absent.
std::string plot_family(const std::string& run_dir, const std::string& family);

// Loads topology+catalog, binds clients, checks deadlines; throws on issues.
struct ValidationSummary {
    int nodes = 0;
    int links = 0;
    int clients = 0;
    double stall_safe_theta_s = 0;
    std::vector<std::string> warnings;
};
ValidationSummary validate_scenario(const Scenario& scenario);

}  // namespace svcflow
