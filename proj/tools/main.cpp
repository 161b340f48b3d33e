// Command-line front end: run scenarios, sweep parameters, compare the two
// solver routes, validate inputs and render figures.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "svcflow/errors.hpp"
#include "svcflow/runner.hpp"

namespace {

int exit_code_for(const svcflow::Error& e) {
    switch (e.kind()) {
        case svcflow::ErrorKind::Parse:
        case svcflow::ErrorKind::Validation:
        case svcflow::ErrorKind::NotFound:
        case svcflow::ErrorKind::UnknownClient:
        case svcflow::ErrorKind::UnknownSegment:
        case svcflow::ErrorKind::MissingData:
            return 2;
        default:
            return 1;
    }
}

void print_run(const svcflow::RunResult& result) {
    std::printf("solver=%s slots=%zu wall=%.1fms manifest=%s\n", result.solver.c_str(),
                result.slots.size(), result.total_wall_ms, result.manifest_hash.c_str());
    for (const std::string& w : result.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    for (const svcflow::ClientSummary& c : result.summaries)
        std::printf("  %-8s startup=%.2fs stalls=%d avg_layers=%.3f avg_quality=%.3f "
                    "switches=%lld\n",
                    c.client.c_str(), c.startup_delay_s, c.stall_count, c.avg_layers,
                    c.avg_quality, static_cast<long long>(c.switch_count));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SVC multi-path rate adaptation simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", solver, plot_dir, family = "delivered";
    std::string sweep_param, sweep_client;
    std::vector<double> sweep_values;
    double tau = 0, theta = 0, alpha = -1;
    int threads = 0;
    bool dump_lp = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--tau", tau, "override the slot length (s)");
        cmd->add_option("--theta", theta, "override every client's deadline (s)");
        cmd->add_option("--alpha", alpha, "override the fairness weight");
        cmd->add_option("--threads", threads, "worker threads (0 = library default)");
    };

    CLI::App* run = app.add_subcommand("run", "run one scenario");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("-o,--out", out_dir, "output directory");
    run->add_option("--solver", solver, "milp|lp")
        ->check(CLI::IsMember({"milp", "lp"}));
    run->add_flag("--dump-lp", dump_lp, "write per-slot LP text files");
    add_common(run);

    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("scenario", scenario_path, "scenario file")->required();
    sweep->add_option("--param", sweep_param, "theta|tau|alpha|epsilon|beta1|beta2|beta3")
        ->required();
    sweep->add_option("--values", sweep_values, "sweep values")->required();
    sweep->add_option("--client", sweep_client, "restrict beta/theta overrides to one client");
    sweep->add_option("-o,--out", out_dir, "output directory");
    sweep->add_option("--solver", solver, "milp|lp")
        ->check(CLI::IsMember({"milp", "lp"}));
    add_common(sweep);

    CLI::App* cmp = app.add_subcommand("compare", "run both solver routes");
    cmp->add_option("scenario", scenario_path, "scenario file")->required();
    cmp->add_option("-o,--out", out_dir, "output directory");
    add_common(cmp);

    CLI::App* plot = app.add_subcommand("plot", "render a figure family from a run");
    plot->add_option("dir", plot_dir, "run output directory")->required();
    plot->add_option("--family", family, "delivered|fairness|compare");

    CLI::App* validate = app.add_subcommand("validate", "check a scenario's inputs");
    validate->add_option("scenario", scenario_path, "scenario file")->required();
    validate->add_option("--tau", tau, "override the slot length (s)");
    validate->add_option("--theta", theta, "override every client's deadline (s)");

    CLI11_PARSE(app, argc, argv);

    try {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
        auto load = [&]() {
            svcflow::Scenario s = svcflow::load_scenario_file(scenario_path);
            if (tau > 0) svcflow::apply_override(s, {"tau", tau, ""});
            if (theta > 0) svcflow::apply_override(s, {"theta", theta, ""});
            if (alpha >= 0) svcflow::apply_override(s, {"alpha", alpha, ""});
            return s;
        };
        svcflow::RunOptions options;
        options.solver_override = solver;
        options.dump_lp = dump_lp;

        if (*run) {
            svcflow::RunResult result = svcflow::run_scenario(load(), out_dir, options);
            print_run(result);
            if (result.any_timeout) {
                std::fprintf(stderr, "solver hit its node/time budget\n");
                return 3;
            }
        } else if (*sweep) {
            svcflow::SweepResult result = svcflow::sweep_scenario(
                load(), sweep_param, sweep_values, sweep_client, out_dir, options);
            for (size_t i = 0; i < result.values.size(); ++i) {
                std::printf("%s=%g:\n", sweep_param.c_str(), result.values[i]);
                print_run(result.runs[i]);
            }
        } else if (*cmp) {
            svcflow::CompareResult result =
                svcflow::compare_solvers(load(), out_dir, options);
            std::printf("slot requested milp lp milp_kbits lp_kbits\n");
            for (const svcflow::CompareRow& r : result.rows)
                std::printf("%4d %9d %4d %2d %10.0f %8.0f\n", r.slot, r.requested_layers,
                            r.milp_layers, r.lp_layers, r.milp_kbits, r.lp_kbits);
        } else if (*plot) {
            std::string path = svcflow::plot_family(plot_dir, family);
            std::printf("wrote %s\n", path.c_str());
        } else if (*validate) {
            svcflow::ValidationSummary s = svcflow::validate_scenario(load());
            std::printf("nodes=%d links=%d clients=%d stall_safe_theta=%.2fs\n", s.nodes,
                        s.links, s.clients, s.stall_safe_theta_s);
            for (const std::string& w : s.warnings)
                std::printf("warning: %s\n", w.c_str());
        }
    } catch (const svcflow::Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", svcflow::error_kind_name(e.kind()),
                     e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
