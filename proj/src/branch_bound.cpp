#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "svcflow/errors.hpp"
#include "svcflow/optimizer.hpp"

namespace svcflow {

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kPruneTol = 1e-9;

struct BBNode {
    std::vector<std::pair<int, double>> fixes;         // variable pins
    std::vector<LinearProgram::Row> cuts;              // dichotomy rows
    double bound = -std::numeric_limits<double>::infinity();
    std::int64_t id = 0;
};

struct BBNodeOrder {
    bool operator()(const BBNode& a, const BBNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
        return a.id > b.id;
    }
};

struct Incumbent {
    bool valid = false;
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> x;
    std::vector<int> nu_hat;
};

// Branching order mirrors the decision structure: first how many layers a
// client gets, then whether a specific layer is served at all, then which
// server carries it, and finally the oscillation flags.
struct BranchChoice {
    enum Kind { None, LayerCount, ServeSum, Selection, Flag } kind = None;
    int var = -1;                      // Selection / Flag
    double value = 0;                  // LP value of the branched quantity
    LinearProgram::Row down, up;       // LayerCount / ServeSum dichotomies
};

class BranchAndBound {
public:
    BranchAndBound(const MilpModel& model, const MilpOptions& options)
        : model_(model), options_(options), prog_(model.prog) {}

    MilpSolution run() {
        auto start = std::chrono::steady_clock::now();
        dive({});
        while (!queue_.empty()) {
            if (hit_limits(start)) { timed_out_ = true; break; }
            BBNode node = queue_.top();
            queue_.pop();
            if (incumbent_.valid && node.bound >= incumbent_.objective - kPruneTol)
                continue;
            dive(std::move(node));
        }
        if (!incumbent_.valid) all_zero_incumbent();

        MilpSolution out = extract();
        out.timed_out = timed_out_;
        out.status = timed_out_ ? SolveStatus::IterationLimit : SolveStatus::Optimal;
        out.stats.wall_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        out.stats.nodes = nodes_;
        out.stats.lp_iterations = lp_iterations_;
        out.stats.incumbent_trace = trace_;
        return out;
    }

private:
    bool hit_limits(std::chrono::steady_clock::time_point start) const {
        if (options_.node_limit > 0 && nodes_ >= options_.node_limit) return true;
        if (options_.time_budget_s > 0) {
            double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                           .count();
            if (s >= options_.time_budget_s) return true;
        }
        return false;
    }

    LpSolveResult solve_node(const BBNode& node) {
        for (const auto& [var, val] : node.fixes) prog_.fix_variable(var, val);
        int added = 0;
        for (const LinearProgram::Row& row : node.cuts) {
            prog_.add_row(row);
            ++added;
        }
        LpSolveResult res = solve_program(prog_, options_.lp);
        prog_.drop_last_rows(added);
        for (const auto& [var, _] : node.fixes) prog_.clear_fix(var);
        ++nodes_;
        lp_iterations_ += res.iterations;
        if (res.status == SolveStatus::Unbounded)
            fail(ErrorKind::Internal, "selection model cannot be unbounded");
        if (res.status == SolveStatus::IterationLimit)
            fail(ErrorKind::Numerical, "relaxation hit the iteration cap");
        return res;
    }

    // Depth-first rounding dive; pushes the sibling of every branch taken.
    void dive(BBNode node) {
        for (;;) {
            LpSolveResult res = solve_node(node);
            if (res.status == SolveStatus::Infeasible) return;
            if (incumbent_.valid && res.objective >= incumbent_.objective - kPruneTol)
                return;
            BranchChoice choice = pick_branch(res.x);
            if (choice.kind == BranchChoice::None) {
                integral_leaf(res);
                return;
            }
            if (choice.kind == BranchChoice::Selection ||
                choice.kind == BranchChoice::Flag) {
                // A selection-integral node already yields a feasible point:
                // raise the fractional flags and book it before branching on.
                if (choice.kind == BranchChoice::Flag) offer_incumbent(res);
                double rounded = choice.value >= 0.5 ? 1.0 : 0.0;
                BBNode sibling = node;
                sibling.fixes.emplace_back(choice.var, 1.0 - rounded);
                sibling.bound = res.objective;
                sibling.id = next_id_++;
                queue_.push(std::move(sibling));
                node.fixes.emplace_back(choice.var, rounded);
            } else {
                bool go_up = choice.value - std::floor(choice.value) >= 0.5;
                BBNode sibling = node;
                sibling.cuts.push_back(go_up ? choice.down : choice.up);
                sibling.bound = res.objective;
                sibling.id = next_id_++;
                queue_.push(std::move(sibling));
                node.cuts.push_back(go_up ? choice.up : choice.down);
            }
        }
    }

    static bool fractional(double v) {
        double frac = v - std::floor(v);
        return std::min(frac, 1.0 - frac) > kIntTol;
    }

    BranchChoice pick_branch(const std::vector<double>& x) const {
        BranchChoice choice;
        const int num_demands = static_cast<int>(model_.demands.size());

        // 1) total layers per client
        double best_dist = kIntTol;
        for (int d = 0; d < num_demands; ++d) {
            double total = 0;
            for (size_t p = 0; p < model_.pairs.size(); ++p) {
                if (model_.pairs[p].first != d) continue;
                for (int var : model_.omega[p]) total += x[size_t(var)];
            }
            double frac = total - std::floor(total);
            double dist = std::min(frac, 1.0 - frac);
            if (dist > best_dist + 1e-15) {
                best_dist = dist;
                choice.kind = BranchChoice::LayerCount;
                choice.value = total;
                choice.down = LinearProgram::Row();
                choice.up = LinearProgram::Row();
                for (size_t p = 0; p < model_.pairs.size(); ++p) {
                    if (model_.pairs[p].first != d) continue;
                    for (int var : model_.omega[p]) {
                        choice.down.terms.emplace_back(var, 1.0);
                        choice.up.terms.emplace_back(var, 1.0);
                    }
                }
                choice.down.sense = RowSense::LessEq;
                choice.down.rhs = std::floor(total);
                choice.up.sense = RowSense::GreaterEq;
                choice.up.rhs = std::floor(total) + 1.0;
            }
        }
        if (choice.kind != BranchChoice::None) return choice;

        // 2) whether one layer is served at all
        best_dist = kIntTol;
        for (size_t p = 0; p < model_.pairs.size(); ++p) {
            double total = 0;
            for (int var : model_.omega[p]) total += x[size_t(var)];
            double frac = total - std::floor(total);
            double dist = std::min(frac, 1.0 - frac);
            if (dist > best_dist + 1e-15) {
                best_dist = dist;
                choice.kind = BranchChoice::ServeSum;
                choice.value = total;
                choice.down = LinearProgram::Row();
                choice.up = LinearProgram::Row();
                for (int var : model_.omega[p]) {
                    choice.down.terms.emplace_back(var, 1.0);
                    choice.up.terms.emplace_back(var, 1.0);
                }
                choice.down.sense = RowSense::LessEq;
                choice.down.rhs = 0.0;
                choice.up.sense = RowSense::GreaterEq;
                choice.up.rhs = 1.0;
            }
        }
        if (choice.kind != BranchChoice::None) return choice;

        // 3) which server carries a layer
        best_dist = kIntTol;
        for (const auto& per_pair : model_.omega) {
            for (int var : per_pair) {
                if (prog_.fixed_value(var).has_value()) continue;
                double frac = x[size_t(var)] - std::floor(x[size_t(var)]);
                double dist = std::min(frac, 1.0 - frac);
                if (dist > best_dist + 1e-15) {
                    best_dist = dist;
                    choice.kind = BranchChoice::Selection;
                    choice.var = var;
                    choice.value = x[size_t(var)];
                }
            }
        }
        if (choice.kind != BranchChoice::None) return choice;

        // 4) oscillation flags
        best_dist = kIntTol;
        for (int d = 0; d < num_demands; ++d) {
            int var = model_.nu_var[size_t(d)];
            if (prog_.fixed_value(var).has_value()) continue;
            if (model_.demands[size_t(d)].profile.beta2 <= 0) continue;
            double frac = x[size_t(var)] - std::floor(x[size_t(var)]);
            double dist = std::min(frac, 1.0 - frac);
            if (dist > best_dist + 1e-15) {
                best_dist = dist;
                choice.kind = BranchChoice::Flag;
                choice.var = var;
                choice.value = x[size_t(var)];
            }
        }
        return choice;
    }

    // With the selections integral the oscillation flags decouple: raising
    // each flag exactly when the grant moved gives a feasible completion,
    // priced by the switch-count gap against the relaxed value.
    void offer_incumbent(const LpSolveResult& res) {
        const int num_demands = static_cast<int>(model_.demands.size());
        double objective = res.objective;
        std::vector<int> nu_hat(size_t(num_demands), 0);
        for (int d = 0; d < num_demands; ++d) {
            const Demand& dem = model_.demands[size_t(d)];
            if (dem.history.first_request()) continue;
            int granted = granted_layers(res.x, d);
            int z_true = std::abs(granted - dem.history.last_layers);
            nu_hat[size_t(d)] = z_true > 0 ? 1 : 0;
            double beta2 = dem.profile.beta2;
            if (beta2 <= 0) continue;
            double phi_nmax = static_cast<double>(dem.phi) *
                              static_cast<double>(model_.norms.n_max);
            double relaxed_n = res.x[size_t(model_.n_qual[size_t(d)])];
            double exact_n =
                (static_cast<double>(dem.history.cum_switches) + nu_hat[size_t(d)]) /
                phi_nmax;
            if (exact_n > relaxed_n)
                objective += beta2 / num_demands * (exact_n - relaxed_n);
        }
        if (!incumbent_.valid || objective < incumbent_.objective - kPruneTol) {
            incumbent_.valid = true;
            incumbent_.objective = objective;
            incumbent_.x = res.x;
            incumbent_.nu_hat = nu_hat;
            trace_.emplace_back(nodes_, objective);
        }
    }

    void integral_leaf(const LpSolveResult& res) { offer_incumbent(res); }

    int granted_layers(const std::vector<double>& x, int demand) const {
        int granted = 0;
        for (size_t p = 0; p < model_.pairs.size(); ++p) {
            if (model_.pairs[p].first != demand) continue;
            double sum = 0;
            for (int var : model_.omega[p]) sum += x[size_t(var)];
            if (sum > 0.5) ++granted;
        }
        return granted;
    }

    void all_zero_incumbent() {
        // Serving nothing is always feasible; use it when limits bite early.
        BBNode zero;
        for (const auto& per_pair : model_.omega)
            for (int var : per_pair)
                if (!prog_.fixed_value(var).has_value()) zero.fixes.emplace_back(var, 0.0);
        LpSolveResult res = solve_node(zero);
        if (res.status != SolveStatus::Optimal)
            fail(ErrorKind::Internal, "zero-service fallback failed");
        offer_incumbent(res);
    }

    MilpSolution extract() const {
        MilpSolution sol;
        const int num_demands = static_cast<int>(model_.demands.size());
        sol.objective = incumbent_.objective;
        sol.served_layers.assign(size_t(num_demands), 0);
        sol.layer_server.resize(size_t(num_demands));
        sol.layer_rates_kbps.resize(model_.pairs.size());

        for (size_t p = 0; p < model_.pairs.size(); ++p) {
            auto [d, l] = model_.pairs[p];
            int server = -1;
            for (size_t s = 0; s < model_.omega[p].size(); ++s) {
                if (incumbent_.x[size_t(model_.omega[p][s])] > 0.5) {
                    server = model_.servers[s];
                    break;
                }
            }
            sol.layer_server[size_t(d)].push_back(server);
            if (server >= 0) {
                for (int lid = 0; lid < model_.graph->link_count(); ++lid) {
                    double mbps = incumbent_.x[size_t(model_.t_var[p][size_t(lid)])];
                    if (mbps > 1e-9)
                        sol.layer_rates_kbps[p][lid] = mbps * kModelRateUnitKbps;
                }
            }
        }
        for (int d = 0; d < num_demands; ++d) {
            int granted = 0;
            bool gap_seen = false;
            for (int l = 1; l <= model_.demands[size_t(d)].profile.max_layers; ++l) {
                bool served = sol.layer_server[size_t(d)][size_t(l - 1)] >= 0;
                if (served && gap_seen)
                    fail(ErrorKind::Internal, "served layers are not a prefix");
                if (served) ++granted;
                else gap_seen = true;
            }
            sol.served_layers[size_t(d)] = granted;
        }

        // Reported metrics are recomputed from the grants so they stay
        // meaningful even when a zero weight leaves the model rows slack.
        sol.nu.assign(size_t(num_demands), 0);
        sol.t_norm.resize(size_t(num_demands));
        sol.i_norm.resize(size_t(num_demands));
        sol.n_norm.resize(size_t(num_demands));
        sol.q_gap = 0;
        for (int d = 0; d < num_demands; ++d) {
            const Demand& dem = model_.demands[size_t(d)];
            int granted = sol.served_layers[size_t(d)];
            double phi = static_cast<double>(dem.phi);
            int z = dem.history.first_request()
                        ? 0
                        : std::abs(granted - dem.history.last_layers);
            sol.nu[size_t(d)] = dem.history.first_request() ? 0 : (z > 0 ? 1 : 0);
            sol.t_norm[size_t(d)] =
                (static_cast<double>(dem.history.cum_layers) + granted) /
                (phi * static_cast<double>(model_.norms.t_max));
            sol.i_norm[size_t(d)] =
                (static_cast<double>(dem.history.cum_intensity) + z) /
                (phi * static_cast<double>(model_.norms.i_max));
            sol.n_norm[size_t(d)] =
                (static_cast<double>(dem.history.cum_switches) + sol.nu[size_t(d)]) /
                (phi * static_cast<double>(model_.norms.n_max));
            double gap = (dem.profile.max_layers - granted) /
                         static_cast<double>(dem.profile.max_layers);
            sol.q_gap = std::max(sol.q_gap, gap);
        }
        return sol;
    }

    const MilpModel& model_;
    const MilpOptions& options_;
    LinearProgram prog_;  // private copy; fixes and cuts are rolled back
    std::priority_queue<BBNode, std::vector<BBNode>, BBNodeOrder> queue_;
    Incumbent incumbent_;
    std::vector<std::pair<std::int64_t, double>> trace_;
    std::int64_t nodes_ = 0;
    std::int64_t lp_iterations_ = 0;
    std::int64_t next_id_ = 0;
    bool timed_out_ = false;
};

}  // namespace

MilpSolution solve_milp(const MilpModel& model, const MilpOptions& options) {
    BranchAndBound solver(model, options);
    return solver.run();
}

}  // namespace svcflow
