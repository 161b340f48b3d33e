#pragma once

#include <optional>
#include <string>
#include <vector>

#include "svcflow/simplex.hpp"

namespace svcflow {

enum class RowSense { LessEq, GreaterEq, Equal };

// Sparse linear program over non-negative variables, minimization form.
// Individual variables can be pinned to a value; fixed columns are
// substituted into the rows before the solve.
class LinearProgram {
public:
    struct Row {
        std::vector<std::pair<int, double>> terms;
        RowSense sense = RowSense::LessEq;
        double rhs = 0;
        std::string name;
    };

    int add_variable(const std::string& name, double objective_coeff = 0.0);
    void set_objective(int var, double coeff);
    void add_to_objective(int var, double coeff);
    int add_row(Row row);
    // Removes the most recently added rows (branch-and-bound dichotomies).
    void drop_last_rows(int count);

    void fix_variable(int var, double value);
    void clear_fix(int var);
    std::optional<double> fixed_value(int var) const;

    int num_variables() const { return static_cast<int>(objective_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    const std::vector<Row>& rows() const { return rows_; }
    const std::vector<double>& objective() const { return objective_; }
    const std::string& variable_name(int var) const { return names_.at(size_t(var)); }

    // Objective value of an arbitrary point (used by oracle tests).
    double objective_value(const std::vector<double>& x) const;

    // CPLEX-style LP text for cross-checking with external solvers.
    std::string to_lp_format(const std::string& title) const;

private:
    friend struct LpSolveAccess;
    std::vector<double> objective_;
    std::vector<std::string> names_;
    std::vector<Row> rows_;
    std::vector<std::optional<double>> fixed_;
};

struct LpSolveResult {
    SolveStatus status = SolveStatus::IterationLimit;
    double objective = 0;  // minimization objective value
    std::vector<double> x;  // full variable space, fixed values filled in
    std::int64_t iterations = 0;
};

// Substitutes fixed variables, converts to  max -c^T x, A x <= b  (equalities
// become two inequalities) and runs the dense simplex.
LpSolveResult solve_program(const LinearProgram& prog, const SimplexOptions& options = {});

}  // namespace svcflow
