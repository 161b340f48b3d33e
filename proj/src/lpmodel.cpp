#include "svcflow/lpmodel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "svcflow/errors.hpp"

namespace svcflow {

int LinearProgram::add_variable(const std::string& name, double objective_coeff) {
    objective_.push_back(objective_coeff);
    names_.push_back(name);
    fixed_.push_back(std::nullopt);
    return static_cast<int>(objective_.size()) - 1;
}

void LinearProgram::set_objective(int var, double coeff) {
    objective_.at(size_t(var)) = coeff;
}

void LinearProgram::add_to_objective(int var, double coeff) {
    objective_.at(size_t(var)) += coeff;
}

int LinearProgram::add_row(Row row) {
    rows_.push_back(std::move(row));
    return static_cast<int>(rows_.size()) - 1;
}

void LinearProgram::drop_last_rows(int count) {
    if (count <= 0) return;
    if (count > static_cast<int>(rows_.size()))
        fail(ErrorKind::Internal, "cannot drop more rows than exist");
    rows_.resize(rows_.size() - static_cast<size_t>(count));
}

void LinearProgram::fix_variable(int var, double value) {
    fixed_.at(size_t(var)) = value;
}

void LinearProgram::clear_fix(int var) { fixed_.at(size_t(var)) = std::nullopt; }

std::optional<double> LinearProgram::fixed_value(int var) const {
    return fixed_.at(size_t(var));
}

double LinearProgram::objective_value(const std::vector<double>& x) const {
    double v = 0;
    for (size_t i = 0; i < objective_.size(); ++i) v += objective_[i] * x.at(i);
    return v;
}

std::string LinearProgram::to_lp_format(const std::string& title) const {
    std::ostringstream out;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::string(buf);
    };
    out << "\\ " << title << "\nMinimize\n obj:";
    bool any = false;
    for (size_t i = 0; i < objective_.size(); ++i) {
        if (objective_[i] == 0.0) continue;
        out << (objective_[i] >= 0 && any ? " + " : " ") << num(objective_[i]) << " "
            << names_[i];
        any = true;
    }
    if (!any) out << " 0 " << (names_.empty() ? "x0" : names_[0]);
    out << "\nSubject To\n";
    for (size_t r = 0; r < rows_.size(); ++r) {
        const Row& row = rows_[r];
        out << " " << (row.name.empty() ? "c" + std::to_string(r) : row.name) << ":";
        for (const auto& [var, coeff] : row.terms) {
            if (coeff >= 0)
                out << " + " << num(coeff);
            else
                out << " - " << num(-coeff);
            out << " " << names_[size_t(var)];
        }
        switch (row.sense) {
            case RowSense::LessEq: out << " <= "; break;
            case RowSense::GreaterEq: out << " >= "; break;
            case RowSense::Equal: out << " = "; break;
        }
        out << num(row.rhs) << "\n";
    }
    out << "Bounds\n";
    for (size_t i = 0; i < names_.size(); ++i) {
        if (fixed_[i].has_value())
            out << " " << names_[i] << " = " << num(*fixed_[i]) << "\n";
        else
            out << " 0 <= " << names_[i] << "\n";
    }
    out << "End\n";
    return out.str();
}

LpSolveResult solve_program(const LinearProgram& prog, const SimplexOptions& options) {
    const int total = prog.num_variables();
    std::vector<int> dense_index(size_t(total), -1);
    std::vector<int> free_vars;
    for (int v = 0; v < total; ++v) {
        if (!prog.fixed_value(v).has_value()) {
            dense_index[size_t(v)] = static_cast<int>(free_vars.size());
            free_vars.push_back(v);
        }
    }
    const int n = static_cast<int>(free_vars.size());

    std::vector<std::vector<double>> a;
    std::vector<double> b;
    auto emit = [&](const LinearProgram::Row& row, double sign) {
        std::vector<double> coeffs(size_t(n), 0.0);
        double rhs = row.rhs;
        for (const auto& [var, coeff] : row.terms) {
            auto fixed = prog.fixed_value(var);
            if (fixed.has_value())
                rhs -= coeff * *fixed;
            else
                coeffs[size_t(dense_index[size_t(var)])] += coeff;
        }
        if (sign < 0) {
            for (double& c : coeffs) c = -c;
            rhs = -rhs;
        }
        a.push_back(std::move(coeffs));
        b.push_back(rhs);
    };
    for (const LinearProgram::Row& row : prog.rows()) {
        switch (row.sense) {
            case RowSense::LessEq: emit(row, +1); break;
            case RowSense::GreaterEq: emit(row, -1); break;
            case RowSense::Equal:
                emit(row, +1);
                emit(row, -1);
                break;
        }
    }

    std::vector<double> c(size_t(n), 0.0);
    for (int i = 0; i < n; ++i) c[size_t(i)] = -prog.objective()[size_t(free_vars[size_t(i)])];

    DenseSimplex simplex(a, b, c, options);
    SimplexResult res = simplex.solve();

    LpSolveResult out;
    out.status = res.status;
    out.iterations = res.iterations;
    if (res.status == SolveStatus::Optimal) {
        out.x.assign(size_t(total), 0.0);
        for (int v = 0; v < total; ++v) {
            auto fixed = prog.fixed_value(v);
            if (fixed.has_value())
                out.x[size_t(v)] = *fixed;
            else
                out.x[size_t(v)] = res.x[size_t(dense_index[size_t(v)])];
        }
        out.objective = prog.objective_value(out.x);
    }
    return out;
}

}  // namespace svcflow
