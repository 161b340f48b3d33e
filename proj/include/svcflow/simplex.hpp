#pragma once

#include <cstdint>
#include <vector>

namespace svcflow {

enum class PivotKernel {
    Serial,    // reference implementation, kept for testing
    Parallel,  // OpenMP row-parallel rank-1 update
    Auto,      // Parallel for large tableaus, Serial otherwise
};

struct SimplexOptions {
    PivotKernel kernel = PivotKernel::Auto;
    // Iterations without objective progress before switching to Bland's rule.
    int stall_limit = 256;
    // 0 = derive from problem size.
    std::int64_t max_iterations = 0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct SimplexResult {
    SolveStatus status = SolveStatus::IterationLimit;
    double objective = 0;  // of the maximization form
    std::vector<double> x;
    std::int64_t iterations = 0;
};

// Rank-1 tableau update around pivot (row r, col s). Every row is updated
// independently and element order within a row is fixed, so the serial and
// parallel kernels produce bit-identical tableaus.
void pivot_update_serial(double* tableau, int rows, int cols, int r, int s, double eps);
void pivot_update_parallel(double* tableau, int rows, int cols, int r, int s, double eps);

// Dense two-phase simplex for  max c^T x  s.t.  A x <= b, x >= 0.
// Handles negative right-hand sides via a phase-1 auxiliary variable.
// Pricing is most-negative-reduced-cost with index tie-breaks; after
// `stall_limit` non-improving iterations it degrades to Bland's rule, which
// guarantees termination on degenerate bases.
class DenseSimplex {
public:
    DenseSimplex(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                 const std::vector<double>& c, const SimplexOptions& options = {});

    SimplexResult solve();

private:
    inline double& at(int i, int j) { return d_[size_t(i) * size_t(n_ + 2) + size_t(j)]; }

    void pivot(int r, int s);
    bool simplex_loop(int phase);

    int m_ = 0;  // constraints
    int n_ = 0;  // variables
    std::vector<double> d_;  // (m+2) x (n+2) tableau
    std::vector<int> nonbasic_;  // size n+1
    std::vector<int> basic_;     // size m
    SimplexOptions options_;
    bool use_parallel_ = false;
    bool bland_ = false;
    std::int64_t iterations_ = 0;
    std::int64_t iteration_cap_ = 0;
    std::int64_t stall_counter_ = 0;
    double last_objective_ = 0;
};

}  // namespace svcflow
