#include "svcflow/simplex.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "svcflow/errors.hpp"

namespace svcflow {

namespace {
constexpr double kEps = 1e-9;
// Below this tableau area the fork/join overhead dominates the update.
constexpr std::int64_t kParallelThreshold = 1 << 19;
}  // namespace

void pivot_update_serial(double* tableau, int rows, int cols, int r, int s, double eps) {
    const double* pivot_row = tableau + size_t(r) * size_t(cols);
    const double inv = 1.0 / pivot_row[s];
    for (int i = 0; i < rows; ++i) {
        if (i == r) continue;
        double* row = tableau + size_t(i) * size_t(cols);
        if (std::fabs(row[s]) > eps) {
            const double factor = row[s] * inv;
            for (int j = 0; j < cols; ++j) row[j] -= pivot_row[j] * factor;
            row[s] = pivot_row[s] * factor;
        }
    }
}

void pivot_update_parallel(double* tableau, int rows, int cols, int r, int s, double eps) {
#ifdef _OPENMP
    const double* pivot_row = tableau + size_t(r) * size_t(cols);
    const double inv = 1.0 / pivot_row[s];
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        if (i == r) continue;
        double* row = tableau + size_t(i) * size_t(cols);
        if (std::fabs(row[s]) > eps) {
            const double factor = row[s] * inv;
            for (int j = 0; j < cols; ++j) row[j] -= pivot_row[j] * factor;
            row[s] = pivot_row[s] * factor;
        }
    }
#else
    pivot_update_serial(tableau, rows, cols, r, s, eps);
#endif
}

DenseSimplex::DenseSimplex(const std::vector<std::vector<double>>& a,
                           const std::vector<double>& b, const std::vector<double>& c,
                           const SimplexOptions& options)
    : m_(static_cast<int>(b.size())),
      n_(static_cast<int>(c.size())),
      options_(options) {
    d_.assign(size_t(m_ + 2) * size_t(n_ + 2), 0.0);
    nonbasic_.resize(size_t(n_) + 1);
    basic_.resize(size_t(m_));
    for (int i = 0; i < m_; ++i) {
        const std::vector<double>& row = a[size_t(i)];
        for (int j = 0; j < n_; ++j) at(i, j) = row[size_t(j)];
        basic_[size_t(i)] = n_ + i;
        at(i, n_) = -1;
        at(i, n_ + 1) = b[size_t(i)];
    }
    for (int j = 0; j < n_; ++j) {
        nonbasic_[size_t(j)] = j;
        at(m_, j) = -c[size_t(j)];
    }
    nonbasic_[size_t(n_)] = -1;
    at(m_ + 1, n_) = 1;

    std::int64_t area = std::int64_t(m_ + 2) * std::int64_t(n_ + 2);
    switch (options_.kernel) {
        case PivotKernel::Serial: use_parallel_ = false; break;
        case PivotKernel::Parallel: use_parallel_ = true; break;
        case PivotKernel::Auto:
#ifdef _OPENMP
            use_parallel_ = area >= kParallelThreshold && omp_get_max_threads() > 1;
#else
            use_parallel_ = false;
#endif
            break;
    }
    iteration_cap_ = options_.max_iterations > 0
                         ? options_.max_iterations
                         : 20000 + 25LL * (std::int64_t(m_) + std::int64_t(n_));
}

void DenseSimplex::pivot(int r, int s) {
    if (use_parallel_)
        pivot_update_parallel(d_.data(), m_ + 2, n_ + 2, r, s, kEps);
    else
        pivot_update_serial(d_.data(), m_ + 2, n_ + 2, r, s, kEps);

    double inv = 1.0 / at(r, s);
    for (int j = 0; j < n_ + 2; ++j)
        if (j != s) at(r, j) *= inv;
    for (int i = 0; i < m_ + 2; ++i)
        if (i != r) at(i, s) *= -inv;
    at(r, s) = inv;
    std::swap(basic_[size_t(r)], nonbasic_[size_t(s)]);
    ++iterations_;
}

bool DenseSimplex::simplex_loop(int phase) {
    int obj_row = m_ + phase - 1;
    for (;;) {
        if (iterations_ >= iteration_cap_) return true;  // caller reports the cap
        int s = -1;
        if (!bland_) {
            for (int j = 0; j < n_ + 1; ++j) {
                if (nonbasic_[size_t(j)] == -phase) continue;
                if (s == -1 || std::pair(at(obj_row, j), nonbasic_[size_t(j)]) <
                                   std::pair(at(obj_row, s), nonbasic_[size_t(s)]))
                    s = j;
            }
        } else {
            // Bland: entering variable with the lowest index among improving ones.
            int best_var = std::numeric_limits<int>::max();
            for (int j = 0; j < n_ + 1; ++j) {
                if (nonbasic_[size_t(j)] == -phase) continue;
                if (at(obj_row, j) < -kEps && nonbasic_[size_t(j)] < best_var) {
                    best_var = nonbasic_[size_t(j)];
                    s = j;
                }
            }
            if (s == -1) return true;
        }
        if (at(obj_row, s) >= -kEps) return true;
        int r = -1;
        for (int i = 0; i < m_; ++i) {
            if (at(i, s) <= kEps) continue;
            if (r == -1 ||
                std::pair(at(i, n_ + 1) / at(i, s), basic_[size_t(i)]) <
                    std::pair(at(r, n_ + 1) / at(r, s), basic_[size_t(r)]))
                r = i;
        }
        if (r == -1) return false;  // unbounded in this phase

        double before = at(obj_row, n_ + 1);
        pivot(r, s);
        if (!bland_) {
            if (at(obj_row, n_ + 1) > before + 1e-12) {
                stall_counter_ = 0;
            } else if (++stall_counter_ >= options_.stall_limit) {
                bland_ = true;  // degenerate cycling guard
            }
        }
    }
}

SimplexResult DenseSimplex::solve() {
    SimplexResult result;
    int r = 0;
    for (int i = 1; i < m_; ++i)
        if (at(i, n_ + 1) < at(r, n_ + 1)) r = i;
    if (m_ > 0 && at(r, n_ + 1) < -kEps) {
        pivot(r, n_);
        if (!simplex_loop(2) || at(m_ + 1, n_ + 1) < -kEps) {
            result.status = iterations_ >= iteration_cap_ ? SolveStatus::IterationLimit
                                                          : SolveStatus::Infeasible;
            result.iterations = iterations_;
            return result;
        }
        for (int i = 0; i < m_; ++i) {
            if (basic_[size_t(i)] != -1) continue;
            int s = 0;
            for (int j = 1; j <= n_; ++j) {
                if (s == -1 || std::pair(at(i, j), nonbasic_[size_t(j)]) <
                                   std::pair(at(i, s), nonbasic_[size_t(s)]))
                    s = j;
            }
            pivot(i, s);
        }
    }
    bool bounded = simplex_loop(1);
    if (iterations_ >= iteration_cap_) {
        result.status = SolveStatus::IterationLimit;
        result.iterations = iterations_;
        return result;
    }
    result.status = bounded ? SolveStatus::Optimal : SolveStatus::Unbounded;
    result.iterations = iterations_;
    if (bounded) {
        result.x.assign(size_t(n_), 0.0);
        for (int i = 0; i < m_; ++i)
            if (basic_[size_t(i)] >= 0 && basic_[size_t(i)] < n_)
                result.x[size_t(basic_[size_t(i)])] = at(i, n_ + 1);
        result.objective = at(m_, n_ + 1);
    }
    return result;
}

}  // namespace svcflow
