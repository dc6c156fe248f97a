#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace polydp {

/// A feasibility problem in standard form: find x >= 0 with A x = b.
/// Inequalities are expected to arrive already slacked by the caller.
struct LpProblem {
    std::size_t cols = 0;
    std::vector<std::vector<double>> rows;  // each of length cols
    std::vector<double> rhs;

    void add_row(std::vector<double> a, double b) {
        if (a.size() != cols) throw std::invalid_argument("LpProblem: row width mismatch");
        rows.push_back(std::move(a));
        rhs.push_back(b);
    }
};

struct LpResult {
    bool feasible = false;
    std::vector<double> x;       // a feasible point when feasible
    double residual_mass = 0.0;  // phase-one objective at termination
    std::size_t iterations = 0;
};

/// Phase-one simplex: minimizes the total artificial mass with Bland's
/// anti-cycling rule on a dense tableau. Intended for the tiny instances
/// produced by the witness builders; no scaling, no factorization.
inline LpResult lp_phase_one(const LpProblem& problem, double tol = 1e-7,
                             std::size_t max_iterations = 200000) {
    const std::size_t m = problem.rows.size();
    const std::size_t n = problem.cols;
    if (m == 0) return LpResult{true, std::vector<double>(n, 0.0), 0.0, 0};

    // Tableau: columns [real vars | artificials | rhs], artificial basis.
    std::vector<std::vector<double>> T(m, std::vector<double>(n + m + 1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        const double sign = problem.rhs[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) T[i][j] = sign * problem.rows[i][j];
        T[i][n + i] = 1.0;
        T[i][n + m] = sign * problem.rhs[i];
    }
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

    // Reduced cost row for minimizing the artificial sum, expressed so a
    // positive entry means the column can still decrease the objective.
    std::vector<double> cost(n + m, 0.0);
    double objective = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n + m; ++j) cost[j] += T[i][j];
        objective += T[i][n + m];
    }
    for (std::size_t i = 0; i < m; ++i) cost[n + i] -= 1.0;  // z_j - c_j for unit-cost artificials

    LpResult result;
    while (result.iterations < max_iterations) {
        // Bland: lowest-index improving column.
        std::size_t enter = n + m;
        for (std::size_t j = 0; j < n + m; ++j) {
            if (cost[j] > tol) {
                enter = j;
                break;
            }
        }
        if (enter == n + m) break;

        // Ratio test, ties broken by lowest basis index (Bland).
        std::size_t leave = m;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (T[i][enter] > tol) {
                double ratio = T[i][n + m] / T[i][enter];
                if (leave == m || ratio < best_ratio - 1e-12 ||
                    (std::abs(ratio - best_ratio) <= 1e-12 && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave == m) throw std::runtime_error("lp_phase_one: unbounded phase-one objective");

        // Pivot.
        const double pivot = T[leave][enter];
        for (double& v : T[leave]) v /= pivot;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            const double factor = T[i][enter];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j <= n + m; ++j) T[i][j] -= factor * T[leave][j];
        }
        const double cfac = cost[enter];
        for (std::size_t j = 0; j < n + m; ++j) cost[j] -= cfac * T[leave][j];
        objective -= cfac * T[leave][n + m];
        basis[leave] = enter;
        ++result.iterations;
    }

    result.residual_mass = objective;
    result.feasible = objective <= tol * static_cast<double>(std::max<std::size_t>(m, 1));
    result.x.assign(n, 0.0);
    if (result.feasible) {
        for (std::size_t i = 0; i < m; ++i)
            if (basis[i] < n) result.x[basis[i]] = T[i][n + m];
    }
    return result;
}

}  // namespace polydp
