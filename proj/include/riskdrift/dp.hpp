// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/model.hpp"
#include "riskdrift/risk.hpp"
#include "riskdrift/value_field.hpp"

#include <cstddef>

namespace riskdrift {

struct DpOptions {
    double lambda = LatticeOptions{}.lambda; // dx = lambda·σ_max·√inner_dt
    double dx = 0.0;                         // explicit space step; overrides lambda when > 0
    double x0 = 0.0;                         // centre of the space grid
};

/**
 * Output of dp_solve together with everything needed to recompute a layer:
 * the coarse grid (step h², last interval possibly shorter), the inner step
 * and copies of the problem and driver.
 */
struct DpSolution {
    ValueField field;                // producer Vh
    PiecewiseConstantPolicy policy;  // argmin control index per (interval, node)
    ProblemDefinition problem;
    DriverSpec driver;
    double h = 0.0;
    double inner_dt = 0.0;

    /// V_h at (t0 = 0, x) by linear interpolation on the first layer.
    [[nodiscard]] double value_at(double x) const { return field.value_at(0, x); }
};

/// Inner lattice steps used on an interval of the given length: the interval
/// length over inner_dt, rounded up when inner_dt does not divide it.
[[nodiscard]] std::size_t inner_steps(double length, double inner_dt);

/**
 * Backward dynamic programming over intervals of length h²:
 *   V(t_i, x) = min_α ρ^g_{t_i, t_{i+1}}[∫c ds + V(t_{i+1}, X_{t_{i+1}})]
 * with every inner evaluation run on the shared lattice with step inner_dt.
 * One lattice sweep per control yields the value for all start nodes at
 * once; ties in the argmin go to the lowest control index.
 *
 * Requires 0 < h <= 1, h² <= T, inner_dt <= h² and inner_dt dividing h².
 * radius <= 0 selects the default 6·σ_max·√T.
 */
[[nodiscard]] DpSolution dp_solve(const ProblemDefinition& problem, const DriverSpec& driver, double h,
                                  double inner_dt, double radius, const DpOptions& options = {});

/// Recomputes layer i of `field` from its layer i + 1 with the solver of
/// `solution` and returns the max abs deviation from the stored layer i.
[[nodiscard]] double dp_compose_check(const DpSolution& solution, const ValueField& field, std::size_t i);
[[nodiscard]] inline double dp_compose_check(const DpSolution& solution, std::size_t i) {
    return dp_compose_check(solution, solution.field, i);
}

/// max |V(T, x_j) - Ψ(x_j)| over the terminal layer.
[[nodiscard]] double dp_terminal_deviation(const DpSolution& solution);

/**
 * V^u(t0, x0) of a fixed piecewise-constant policy, evaluated by the same
 * backward recursion on the policy's space grid with the policy's control at
 * each (interval, node). t0 may fall inside an interval.
 */
[[nodiscard]] double evaluate_policy(const ProblemDefinition& problem, const DriverSpec& driver,
                                     const PiecewiseConstantPolicy& policy, double t0, double x0, double inner_dt);

} // namespace riskdrift
