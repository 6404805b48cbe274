// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/model.hpp"
#include "riskdrift/risk.hpp"

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace riskdrift::testing {

/// b = 0, σ = 1, c = 0, Ψ(x) = x, singleton control, T = 1.
inline ProblemDefinition brownian_linear(double horizon = 1.0) {
    ScalarProblemBuilder b;
    b.horizon = horizon;
    return b.build();
}

/// Zero driver, Ψ(x) = x²: V(t, x) = x² + (T - t).
inline ProblemDefinition heat_quadratic() {
    ScalarProblemBuilder b;
    b.terminal_cost = [](double x) { return x * x; };
    b.lipschitz_K = 20.0;
    b.bound_K = 100.0;
    return b.build();
}

inline ControlSet finite_controls(const std::vector<double>& values) {
    std::vector<ControlValue> v;
    for (double a : values) v.push_back(ControlValue{{a}});
    return ControlSet::finite(v);
}

/// U = {-1, 1}, b = α, σ = 1, c = 0, Ψ(x) = x: V(t, x) = x - (T - t).
inline ProblemDefinition two_action_drift() {
    ScalarProblemBuilder b;
    b.controls = finite_controls({-1.0, 1.0});
    b.drift = [](double, double, double a) { return a; };
    return b.build();
}

/// Plain expectation by the moment-matched trinomial recursion with the
/// reflecting ghost node, written out independently of the library sweep.
inline double lattice_expectation(const Lattice& lat, const std::function<double(double)>& payoff) {
    const UniformGrid& grid = lat.space();
    const std::size_t n = grid.count;
    const double dx = grid.step;
    std::vector<double> next(n), cur(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = payoff(grid[i]);
    const double a[1] = {0.0};
    for (std::size_t k = lat.steps(); k-- > 0;) {
        const double t = lat.times()[k];
        const double dt = lat.times()[k + 1] - t;
        for (std::size_t i = 0; i < n; ++i) {
            const double b = lat.problem().drift_at(t, grid[i], a);
            const double s = lat.problem().diffusion_at(t, grid[i], a);
            const double q = s * s * dt / (dx * dx);
            const double up = 0.5 * (q + b * dt / dx);
            const double down = 0.5 * (q - b * dt / dx);
            const double yd = i == 0 ? next[1] : next[i - 1];
            const double yu = i + 1 == n ? next[n - 2] : next[i + 1];
            cur[i] = down * yd + (1.0 - q) * next[i] + up * yu;
        }
        std::swap(cur, next);
    }
    return grid.interpolate(next, lat.x0());
}

} // namespace riskdrift::testing
