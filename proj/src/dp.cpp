// SPDX-License-Identifier: MIT
#include "riskdrift/dp.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/numeric.hpp"
#include "riskdrift/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace riskdrift {

std::size_t inner_steps(double length, double inner_dt) {
    if (!(length > 0.0) || !(inner_dt > 0.0)) throw ValidationError("inner_steps needs positive arguments");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / inner_dt - 1e-9)));
}

namespace {

using Running = std::function<double(double, double, Control)>;

Running running_of(const ProblemDefinition& problem) {
    return [&problem](double t, double x, Control a) { return problem.running_cost_at(t, x, a); };
}

/// One DP layer: min over controls of the interval sweep from `next`.
void dp_layer(const ProblemDefinition& problem, const DriverSpec& driver, const UniformGrid& grid, double t_begin,
              double t_end, double inner_dt, std::span<const double> next, std::span<double> out,
              std::span<std::size_t> argmin) {
    const std::size_t m = problem.controls.size();
    const std::size_t steps = inner_steps(t_end - t_begin, inner_dt);
    const Running running = running_of(problem);
    std::vector<std::vector<double>> per_control(m);
    parallel_for(m, [&](std::size_t a) {
        const Control c = problem.controls[a];
        per_control[a] = g_evaluate_interval(problem, driver, grid, t_begin, t_end, steps,
                                             std::span<const Control>(&c, 1), next, &running);
    });
    for (std::size_t i = 0; i < grid.count; ++i) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < m; ++a)
            if (per_control[a][i] < per_control[best][i]) best = a;
        out[i] = per_control[best][i];
        if (!argmin.empty()) argmin[i] = best;
    }
}

} // namespace

DpSolution dp_solve(const ProblemDefinition& problem, const DriverSpec& driver, double h, double inner_dt,
                    double radius, const DpOptions& options) {
    problem.check();
    if (!(h > 0.0) || h > 1.0) throw ValidationError("dp_solve needs h in (0, 1]");
    const double T = problem.horizon;
    const double h2 = h * h;
    if (h2 > T * (1.0 + 1e-12)) throw ValidationError("dp_solve needs h^2 <= T");
    if (!(inner_dt > 0.0) || inner_dt > h2 * (1.0 + 1e-12)) throw ValidationError("dp_solve needs 0 < inner_dt <= h^2");
    const double ratio = h2 / inner_dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        throw ValidationError("inner_dt must divide h^2 (h^2 / inner_dt = " + format_number(ratio) + ")");
    if (driver.noise_dim() != 1) throw ValidationError("dp_solve needs a scalar driver");

    LatticeOptions lopt;
    lopt.lambda = options.lambda;
    lopt.dx = options.dx;
    const Lattice lattice = build_lattice(problem, 0.0, options.x0, inner_dt, radius, lopt);
    const UniformGrid grid = lattice.space();
    const std::vector<double> times = interval_boundaries(0.0, T, h2);

    DpSolution sol{ValueField(times, grid, FieldProducer::Vh),
                   PiecewiseConstantPolicy(times, grid, h2),
                   problem,
                   driver,
                   h,
                   inner_dt};
    const std::size_t last = times.size() - 1;
    for (std::size_t j = 0; j < grid.count; ++j) sol.field.at(last, j) = problem.terminal_at(grid[j]);

    std::vector<std::size_t> argmin(grid.count);
    for (std::size_t i = last; i-- > 0;) {
        dp_layer(sol.problem, driver, grid, times[i], times[i + 1], inner_dt, sol.field.layer(i + 1),
                 sol.field.layer(i), argmin);
        for (std::size_t j = 0; j < grid.count; ++j) sol.policy.index(i, j) = argmin[j];
    }
    return sol;
}

double dp_compose_check(const DpSolution& sol, const ValueField& field, std::size_t i) {
    if (i + 1 >= field.time_count()) throw ValidationError("dp_compose_check needs i < number of coarse steps");
    std::vector<double> layer(field.space_count());
    dp_layer(sol.problem, sol.driver, field.space(), field.times()[i], field.times()[i + 1], sol.inner_dt,
             field.layer(i + 1), layer, {});
    double dev = 0.0;
    for (std::size_t j = 0; j < layer.size(); ++j) dev = std::max(dev, std::abs(layer[j] - field.at(i, j)));
    return dev;
}

double dp_terminal_deviation(const DpSolution& sol) {
    const std::size_t last = sol.field.time_count() - 1;
    double dev = 0.0;
    for (std::size_t j = 0; j < sol.field.space_count(); ++j)
        dev = std::max(dev, std::abs(sol.field.at(last, j) - sol.problem.terminal_at(sol.field.space()[j])));
    return dev;
}

double evaluate_policy(const ProblemDefinition& problem, const DriverSpec& driver,
                       const PiecewiseConstantPolicy& policy, double t0, double x0, double inner_dt) {
    problem.check();
    if (!(inner_dt > 0.0)) throw ValidationError("evaluate_policy needs inner_dt > 0");
    const auto& b = policy.boundaries();
    const double T = problem.horizon;
    if (policy.start_time() > t0 + 1e-10 || policy.end_time() < T - 1e-10)
        throw ValidationError("policy does not cover [t0, T]");
    if (!(t0 < T)) throw ValidationError("evaluate_policy needs t0 < T");

    const UniformGrid& grid = policy.space();
    const Running running = running_of(problem);
    std::vector<double> layer(grid.count);
    for (std::size_t j = 0; j < grid.count; ++j) layer[j] = problem.terminal_at(grid[j]);
    // The control chosen at the start node is frozen for the whole interval,
    // so each node reads the sweep of its own constant control.
    const std::size_t m = problem.controls.size();
    const std::size_t first = policy.interval_of(t0);
    for (std::size_t k = policy.interval_count(); k-- > first;) {
        const double begin = k == first ? std::max(t0, b[k]) : b[k];
        const double end = b[k + 1];
        if (end - begin <= 1e-14) continue;
        std::vector<std::vector<double>> per_control(m);
        std::vector<char> used(m, 0);
        for (std::size_t j = 0; j < grid.count; ++j) used[policy.index(k, j)] = 1;
        parallel_for(m, [&](std::size_t a) {
            if (!used[a]) return;
            const Control c = problem.controls[a];
            per_control[a] = g_evaluate_interval(problem, driver, grid, begin, end, inner_steps(end - begin, inner_dt),
                                                 std::span<const Control>(&c, 1), layer, &running);
        });
        for (std::size_t j = 0; j < grid.count; ++j) layer[j] = per_control[policy.index(k, j)][j];
    }
    return grid.interpolate(layer, x0);
}

} // namespace riskdrift
