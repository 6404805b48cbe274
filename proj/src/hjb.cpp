// SPDX-License-Identifier: MIT
#include "riskdrift/hjb.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/numeric.hpp"
#include "riskdrift/parallel.hpp"
#include "riskdrift/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riskdrift {

namespace {

/// Slopes (lo, hi) with g(z) = max(lo·z, hi·z); rejects drivers that are not
/// of that form on a probe set.
std::pair<double, double> driver_slopes(const DriverSpec& driver, double horizon) {
    if (driver.noise_dim() != 1) throw ValidationError("the HJB solver needs a scalar driver");
    for (double t : {0.0, 0.5 * horizon, horizon}) {
        const auto [lo, hi] = driver.slopes(t);
        for (double z : {-3.0, -0.7, 0.4, 2.5}) {
            const double want = std::max(lo * z, hi * z);
            if (std::abs(driver(t, z) - want) > 1e-12 * (1.0 + std::abs(want)))
                throw ValidationError("the HJB solver needs a convex positively homogeneous scalar driver");
        }
    }
    return driver.slopes(0.0);
}

struct NodeValue {
    double value;
    std::size_t argmin;
};

/// min_α {c + ½σ²D²v + max_γ upwind[(b + γσ)Dv]} at node i of `v`.
NodeValue node_hamiltonian(const ProblemDefinition& problem, const DriverSpec& driver, double t, double x,
                           double vm, double v, double vp, double dx) {
    const auto [lo, hi] = driver.slopes(t);
    const double dplus = (vp - v) / dx;
    const double dminus = (v - vm) / dx;
    const double d2 = (vp - 2.0 * v + vm) / (dx * dx);
    NodeValue best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t a = 0; a < problem.controls.size(); ++a) {
        const Control u = problem.controls[a];
        const double b = problem.drift_at(t, x, u);
        const double s = problem.diffusion_at(t, x, u);
        double first = -std::numeric_limits<double>::infinity();
        for (double gamma : {lo, hi}) {
            const double coef = b + gamma * s;
            first = std::max(first, coef >= 0.0 ? coef * dplus : coef * dminus);
        }
        const double h = problem.running_cost_at(t, x, u) + 0.5 * s * s * d2 + first;
        if (h < best.value) best = {h, a};
    }
    return best;
}

} // namespace

HjbGrid make_hjb_grid(const ProblemDefinition& problem, const DriverSpec& driver, double dx,
                      const HjbGridOptions& options) {
    problem.check();
    if (!problem.is_scalar()) throw ValidationError("the HJB solver requires n = d = 1");
    if (!(dx > 0.0)) throw ValidationError("HJB grid needs dx > 0");
    const double T = problem.horizon;
    HjbGrid g;
    g.dx = dx;
    g.center = options.center;

    const UniformGrid probe = UniformGrid::centered(options.center, 0.05, 200);
    const CoefficientBounds rough = sample_coefficient_bounds(problem, 0.0, probe);
    g.radius = options.radius > 0.0 ? options.radius
                                    : 6.0 * (rough.sigma_max > 0.0 ? rough.sigma_max : 1.0) * std::sqrt(T) +
                                          rough.drift_max * T;
    const CoefficientBounds cb = sample_coefficient_bounds(problem, 0.0, g.space());
    g.drift_max = cb.drift_max;
    g.sigma_max = cb.sigma_max;
    const double rate = cb.sigma_max * cb.sigma_max / (dx * dx) +
                        (cb.drift_max + driver.lipschitz_K() * cb.sigma_max) / dx;

    if (options.dt > 0.0) {
        g.steps = static_cast<std::size_t>(std::ceil(T / options.dt - 1e-9));
    } else {
        g.steps = rate > 0.0 ? static_cast<std::size_t>(std::ceil(T * rate - 1e-12)) : 1;
    }
    g.steps = std::max<std::size_t>(g.steps, 1);
    g.dt = T / static_cast<double>(g.steps);
    g.cfl = g.dt * rate;
    if (g.cfl > 1.0 + 1e-12)
        throw NumericalError("HJB CFL condition violated: dt*(sigma^2/dx^2 + (b + K sigma)/dx) = " +
                             format_number(g.cfl) + " > 1");
    g.store_every = 1;
    if (options.max_stored_layers > 1 && g.steps + 1 > options.max_stored_layers)
        g.store_every = (g.steps + options.max_stored_layers - 2) / (options.max_stored_layers - 1);
    return g;
}

ValueField solve_hjb(const ProblemDefinition& problem, const DriverSpec& driver, const HjbGrid& grid) {
    problem.check();
    if (!problem.is_scalar()) throw ValidationError("the HJB solver requires n = d = 1");
    (void)driver_slopes(driver, problem.horizon);
    const double T = problem.horizon;
    const UniformGrid space = grid.space();
    const std::size_t n = space.count;
    if (n < 3) throw ValidationError("HJB grid needs at least three space nodes");

    // Stored layers: k = 0, s, 2s, ... and the terminal step.
    std::vector<std::size_t> stored;
    for (std::size_t k = 0; k < grid.steps; k += grid.store_every) stored.push_back(k);
    stored.push_back(grid.steps);
    std::vector<double> times(stored.size());
    for (std::size_t j = 0; j < stored.size(); ++j)
        times[j] = j + 1 == stored.size() ? T : static_cast<double>(stored[j]) * grid.dt;
    ValueField field(times, space, FieldProducer::V_hjb);

    std::vector<double> next(n), cur(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = problem.terminal_at(space[i]);
    std::copy(next.begin(), next.end(), field.layer(stored.size() - 1).begin());

    std::size_t slot = stored.size() - 1;
    for (std::size_t k = grid.steps; k-- > 0;) {
        const double t = static_cast<double>(k) * grid.dt;
        parallel_for(n, [&](std::size_t i) {
            const double vm = next[i == 0 ? 1 : i - 1];
            const double vp = next[i + 1 == n ? n - 2 : i + 1];
            cur[i] = next[i] + grid.dt * node_hamiltonian(problem, driver, t, space[i], vm, next[i], vp, grid.dx).value;
        });
        std::swap(next, cur);
        if (slot > 0 && stored[slot - 1] == k) {
            --slot;
            std::copy(next.begin(), next.end(), field.layer(slot).begin());
        }
    }
    return field;
}

HamiltonianReport hamiltonian_residual(const ValueField& field, const ProblemDefinition& problem,
                                       const DriverSpec& driver) {
    (void)driver_slopes(driver, problem.horizon);
    const UniformGrid& space = field.space();
    const std::size_t n = space.count;
    if (n < 3 || field.time_count() < 2) throw ValidationError("residual needs >= 3 space and >= 2 time nodes");
    HamiltonianReport rep;
    rep.space = space;
    rep.times.assign(field.times().begin(), field.times().end() - 1);
    rep.residual.assign(rep.times.size() * n, 0.0);
    for (std::size_t k = 0; k + 1 < field.time_count(); ++k) {
        const double t = field.times()[k];
        const double dt = field.times()[k + 1] - t;
        const auto v = field.layer(k);
        const auto w = field.layer(k + 1);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h = node_hamiltonian(problem, driver, t, space[i], v[i - 1], v[i], v[i + 1], space.step).value;
            const double r = (w[i] - v[i]) / dt + h;
            rep.residual[k * n + i] = r;
            if (std::abs(r) > rep.max_norm) {
                rep.max_norm = std::abs(r);
                rep.max_time = t;
                rep.max_x = space[i];
            }
        }
    }
    return rep;
}

PolicyField extract_policy(const ValueField& field, const ProblemDefinition& problem, const DriverSpec& driver) {
    (void)driver_slopes(driver, problem.horizon);
    const UniformGrid& space = field.space();
    const std::size_t n = space.count;
    if (n < 3 || field.time_count() < 2) throw ValidationError("policy extraction needs >= 3 space and >= 2 time nodes");
    PolicyField policy(field.times(), space);
    for (std::size_t k = 0; k + 1 < field.time_count(); ++k) {
        const double t = field.times()[k];
        const auto v = field.layer(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double vm = v[i == 0 ? 1 : i - 1];
            const double vp = v[i + 1 == n ? n - 2 : i + 1];
            policy.index(k, i) = node_hamiltonian(problem, driver, t, space[i], vm, v[i], vp, space.step).argmin;
        }
    }
    return policy;
}

} // namespace riskdrift
