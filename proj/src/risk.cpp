// SPDX-License-Identifier: MIT
#include "riskdrift/risk.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/numeric.hpp"
#include "riskdrift/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace riskdrift {

Stencil trinomial_stencil(double drift, double sigma, double dt, double dx) {
    constexpr double tol = 1e-13;
    const double q = sigma * sigma * dt / (dx * dx);
    const double m = drift * dt / dx;
    Stencil s{0.5 * (q - m), 1.0 - q, 0.5 * (q + m)};
    if (s.down < -tol || s.up < -tol || s.stay < -tol)
        throw NumericalError("negative lattice probability (b=" + format_number(drift) +
                             ", sigma=" + format_number(sigma) + ", dt=" + format_number(dt) +
                             ", dx=" + format_number(dx) + ")");
    s.down = std::max(s.down, 0.0);
    s.up = std::max(s.up, 0.0);
    s.stay = std::max(s.stay, 0.0);
    return s;
}

CoefficientBounds sample_coefficient_bounds(const ProblemDefinition& problem, double t0, const UniformGrid& space) {
    CoefficientBounds cb;
    constexpr std::size_t time_samples = 9;
    const std::size_t stride = std::max<std::size_t>(1, space.count / 400);
    for (std::size_t it = 0; it < time_samples; ++it) {
        const double t = t0 + (problem.horizon - t0) * static_cast<double>(it) / (time_samples - 1);
        for (std::size_t i = 0; i < space.count; i += stride) {
            for (std::size_t a = 0; a < problem.controls.size(); ++a) {
                cb.drift_max = std::max(cb.drift_max, std::abs(problem.drift_at(t, space[i], problem.controls[a])));
                cb.sigma_max = std::max(cb.sigma_max, std::abs(problem.diffusion_at(t, space[i], problem.controls[a])));
            }
        }
    }
    return cb;
}

double default_radius(const ProblemDefinition& problem, double center) {
    // σ_max on a generous box around the centre; the radius only needs the scale.
    const UniformGrid probe = UniformGrid::centered(center, 0.05, 200);
    const CoefficientBounds cb = sample_coefficient_bounds(problem, 0.0, probe);
    const double sigma = cb.sigma_max > 0.0 ? cb.sigma_max : 1.0;
    return 6.0 * sigma * std::sqrt(problem.horizon);
}

Lattice::Lattice(ProblemDefinition problem, double t0, double x0, double dt, double dx, UniformGrid space)
    : problem_(std::move(problem)), t0_(t0), x0_(x0), dt_(dt), dx_(dx), space_(space) {
    const double T = problem_.horizon;
    const auto n = static_cast<std::size_t>(std::llround((T - t0_) / dt_));
    times_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) times_[k] = t0_ + static_cast<double>(k) * dt_;
    times_[n] = T;
}

Lattice build_lattice(const ProblemDefinition& problem, double t0, double x0, double dt, double radius,
                      const LatticeOptions& options) {
    problem.check();
    if (!problem.is_scalar()) throw ValidationError("the lattice engine requires n = d = 1");
    const double span = problem.horizon - t0;
    if (!(span > 0.0)) throw ValidationError("lattice needs t0 < T");
    if (!(dt > 0.0) || dt > span * (1.0 + 1e-12)) throw ValidationError("lattice needs 0 < dt <= T - t0");
    if (options.dx <= 0.0 && options.lambda < 1.0) throw ValidationError("lattice lambda must be >= 1");

    const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
    const double dt_eff = span / static_cast<double>(steps);
    if (radius <= 0.0) radius = default_radius(problem, x0);

    double dx = options.dx;
    if (dx <= 0.0) {
        const UniformGrid probe = UniformGrid::covering(x0, radius / 200.0, radius);
        const double sigma_max = sample_coefficient_bounds(problem, t0, probe).sigma_max;
        if (!(sigma_max > 0.0)) throw ValidationError("lattice needs sigma_max > 0 (set dx explicitly)");
        dx = options.lambda * sigma_max * std::sqrt(dt_eff);
    }
    const UniformGrid space = UniformGrid::covering(x0, dx, radius);
    Lattice lattice(problem, t0, x0, dt_eff, dx, space);

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = lattice.times()[k];
        for (std::size_t a = 0; a < problem.controls.size(); ++a)
            for (std::size_t i = 0; i < space.count; ++i) (void)lattice.stencil(t, space[i], problem.controls[a]);
    }
    return lattice;
}

// ----------------------------------------------------------------------------
// Cost functional
// ----------------------------------------------------------------------------

CostFunctional CostFunctional::from_problem(const ProblemDefinition& problem) {
    CostFunctional c;
    auto p = std::make_shared<ProblemDefinition>(problem);
    c.running = [p](double t, double x, Control a) { return p->running_cost_at(t, x, a); };
    c.terminal = [p](double x) { return p->terminal_at(x); };
    return c;
}

CostFunctional CostFunctional::terminal_only(std::function<double(double)> terminal) {
    CostFunctional c;
    c.terminal = std::move(terminal);
    return c;
}

double CostFunctional::on_path(const PathEnsemble& e, std::size_t p, const ControlSet& controls,
                               const ControlValue* fixed) const {
    double acc = 0.0;
    if (running) {
        for (std::size_t k = 0; k < e.steps; ++k) {
            const Control a = fixed ? fixed->view() : controls[e.control_indices[p * e.steps + k]];
            acc += (e.time_grid[k + 1] - e.time_grid[k]) * running(e.time_grid[k], e.state(p, k), a);
        }
    }
    return acc + terminal(e.terminal(p));
}

// ----------------------------------------------------------------------------
// Backward recursion
// ----------------------------------------------------------------------------

void backward_step(const ProblemDefinition& problem, const DriverSpec& driver, const UniformGrid& grid, double t,
                   double dt, std::span<const Control> controls, std::span<const double> next,
                   std::span<double> out, std::span<double> z_out,
                   const std::function<double(double, double, Control)>* running) {
    if (driver.lipschitz_K() * dt >= 1.0)
        throw NumericalError("driver Lipschitz constant times dt must be < 1 (K=" +
                             format_number(driver.lipschitz_K()) + ", dt=" + format_number(dt) + ")");
    const std::size_t n = grid.count;
    const double dx = grid.step;
    const bool broadcast = controls.size() == 1;
    for (std::size_t i = 0; i < n; ++i) {
        const Control a = broadcast ? controls[0] : controls[i];
        const double x = grid[i];
        const double b = problem.drift_at(t, x, a);
        const double sigma = problem.diffusion_at(t, x, a);
        const Stencil p = trinomial_stencil(b, sigma, dt, dx);
        const std::size_t lo = i == 0 ? (n > 1 ? 1 : 0) : i - 1;
        const std::size_t hi = i + 1 == n ? (n > 1 ? n - 2 : 0) : i + 1;
        const double y = next[i];
        const double yd = next[lo];
        const double yu = next[hi];
        const double expectation = p.down * yd + p.stay * y + p.up * yu;

        double z = 0.0;
        if (sigma != 0.0) {
            const double drift_shift = b * dt;
            const double dw_up = (dx - drift_shift) / sigma;
            const double dw_down = (-dx - drift_shift) / sigma;
            // The stay branch has ΔW = -bΔt/σ but contributes (y - y)·ΔW = 0.
            z = (p.up * (yu - y) * dw_up + p.down * (yd - y) * dw_down) / dt;
        }
        double source = driver(t, z);
        if (running && *running) source += (*running)(t, x, a);
        out[i] = expectation + dt * source;
        if (!z_out.empty()) z_out[i] = z;
    }
}

std::vector<double> g_evaluate_layers(const Lattice& lattice, const DriverSpec& driver, const CostFunctional& cost,
                                      const LatticeControl& control, std::span<const double> layer_end,
                                      std::size_t k_end, std::size_t k_begin, std::vector<double>* z_center) {
    if (driver.noise_dim() != 1) throw ValidationError("lattice g-evaluation needs a driver with d = 1");
    if (k_end > lattice.steps() || k_begin > k_end) throw ValidationError("invalid lattice step range");
    const UniformGrid& grid = lattice.space();
    if (layer_end.size() != grid.count) throw ValidationError("terminal layer has the wrong size");

    std::vector<double> next(layer_end.begin(), layer_end.end());
    std::vector<double> cur(grid.count);
    std::vector<double> z(z_center ? grid.count : 0);
    if (z_center) z_center->assign(k_end - k_begin, 0.0);

    std::vector<Control> node_controls;
    const auto* fixed = std::get_if<ControlValue>(&control);
    const PolicyField* policy = fixed ? nullptr : &std::get<std::reference_wrapper<const PolicyField>>(control).get();
    if (fixed) node_controls.push_back(fixed->view());
    else node_controls.resize(grid.count);

    const auto* running = cost.running ? &cost.running : nullptr;
    for (std::size_t k = k_end; k-- > k_begin;) {
        const double t = lattice.times()[k];
        if (policy)
            for (std::size_t i = 0; i < grid.count; ++i)
                node_controls[i] = lattice.problem().controls[policy->control_index(t, grid[i])];
        backward_step(lattice.problem(), driver, grid, t, lattice.times()[k + 1] - t, node_controls, next, cur, z,
                      running);
        if (z_center) (*z_center)[k - k_begin] = z[lattice.center_index()];
        std::swap(next, cur);
    }
    return next;
}

std::vector<double> g_evaluate_interval(const ProblemDefinition& problem, const DriverSpec& driver,
                                        const UniformGrid& grid, double t_begin, double t_end, std::size_t steps,
                                        std::span<const Control> controls, std::span<const double> layer_end,
                                        const std::function<double(double, double, Control)>* running) {
    if (steps < 1 || !(t_end > t_begin)) throw ValidationError("interval sweep needs t_begin < t_end and steps >= 1");
    if (layer_end.size() != grid.count) throw ValidationError("terminal layer has the wrong size");
    const double dt = (t_end - t_begin) / static_cast<double>(steps);
    std::vector<double> next(layer_end.begin(), layer_end.end());
    std::vector<double> cur(grid.count);
    for (std::size_t k = steps; k-- > 0;) {
        const double t = t_begin + static_cast<double>(k) * dt;
        backward_step(problem, driver, grid, t, dt, controls, next, cur, {}, running);
        std::swap(next, cur);
    }
    return next;
}

RiskValue g_evaluate_lattice(const Lattice& lattice, const DriverSpec& driver, const CostFunctional& cost,
                             const LatticeControl& control) {
    const UniformGrid& grid = lattice.space();
    std::vector<double> terminal(grid.count);
    for (std::size_t i = 0; i < grid.count; ++i) terminal[i] = cost.terminal(grid[i]);
    RiskValue r;
    r.method = "lattice";
    const auto layer = g_evaluate_layers(lattice, driver, cost, control, terminal, lattice.steps(), 0, &r.z_profile);
    r.value = grid.interpolate(layer, lattice.x0());
    return r;
}

// ----------------------------------------------------------------------------
// Regression Monte Carlo
// ----------------------------------------------------------------------------

namespace {

/// Polynomial features per coordinate of X_k; degenerate coordinates drop out.
Eigen::MatrixXd design_matrix(const PathEnsemble& e, std::size_t k, std::size_t degree) {
    const std::size_t P = e.paths;
    const std::size_t n = e.state_dim;
    std::vector<std::pair<double, double>> scale; // (mean, sd) for active coordinates
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t p = 0; p < P; ++p) m += e.state(p, k, i);
        m /= static_cast<double>(P);
        double v = 0.0;
        for (std::size_t p = 0; p < P; ++p) v += (e.state(p, k, i) - m) * (e.state(p, k, i) - m);
        const double sd = std::sqrt(v / static_cast<double>(P));
        if (sd > 1e-12 * (1.0 + std::abs(m))) {
            active.push_back(i);
            scale.emplace_back(m, sd);
        }
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(1 + active.size() * degree));
    for (std::size_t p = 0; p < P; ++p) {
        const auto row = static_cast<Eigen::Index>(p);
        X(row, 0) = 1.0;
        Eigen::Index col = 1;
        for (std::size_t j = 0; j < active.size(); ++j) {
            const double u = (e.state(p, k, active[j]) - scale[j].first) / scale[j].second;
            double pw = 1.0;
            for (std::size_t q = 1; q <= degree; ++q) {
                pw *= u;
                X(row, col++) = pw;
            }
        }
    }
    return X;
}

} // namespace

RiskValue g_evaluate_mc(const ProblemDefinition& problem, const DriverSpec& driver, const CostFunctional& cost,
                        const PathControl& control, double t0, std::span<const double> x0, const McOptions& options) {
    if (options.basis_degree < 1) throw ValidationError("regression basis degree must be >= 1");
    if (options.paths < 2) throw ValidationError("regression Monte Carlo needs at least two paths");
    if (driver.noise_dim() != problem.noise_dim) throw ValidationError("driver and problem noise dimensions differ");

    const PathEnsemble e = simulate_paths(problem, control, t0, x0, options.steps, options.paths, options.seed);
    const std::size_t P = e.paths;
    const std::size_t d = e.noise_dim;
    const auto* fixed = std::get_if<ControlValue>(&control);

    auto control_at = [&](std::size_t p, std::size_t k) -> Control {
        return fixed ? fixed->view() : problem.controls[e.control_indices[p * e.steps + k]];
    };
    auto state_at = [&](std::size_t p, std::size_t k) {
        return std::span<const double>(e.states.data() + (p * (e.steps + 1) + k) * e.state_dim, e.state_dim);
    };
    auto running_at = [&](double t, std::size_t p, std::size_t k) {
        if (!cost.running) return 0.0;
        if (e.state_dim == 1) return cost.running(t, e.state(p, k), control_at(p, k));
        return problem.running_cost_at(t, state_at(p, k), control_at(p, k));
    };

    Eigen::VectorXd y(static_cast<Eigen::Index>(P));
    std::vector<double> pathwise(P);
    for (std::size_t p = 0; p < P; ++p) {
        y(static_cast<Eigen::Index>(p)) = cost.terminal(e.terminal(p));
        pathwise[p] = y(static_cast<Eigen::Index>(p));
    }

    RiskValue r;
    r.method = "mc";
    r.z_profile.assign(e.steps, 0.0);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(P));
    std::vector<double> zp(d);
    for (std::size_t k = e.steps; k-- > 0;) {
        const double t = e.time_grid[k];
        const double dt = e.time_grid[k + 1] - t;
        const Eigen::MatrixXd X = design_matrix(e, k, options.basis_degree);
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        if (qr.rank() < X.cols())
            throw NumericalError("singular regression at step " + std::to_string(k) + " (rank " +
                                 std::to_string(qr.rank()) + " of " + std::to_string(X.cols()) + ")");
        const Eigen::VectorXd fitted_y = X * qr.solve(y);
        std::vector<Eigen::VectorXd> fitted_z(d);
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t p = 0; p < P; ++p)
                rhs(static_cast<Eigen::Index>(p)) = y(static_cast<Eigen::Index>(p)) * e.increment(p, k, j) / dt;
            fitted_z[j] = X * qr.solve(rhs);
        }
        for (std::size_t p = 0; p < P; ++p) {
            const auto row = static_cast<Eigen::Index>(p);
            for (std::size_t j = 0; j < d; ++j) zp[j] = fitted_z[j](row);
            const double source = running_at(t, p, k) + driver(t, zp);
            y(row) = fitted_y(row) + dt * source;
            pathwise[p] += dt * source;
        }
        r.z_profile[k] = fitted_z[0].mean();
    }
    r.value = y.mean();
    r.std_error = standard_error(pathwise);
    return r;
}

} // namespace riskdrift
