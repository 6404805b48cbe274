// SPDX-License-Identifier: MIT
#include "riskdrift/mollify.hpp"

#include "riskdrift/dp.hpp"
#include "riskdrift/errors.hpp"
#include "riskdrift/numeric.hpp"
#include "riskdrift/parallel.hpp"
#include "riskdrift/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riskdrift {

namespace {

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

/// ∫_{-1}^{1} ψ by a rule with `points` nodes.
double bump_integral(std::size_t points) {
    const QuadratureRule q = gauss_legendre(points);
    double s = 0.0;
    for (std::size_t i = 0; i < points; ++i) s += q.weights[i] * bump(q.nodes[i]);
    return s;
}

} // namespace

Mollifier::Mollifier(double epsilon, std::size_t points) : epsilon_(epsilon), points_(points) {
    if (!(epsilon > 0.0)) throw ValidationError("mollifier needs epsilon > 0");
    if (points < 2) throw ValidationError("mollifier needs at least two quadrature points per axis");
    // ∫_{-1}^{0} ψ(2τ + 1) dτ = ½ ∫ψ, so the unit-mass constant is 2 / I².
    const double I = bump_integral(400);
    scale_ = 2.0 / (I * I);

    const QuadratureRule q = gauss_legendre(points);
    double total = 0.0;
    for (std::size_t a = 0; a < points; ++a) {
        for (std::size_t b = 0; b < points; ++b) {
            const double tau = 0.5 * (q.nodes[a] - 1.0);
            const double zeta = q.nodes[b];
            const double w = 0.5 * q.weights[a] * q.weights[b] * (*this)(tau, zeta);
            total += w;
            nodes_.push_back({tau, zeta, w});
        }
    }
    raw_mass_ = total;
    for (auto& n : nodes_) n.weight /= total;
}

double Mollifier::operator()(double tau, double zeta) const {
    if (!(tau > -1.0 && tau < 0.0)) return 0.0;
    return scale_ * bump(2.0 * tau + 1.0) * bump(zeta);
}

double Mollifier::rescaled(double s, double y) const {
    const double e2 = epsilon_ * epsilon_;
    return (*this)(s / e2, y / epsilon_) / (e2 * epsilon_);
}

double Mollifier::mass() const { return raw_mass_; }

double Mollifier::rescaled_mass() const {
    const double e2 = epsilon_ * epsilon_;
    const QuadratureRule qs = gauss_legendre(points_, -e2, 0.0);
    const QuadratureRule qy = gauss_legendre(points_, -epsilon_, epsilon_);
    double total = 0.0;
    for (std::size_t a = 0; a < points_; ++a)
        for (std::size_t b = 0; b < points_; ++b) total += qs.weights[a] * qy.weights[b] * rescaled(qs.nodes[a], qy.nodes[b]);
    return total;
}

// ----------------------------------------------------------------------------
// Perturbed DP
// ----------------------------------------------------------------------------

std::vector<Perturbation> perturbation_grid(std::size_t per_axis) {
    if (per_axis < 1) throw ValidationError("perturbation grid needs at least one node per axis");
    const double d = static_cast<double>(per_axis + 1);
    std::vector<Perturbation> out;
    for (std::size_t a = 1; a <= per_axis; ++a)
        for (std::size_t b = 1; b <= per_axis; ++b)
            out.push_back({-static_cast<double>(a) / d, -1.0 + 2.0 * static_cast<double>(b) / d});
    return out;
}

PerturbedSolution perturbed_dp_solve(const ProblemDefinition& problem, const DriverSpec& driver, double h,
                                     double epsilon, double inner_dt, std::size_t per_axis,
                                     const PerturbedOptions& options) {
    if (per_axis < 2) throw ValidationError("perturbation grid needs at least two nodes per axis");
    return perturbed_dp_solve(problem, driver, h, epsilon, inner_dt, perturbation_grid(per_axis), options);
}

PerturbedSolution perturbed_dp_solve(const ProblemDefinition& problem, const DriverSpec& driver, double h,
                                     double epsilon, double inner_dt, const std::vector<Perturbation>& perturbations,
                                     const PerturbedOptions& options) {
    problem.check();
    if (!problem.is_scalar()) throw ValidationError("the perturbed DP requires n = d = 1");
    if (!(h > 0.0) || h > 1.0) throw ValidationError("perturbed DP needs h in (0, 1]");
    if (epsilon < h) throw ValidationError("perturbed DP needs epsilon >= h");
    const double T = problem.horizon;
    const double h2 = h * h;
    const double e2 = epsilon * epsilon;
    if (e2 + h2 > T * (1.0 + 1e-12))
        throw ValidationError("perturbed DP needs epsilon^2 + h^2 <= T (got " + format_number(e2 + h2) + ")");
    if (!(inner_dt > 0.0) || inner_dt > h2 * (1.0 + 1e-12))
        throw ValidationError("perturbed DP needs 0 < inner_dt <= h^2");
    if (perturbations.empty()) throw ValidationError("perturbed DP needs at least one perturbation");
    for (const auto& p : perturbations)
        if (!p.in_box()) throw ValidationError("perturbation outside B = (-1,0) x (-1,1)");

    LatticeOptions lopt;
    lopt.lambda = options.lambda;
    const Lattice lattice = build_lattice(problem, 0.0, options.x0, inner_dt, options.radius, lopt);
    const UniformGrid grid = lattice.space();
    const std::vector<double> times = interval_boundaries(0.0, T, h2);

    PerturbedSolution sol{ValueField(times, grid, FieldProducer::V_tilde), h, epsilon, inner_dt, perturbations};
    const std::size_t last = times.size() - 1;
    for (std::size_t j = 0; j < grid.count; ++j) sol.field.at(last, j) = problem.terminal_at(grid[j]);

    const std::size_t m = problem.controls.size();
    const std::size_t nb = perturbations.size();
    const std::function<double(double, double, Control)> running = [&problem](double t, double x, Control a) {
        return problem.running_cost_at(t, x, a);
    };
    std::vector<std::vector<double>> candidate(m * nb);
    for (std::size_t i = last; i-- > 0;) {
        const auto next = sol.field.layer(i + 1);
        const std::size_t steps = inner_steps(times[i + 1] - times[i], inner_dt);
        parallel_for(m * nb, [&](std::size_t job) {
            const std::size_t a = job / nb;
            const Perturbation& beta = perturbations[job % nb];
            const double shift = epsilon * beta.zeta;
            std::vector<double> terminal(grid.count);
            for (std::size_t j = 0; j < grid.count; ++j) terminal[j] = grid.interpolate(next, grid[j] - shift);
            const Control c = problem.controls[a];
            const auto start = g_evaluate_interval(problem, driver, grid, times[i] + e2 * beta.tau,
                                                   times[i + 1] + e2 * beta.tau, steps,
                                                   std::span<const Control>(&c, 1), terminal, &running);
            std::vector<double> read(grid.count);
            for (std::size_t j = 0; j < grid.count; ++j) read[j] = grid.interpolate(start, grid[j] + shift);
            candidate[job] = std::move(read);
        });
        for (std::size_t j = 0; j < grid.count; ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t job = 0; job < m * nb; ++job) best = std::min(best, candidate[job][j]);
            sol.field.at(i, j) = best;
        }
    }
    return sol;
}

// ----------------------------------------------------------------------------
// Convolution
// ----------------------------------------------------------------------------

ValueField mollify_convolve(const ValueField& field, const Mollifier& mollifier,
                            const std::optional<std::vector<double>>& times) {
    if (field.time_count() < 2) throw ValidationError("mollify_convolve needs a field with >= 2 times");
    const double e = mollifier.epsilon();
    const double e2 = e * e;
    const double t_first = field.times().front();
    const double t_max = field.times().back() - e2;
    if (t_max < t_first - 1e-12) throw ValidationError("mollify_convolve: epsilon^2 exceeds the field horizon");
    std::vector<double> out_times;
    if (times) {
        out_times = *times;
        for (double t : out_times)
            if (t > t_max + 1e-12 || t < t_first - 1e-12)
                throw ValidationError("mollify_convolve: requested t = " + format_number(t) +
                                      " outside [t0, T - epsilon^2]");
    } else {
        for (double t : field.times())
            if (t <= t_max + 1e-12) out_times.push_back(t);
    }
    if (out_times.empty()) throw ValidationError("mollify_convolve: no output times");

    const UniformGrid& space = field.space();
    ValueField out(out_times, space, FieldProducer::V_hat);
    const auto& nodes = mollifier.nodes();
    parallel_for(out_times.size(), [&](std::size_t k) {
        const double t = out_times[k];
        for (std::size_t i = 0; i < space.count; ++i) {
            double acc = 0.0;
            for (const auto& q : nodes) acc += q.weight * field.interpolate(t - e2 * q.tau, space[i] - e * q.zeta);
            out.at(k, i) = acc;
        }
    });
    return out;
}

SeminormReport seminorm_estimate(const ValueField& field, double epsilon, const SeminormOptions& options) {
    const std::size_t K = field.time_count();
    const std::size_t n = field.space_count();
    if (K < 5 || n < 5) throw ValidationError("seminorm_estimate needs >= 5 nodes per axis");
    const auto& t = field.times();
    const double dt = t[1] - t[0];
    for (std::size_t k = 1; k < K; ++k)
        if (std::abs((t[k] - t[k - 1]) - dt) > 1e-9 * std::max(1.0, dt))
            throw ValidationError("seminorm_estimate needs a uniform time grid");
    const double dx = field.space().step;
    auto inside = [&](std::size_t i) {
        return options.half_width <= 0.0 || std::abs(field.space()[i] - options.center) <= options.half_width + 1e-12;
    };

    SeminormReport r;
    r.epsilon = epsilon;
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (inside(i)) r.sup_abs = std::max(r.sup_abs, std::abs(field.at(k, i)));

    // Derivative fields on interior nodes (k, i), 1 <= k <= K-2, 1 <= i <= n-2.
    const std::size_t Ki = K - 2, ni = n - 2;
    std::vector<double> dxx(Ki * ni), dtt(Ki * ni);
    for (std::size_t k = 1; k + 1 < K; ++k) {
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double d1 = (field.at(k, i + 1) - field.at(k, i - 1)) / (2.0 * dx);
            const double d2 = (field.at(k, i + 1) - 2.0 * field.at(k, i) + field.at(k, i - 1)) / (dx * dx);
            const double dtv = (field.at(k + 1, i) - field.at(k - 1, i)) / (2.0 * dt);
            dxx[(k - 1) * ni + (i - 1)] = d2;
            dtt[(k - 1) * ni + (i - 1)] = dtv;
            if (!inside(i)) continue;
            ++r.nodes;
            r.sup_dx = std::max(r.sup_dx, std::abs(d1));
            r.sup_dxx = std::max(r.sup_dxx, std::abs(d2));
            r.sup_dt = std::max(r.sup_dt, std::abs(dtv));
        }
    }
    for (std::size_t k = 0; k < Ki; ++k) {
        for (std::size_t i = 0; i < ni; ++i) {
            if (!inside(i + 1)) continue;
            const std::size_t at = k * ni + i;
            if (i + 1 < ni && inside(i + 2)) {
                r.holder_dxx = std::max(r.holder_dxx, std::abs(dxx[at + 1] - dxx[at]) / dx);
                r.holder_dt = std::max(r.holder_dt, std::abs(dtt[at + 1] - dtt[at]) / dx);
            }
            if (k + 1 < Ki) {
                r.holder_dxx = std::max(r.holder_dxx, std::abs(dxx[at + ni] - dxx[at]) / dt);
                r.holder_dt = std::max(r.holder_dt, std::abs(dtt[at + ni] - dtt[at]) / dt);
            }
        }
    }
    return r;
}

GapReport mollified_dp_gap(const ProblemDefinition& problem, const DriverSpec& driver, double h, double epsilon,
                           const ValueField& field_hat, const GapOptions& options) {
    problem.check();
    if (!problem.is_scalar()) throw ValidationError("mollified_dp_gap requires n = d = 1");
    if (epsilon < h) throw ValidationError("mollified_dp_gap needs epsilon >= h");
    const double h2 = h * h;
    const double t_limit = problem.horizon - epsilon * epsilon - h2;
    const UniformGrid& grid = field_hat.space();

    const CoefficientBounds cb = sample_coefficient_bounds(problem, 0.0, grid);
    double dt = options.inner_dt > 0.0 ? options.inner_dt : h2 / 10.0;
    if (cb.sigma_max > 0.0) dt = std::min(dt, grid.step * grid.step / (3.0 * cb.sigma_max * cb.sigma_max));
    const std::size_t steps = inner_steps(h2, dt);

    std::vector<double> starts;
    for (double t : field_hat.times())
        if (t <= t_limit + 1e-12) starts.push_back(t);
    if (starts.empty()) throw ValidationError("mollified_dp_gap needs some t <= T - epsilon^2 - h^2 on the field grid");

    std::vector<std::size_t> sampled;
    for (std::size_t i = 0; i < grid.count; ++i)
        if (options.half_width <= 0.0 || std::abs(grid[i] - options.center) <= options.half_width + 1e-12)
            sampled.push_back(i);

    const std::size_t m = problem.controls.size();
    const std::function<double(double, double, Control)> running = [&problem](double t, double x, Control a) {
        return problem.running_cost_at(t, x, a);
    };
    std::vector<GapReport> per(starts.size() * m);
    parallel_for(starts.size() * m, [&](std::size_t job) {
        const double t = starts[job / m];
        const std::size_t a = job % m;
        const std::size_t k = field_hat.time_index(t);
        std::vector<double> terminal(grid.count);
        for (std::size_t j = 0; j < grid.count; ++j) terminal[j] = field_hat.interpolate(t + h2, grid[j]);
        const Control c = problem.controls[a];
        const auto rho = g_evaluate_interval(problem, driver, grid, t, t + h2, steps, std::span<const Control>(&c, 1),
                                             terminal, &running);
        GapReport g;
        g.max_gap = -std::numeric_limits<double>::infinity();
        for (std::size_t i : sampled) {
            const double gap = field_hat.at(k, i) - rho[i];
            if (gap > g.max_gap) g = {gap, t, grid[i], a, 0};
        }
        g.samples = sampled.size();
        per[job] = g;
    });
    GapReport out;
    out.max_gap = -std::numeric_limits<double>::infinity();
    for (const auto& g : per) {
        out.samples += g.samples;
        if (g.max_gap > out.max_gap) {
            const std::size_t s = out.samples;
            out = g;
            out.samples = s;
        }
    }
    return out;
}

} // namespace riskdrift
