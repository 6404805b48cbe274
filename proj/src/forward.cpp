// SPDX-License-Identifier: MIT
#include "riskdrift/forward.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/parallel.hpp"
#include "riskdrift/numeric.hpp"

#include <cmath>
#include <ostream>

namespace riskdrift {

double brownian_increment(const CounterRng& rng, std::size_t path, std::size_t step, std::size_t coord, double dt,
                          std::size_t refinement) {
    if (refinement <= 1) return std::sqrt(dt) * rng.normal(path, step, coord);
    const double fine = std::sqrt(dt / static_cast<double>(refinement));
    double sum = 0.0;
    for (std::size_t j = 0; j < refinement; ++j) sum += rng.normal(path, step * refinement + j, coord);
    return fine * sum;
}

PathEnsemble simulate_paths(const ProblemDefinition& problem, const PathControl& control, double t0,
                            std::span<const double> x0, std::size_t steps, std::size_t paths, Seed seed,
                            const SimulationOptions& options) {
    problem.check();
    const double T = problem.horizon;
    if (!(t0 < T)) throw ValidationError("simulate_paths needs t0 < T");
    if (steps < 1) throw ValidationError("simulate_paths needs at least one step");
    if (x0.size() != problem.state_dim) throw ValidationError("initial state has the wrong dimension");

    const FeedbackPolicy* policy = nullptr;
    if (const auto* p = std::get_if<std::reference_wrapper<const FeedbackPolicy>>(&control)) {
        policy = &p->get();
        if (problem.state_dim != 1) throw ValidationError("feedback policies require a scalar state");
        if (policy->start_time() > t0 + 1e-10 || policy->end_time() < T - 1e-10)
            throw ValidationError("policy time grid does not cover [t0, T]");
    }

    const std::size_t n = problem.state_dim;
    const std::size_t d = problem.noise_dim;
    PathEnsemble e;
    e.paths = paths;
    e.steps = steps;
    e.state_dim = n;
    e.noise_dim = d;
    e.seed = seed;
    const double dt = (T - t0) / static_cast<double>(steps);
    e.time_grid.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) e.time_grid[k] = t0 + static_cast<double>(k) * dt;
    e.time_grid[steps] = T;
    e.increments.resize(paths * steps * d);
    e.states.resize(paths * (steps + 1) * n);
    if (policy) e.control_indices.resize(paths * steps);

    const CounterRng rng(seed);
    const ControlValue* fixed = std::get_if<ControlValue>(&control);

    parallel_for(paths, [&](std::size_t p) {
        std::vector<double> x(x0.begin(), x0.end());
        std::vector<double> b(n), s(n * d), dw(d);
        std::size_t held = 0;
        double hold_end = -1.0;
        std::copy(x.begin(), x.end(), e.states.begin() + static_cast<std::ptrdiff_t>(p * (steps + 1) * n));
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = e.time_grid[k];
            std::span<const double> a;
            if (policy) {
                if (t >= hold_end - 1e-10) {
                    held = policy->control_index(t, x[0]);
                    hold_end = policy->hold_until(t);
                }
                e.control_indices[p * steps + k] = held;
                a = problem.controls[held];
            } else {
                a = fixed->view();
            }
            problem.drift_into(t, x, a, b);
            problem.diffusion_into(t, x, a, s);
            for (std::size_t j = 0; j < d; ++j) {
                dw[j] = brownian_increment(rng, p, k, j, dt, options.brownian_refinement);
                e.increments[(p * steps + k) * d + j] = dw[j];
            }
            for (std::size_t i = 0; i < n; ++i) {
                double diff = 0.0;
                for (std::size_t j = 0; j < d; ++j) diff += s[i * d + j] * dw[j];
                x[i] += b[i] * dt + diff;
            }
            std::copy(x.begin(), x.end(),
                      e.states.begin() + static_cast<std::ptrdiff_t>((p * (steps + 1) + k + 1) * n));
        }
    });
    return e;
}

void write_paths_csv(const PathEnsemble& e, std::ostream& out) {
    out << "path,step,t";
    for (std::size_t i = 0; i < e.state_dim; ++i) out << ",x" << (i + 1);
    out << '\n';
    out.precision(17);
    for (std::size_t p = 0; p < e.paths; ++p)
        for (std::size_t k = 0; k <= e.steps; ++k) {
            out << p << ',' << k << ',' << e.time_grid[k];
            for (std::size_t i = 0; i < e.state_dim; ++i) out << ',' << e.state(p, k, i);
            out << '\n';
        }
}

// ----------------------------------------------------------------------------
// Gamma rules
// ----------------------------------------------------------------------------

GammaRule GammaRule::constant(double gamma) {
    return custom([gamma](std::size_t, std::size_t, double, double) { return gamma; }, gamma, gamma,
                  "constant(" + format_number(gamma) + ")");
}

GammaRule GammaRule::alternating(double u) {
    return custom([u](std::size_t, std::size_t step, double, double) { return step % 2 == 0 ? u : -u; },
                  -std::abs(u), std::abs(u), "alternating(" + format_number(u) + ")");
}

GammaRule GammaRule::path_sign(double u) {
    return custom([u](std::size_t, std::size_t, double, double w) { return w >= 0.0 ? u : -u; }, -std::abs(u),
                  std::abs(u), "path_sign(" + format_number(u) + ")");
}

GammaRule GammaRule::random_uniform(double lo, double hi, Seed seed) {
    const CounterRng rng(seed);
    return custom([rng, lo, hi](std::size_t path, std::size_t step, double, double) {
        return lo + (hi - lo) * rng.uniform(path, step, 7);
    }, lo, hi, "random_uniform(" + format_number(lo) + "," + format_number(hi) + ")");
}

GammaRule GammaRule::time_switch(double before, double after, double switch_time) {
    return custom([=](std::size_t, std::size_t, double s, double) { return s < switch_time ? before : after; },
                  std::min(before, after), std::max(before, after),
                  "time_switch(" + format_number(before) + "," + format_number(after) + ")");
}

GammaRule GammaRule::custom(Fn fn, double lo, double hi, std::string name) {
    if (!fn) throw ValidationError("gamma rule needs a callable");
    if (hi < lo) throw ValidationError("gamma rule range is empty");
    GammaRule r;
    r.fn_ = std::move(fn);
    r.lo_ = lo;
    r.hi_ = hi;
    r.name_ = std::move(name);
    return r;
}

double GammaEnsemble::mean() const { return sample_mean(gamma); }

double GammaEnsemble::mean_std_error() const { return standard_error(gamma); }

GammaEnsemble doleans_exponential(const GammaRule& rule, double t, double r, std::size_t paths, std::size_t steps,
                                  Seed seed) {
    if (!(t < r)) throw ValidationError("doleans_exponential needs t < r");
    if (steps < 1 || paths < 1) throw ValidationError("doleans_exponential needs steps, paths >= 1");
    GammaEnsemble e;
    e.t = t;
    e.r = r;
    e.steps = steps;
    e.rule = rule.name();
    e.seed = seed;
    e.gamma.resize(paths);
    e.brownian.resize(paths);
    const double dt = (r - t) / static_cast<double>(steps);
    const CounterRng rng(seed);
    parallel_for(paths, [&](std::size_t p) {
        double log_gamma = 0.0;
        double w = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double s = t + static_cast<double>(k) * dt;
            const double g = rule(p, k, s, w);
            const double dw = brownian_increment(rng, p, k, 0, dt);
            log_gamma += g * dw - 0.5 * g * g * dt;
            w += dw;
        }
        e.gamma[p] = std::exp(log_gamma);
        e.brownian[p] = w;
    });
    return e;
}

GammaEnsemble doleans_exponential(const GammaRule& rule, const SubgradientSet& admissible, double t, double r,
                                  std::size_t paths, std::size_t steps, Seed seed) {
    if (!admissible.contains(rule.lower()) || !admissible.contains(rule.upper()))
        throw ValidationError("gamma rule " + rule.name() + " leaves the subgradient set of the driver");
    return doleans_exponential(rule, t, r, paths, steps, seed);
}

GammaBoundReport gamma_bound_check(const GammaEnsemble& e, double u, double t, double r) {
    if (e.gamma.empty()) throw ValidationError("gamma_bound_check needs a nonempty ensemble");
    std::vector<double> sq(e.gamma.size());
    for (std::size_t p = 0; p < sq.size(); ++p) sq[p] = (e.gamma[p] - 1.0) * (e.gamma[p] - 1.0);
    GammaBoundReport rep;
    rep.second_moment = sample_mean(sq);
    rep.std_error = standard_error(sq);
    rep.bound = std::expm1(u * u * (r - t));
    rep.margin = rep.bound + 5.0 * rep.std_error - rep.second_moment;
    rep.mean = e.mean();
    rep.mean_std_error = e.mean_std_error();
    rep.pass = rep.margin >= 0.0;
    return rep;
}

} // namespace riskdrift
