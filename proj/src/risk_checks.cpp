// SPDX-License-Identifier: MIT
#include "riskdrift/risk_checks.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/numeric.hpp"
#include "riskdrift/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace riskdrift {

namespace {

ProblemDefinition suite_problem(double horizon) {
    ScalarProblemBuilder b;
    b.drift = [](double, double x, double) { return 0.3 * std::sin(x); };
    b.diffusion = [](double, double x, double) { return 1.0 + 0.2 * std::cos(x); };
    b.terminal_cost = [](double x) { return x; };
    b.horizon = horizon;
    return b.build();
}

/// Largest dt <= max_dt (halving) for which every coefficient multiplying a
/// neighbour value in the explicit step is nonnegative: K·|ΔW_j| <= 1.
double monotone_dt(double K, double max_dt, double lambda) {
    constexpr double b_max = 0.3, s_min = 0.8, s_max = 1.2;
    double dt = max_dt;
    for (int i = 0; i < 60; ++i) {
        const double dx = lambda * s_max * std::sqrt(dt);
        if (K * (dx + b_max * dt) / s_min <= 1.0 && K * dt < 1.0) return dt;
        dt *= 0.5;
    }
    throw NumericalError("no monotone lattice step found for the driver");
}

Lattice suite_lattice(double horizon, double dt) {
    return build_lattice(suite_problem(horizon), 0.0, 0.0, dt, 0.0);
}

std::vector<double> evaluate_layer(const Lattice& lat, const DriverSpec& g, std::span<const double> terminal) {
    const CostFunctional cost = CostFunctional::terminal_only([](double x) { return x; });
    return g_evaluate_layers(lat, g, cost, lat.problem().controls.value(0), terminal, lat.steps(), 0);
}

/// Pointwise worst violations for one instance, in suite order.
constexpr std::size_t property_count = 7;
const char* const property_names[property_count] = {"normalization", "translation",  "positive homogeneity",
                                                    "convexity",     "monotonicity", "time consistency",
                                                    "driver comparison"};

} // namespace

const AxiomResult& RiskAxiomReport::at(const std::string& name) const {
    for (const auto& r : results)
        if (r.name == name) return r;
    throw ValidationError("unknown axiom property: " + name);
}

RiskAxiomReport risk_axiom_suite(const DriverSpec& driver, std::size_t instances, Seed seed,
                                 const RiskAxiomOptions& options) {
    if (driver.noise_dim() != 1) throw ValidationError("the risk axiom suite needs a scalar driver");
    if (instances < 1) throw ValidationError("the risk axiom suite needs at least one instance");
    const LatticeOptions lopt;
    const double dt = monotone_dt(driver.lipschitz_K(), options.max_dt, lopt.lambda);
    const Lattice lat = suite_lattice(options.horizon, dt);
    const std::size_t n = lat.space().count;
    const std::size_t k_mid = lat.steps() / 2;

    const auto [lo, hi] = driver.slopes(0.0);
    const double k_upper = std::max(std::abs(lo), std::abs(hi));
    const DriverSpec upper = k_upper > 0.0 ? DriverSpec::scaled_abs(k_upper) : DriverSpec::zero();
    const DriverSpec lower_lo = DriverSpec::linear({lo});
    const DriverSpec lower_hi = DriverSpec::linear({hi});
    const CostFunctional cost = CostFunctional::terminal_only([](double x) { return x; });
    const ControlValue a0 = lat.problem().controls.value(0);

    std::vector<std::array<double, property_count>> worst(instances);
    const CounterRng rng(seed);
    parallel_for(instances, [&](std::size_t s) {
        auto draw = [&](std::size_t lane, double lo_v, double hi_v) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = lo_v + (hi_v - lo_v) * rng.uniform(s, i, lane);
            return v;
        };
        const std::vector<double> xi = draw(0, -3.0, 3.0);
        const std::vector<double> xi2 = draw(1, -3.0, 3.0);
        const std::vector<double> bump = draw(2, 0.0, 1.0);
        const double c = s == 0 ? 7.0 : -10.0 + 20.0 * rng.uniform(s, n, 3);
        const double beta = 5.0 * rng.uniform(s, n, 4);
        const double lambda = rng.uniform(s, n, 5);

        auto eval = [&](const DriverSpec& g, const std::vector<double>& terminal) { return evaluate_layer(lat, g, terminal); };
        auto map = [&](auto f) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = f(i);
            return v;
        };

        const auto r = eval(driver, xi);
        const auto r2 = eval(driver, xi2);
        const auto r0 = eval(driver, std::vector<double>(n, 0.0));
        const auto rt = eval(driver, map([&](std::size_t i) { return xi[i] + c; }));
        const auto rb = eval(driver, map([&](std::size_t i) { return beta * xi[i]; }));
        const auto rm = eval(driver, map([&](std::size_t i) { return lambda * xi[i] + (1.0 - lambda) * xi2[i]; }));
        const auto rlow = eval(driver, map([&](std::size_t i) { return xi[i] - bump[i]; }));
        const auto mid = g_evaluate_layers(lat, driver, cost, a0, xi, lat.steps(), k_mid);
        const auto composed = g_evaluate_layers(lat, driver, cost, a0, mid, k_mid, 0);
        const auto rup = eval(upper, xi);
        const auto rlo1 = eval(lower_lo, xi);
        const auto rlo2 = eval(lower_hi, xi);

        std::array<double, property_count> w{};
        for (std::size_t i = 0; i < n; ++i) {
            w[0] = std::max(w[0], std::abs(r0[i]));
            w[1] = std::max(w[1], std::abs(rt[i] - r[i] - c));
            w[2] = std::max(w[2], std::abs(rb[i] - beta * r[i]));
            w[3] = std::max(w[3], rm[i] - (lambda * r[i] + (1.0 - lambda) * r2[i]));
            w[4] = std::max(w[4], rlow[i] - r[i]);
            w[5] = std::max(w[5], std::abs(composed[i] - r[i]));
            w[6] = std::max({w[6], r[i] - rup[i], rlo1[i] - r[i], rlo2[i] - r[i]});
        }
        worst[s] = w;
    });

    RiskAxiomReport rep;
    rep.instances = instances;
    rep.dt = lat.dt();
    for (std::size_t p = 0; p < property_count; ++p) {
        AxiomResult res;
        res.name = property_names[p];
        for (const auto& w : worst) res.max_violation = std::max(res.max_violation, w[p]);
        // Time consistency is a statement about the recursion itself: bitwise.
        res.pass = p == 5 ? res.max_violation == 0.0 : res.max_violation <= options.tolerance;
        if (!res.pass) rep.failures.push_back(res.name);
        rep.results.push_back(res);
    }
    rep.pass = rep.failures.empty();
    return rep;
}

double driver_comparison_gap(const DriverSpec& g1, const DriverSpec& g2, const std::function<double(double)>& payoff,
                             double dt) {
    const Lattice lat = suite_lattice(1.0, dt);
    std::vector<double> terminal(lat.space().count);
    for (std::size_t i = 0; i < terminal.size(); ++i) terminal[i] = payoff(lat.space()[i]);
    const auto v1 = evaluate_layer(lat, g1, terminal);
    const auto v2 = evaluate_layer(lat, g2, terminal);
    return v1[lat.center_index()] - v2[lat.center_index()];
}

// ----------------------------------------------------------------------------
// Dual lower bound
// ----------------------------------------------------------------------------

std::vector<GammaRule> default_gamma_rules(double lo, double hi, Seed seed) {
    if (hi < lo) throw ValidationError("empty subgradient interval");
    const double mid = 0.5 * (lo + hi);
    const std::string range = "[" + format_number(lo) + "," + format_number(hi) + "]";
    std::vector<GammaRule> rules;
    rules.push_back(GammaRule::constant(hi));
    rules.push_back(GammaRule::constant(lo));
    rules.push_back(GammaRule::constant(mid));
    rules.push_back(GammaRule::custom([=](std::size_t, std::size_t k, double, double) { return k % 2 == 0 ? hi : lo; },
                                      lo, hi, "alternating" + range));
    rules.push_back(GammaRule::custom([=](std::size_t, std::size_t, double, double w) { return w >= 0.0 ? hi : lo; },
                                      lo, hi, "path_sign" + range));
    rules.push_back(GammaRule::custom([=](std::size_t, std::size_t, double, double w) { return w >= 0.0 ? lo : hi; },
                                      lo, hi, "reverse_path_sign" + range));
    rules.push_back(GammaRule::random_uniform(lo, hi, seed ^ 0x5bd1e995ULL));
    rules.push_back(GammaRule::time_switch(hi, lo, 0.5));
    rules.push_back(GammaRule::time_switch(lo, hi, 0.5));
    rules.push_back(GammaRule::custom(
        [=](std::size_t, std::size_t, double, double w) { return std::clamp(mid + (hi - lo) * w, lo, hi); }, lo, hi,
        "clipped_linear" + range));
    return rules;
}

std::vector<NamedPayoff> default_dual_payoffs() {
    return {{"W_T", [](double w) { return w; }},
            {"max(W_T,0)", [](double w) { return std::max(w, 0.0); }},
            {"cos(2W_T)", [](double w) { return std::cos(2.0 * w); }}};
}

DualCheckReport dual_lower_bound_check(const DriverSpec& driver, const std::vector<NamedPayoff>& payoffs,
                                       const std::vector<GammaRule>& rules, Seed seed,
                                       const DualCheckOptions& options) {
    if (driver.noise_dim() != 1) throw ValidationError("the dual check needs a scalar driver");
    if (options.paths < 2) throw ValidationError("the dual check needs at least two paths");
    const SubgradientSet admissible = driver_subgradient_interval(driver);

    ScalarProblemBuilder b;
    b.drift = [](double, double, double) { return 0.0; };
    b.diffusion = [](double, double, double) { return 1.0; };
    b.horizon = options.horizon;
    const Lattice lat = build_lattice(b.build(), 0.0, 0.0, options.lattice_dt, 0.0);

    std::vector<double> rho(payoffs.size());
    for (std::size_t j = 0; j < payoffs.size(); ++j) {
        const auto cost = CostFunctional::terminal_only(payoffs[j].fn);
        rho[j] = g_evaluate_lattice(lat, driver, cost, ControlValue{{0.0}}).value;
    }

    DualCheckReport rep;
    rep.lattice_dt = lat.dt();
    rep.pass = true;
    for (const auto& rule : rules) {
        const GammaEnsemble ens =
            doleans_exponential(rule, admissible, 0.0, options.horizon, options.paths, options.steps, seed);
        for (std::size_t j = 0; j < payoffs.size(); ++j) {
            std::vector<double> weighted(ens.paths());
            for (std::size_t p = 0; p < weighted.size(); ++p)
                weighted[p] = ens.gamma[p] * payoffs[j].fn(ens.brownian[p]);
            DualEntry e;
            e.rule = rule.name();
            e.payoff = payoffs[j].name;
            e.expectation = sample_mean(weighted);
            e.std_error = standard_error(weighted);
            e.rho = rho[j];
            e.slack = e.rho - e.expectation;
            e.allowance = 5.0 * e.std_error + 5.0 * rep.lattice_dt;
            e.pass = e.expectation <= e.rho + e.allowance;
            rep.pass = rep.pass && e.pass;
            rep.entries.push_back(std::move(e));
        }
    }
    return rep;
}

} // namespace riskdrift
