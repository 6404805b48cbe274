// SPDX-License-Identifier: MIT
//
// Acceptance runner: one line "criterion N: PASS|FAIL (seconds) detail" per
// criterion. `--criterion N` runs a single one; no argument runs all nine.
// Exit code 0 when every selected criterion passes.

#include "support.hpp"

#include "riskdrift/config.hpp"
#include "riskdrift/experiment.hpp"
#include "riskdrift/forward.hpp"
#include "riskdrift/hjb.hpp"
#include "riskdrift/parallel.hpp"
#include "riskdrift/random.hpp"
#include "riskdrift/report.hpp"
#include "riskdrift/risk.hpp"
#include "riskdrift/risk_checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef RISKDRIFT_CONFIG_DIR
#define RISKDRIFT_CONFIG_DIR "configs"
#endif

using namespace riskdrift;

namespace {

constexpr Seed kSeed = 1;
const ControlValue kNoControl{{0.0}};

struct Outcome {
    bool pass = false;
    std::string detail;
    Json report; // deterministic content only, compared byte for byte by criterion 9
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

double rho_w(const DriverSpec& g, double dt) {
    const Lattice lat = build_lattice(testing::brownian_linear(), 0.0, 0.0, dt, 0.0);
    return g_evaluate_lattice(lat, g, CostFunctional::terminal_only([](double x) { return x; }), kNoControl).value;
}

// 1. ρ[W_1] = κ for g = κ|z| and = γ for g = γz (Y_t = W_t + κ(T - t)).
Outcome closed_form_g_evaluation() {
    const double abs_value = rho_w(DriverSpec::scaled_abs(0.3), 1e-3);
    const double lin_value = rho_w(DriverSpec::linear({0.2}), 1e-3);
    const double e1 = std::abs(abs_value - 0.3), e2 = std::abs(lin_value - 0.2);
    Outcome o;
    o.pass = e1 <= 2e-3 && e2 <= 2e-3;
    o.detail = "scaled_abs error " + fmt(e1) + ", linear error " + fmt(e2) + " (tolerance 2e-3)";
    o.report = Json{{"scaled_abs", abs_value}, {"linear", lin_value}};
    return o;
}

// 2. Zero driver against the independent trinomial expectation.
Outcome zero_driver_reduction() {
    ScalarProblemBuilder b;
    b.drift = [](double, double x, double) { return 0.3 * std::sin(x); };
    b.diffusion = [](double, double x, double) { return 1.0 + 0.2 * std::cos(x); };
    const Lattice lat = build_lattice(b.build(), 0.0, 0.0, 0.01, 0.0);
    const CounterRng rng(kSeed);
    double worst = 0.0;
    Json values = Json::array();
    for (std::size_t trial = 0; trial < 20; ++trial) {
        const double a = 2.0 * rng.uniform(trial, 0, 0) - 1.0;
        const double w = 3.0 * rng.uniform(trial, 0, 1);
        const double c = rng.normal(trial, 0, 2);
        const auto payoff = [=](double x) { return a * std::sin(w * x) + c * x + std::abs(x - a); };
        const double got =
            g_evaluate_lattice(lat, DriverSpec::zero(), CostFunctional::terminal_only(payoff), kNoControl).value;
        worst = std::max(worst, std::abs(got - testing::lattice_expectation(lat, payoff)));
        values.push_back(got);
    }
    Outcome o;
    o.pass = worst <= 1e-12;
    o.detail = "max difference " + fmt(worst) + " over 20 payoffs (tolerance 1e-12)";
    o.report = Json{{"values", values}, {"max_difference", worst}};
    return o;
}

// 3. Risk axiom suite on 100 randomized instances.
Outcome risk_axioms() {
    const RiskAxiomReport r = risk_axiom_suite(DriverSpec::scaled_abs(0.5), 100, kSeed);
    Outcome o;
    o.pass = r.pass && r.instances == 100;
    Json results = Json::array();
    for (const auto& a : r.results)
        results.push_back(Json{{"name", a.name}, {"max_violation", a.max_violation}, {"pass", a.pass}});
    o.detail = std::to_string(r.results.size()) + " properties on " + std::to_string(r.instances) + " instances";
    for (const auto& f : r.failures) o.detail += ", failed: " + f;
    o.report = Json{{"dt", r.dt}, {"results", results}};
    return o;
}

// 4. Dual lower bound with ten rules on three payoffs, near-equality at γ ≡ κ.
Outcome dual_bound() {
    const double kappa = 0.3;
    const DriverSpec g = DriverSpec::scaled_abs(kappa);
    const DualCheckReport all = dual_lower_bound_check(g, default_dual_payoffs(),
                                                       default_gamma_rules(-kappa, kappa, kSeed), kSeed);
    const DualCheckReport eq = dual_lower_bound_check(g, {{"W_T", [](double w) { return w; }}},
                                                      {GammaRule::constant(kappa)}, kSeed + 1);
    const DualEntry& e = eq.entries.front();
    const bool near = std::abs(e.slack) < 3.0 * e.std_error;
    Outcome o;
    o.pass = all.pass && all.entries.size() == 30 && eq.pass && near;
    std::size_t ok = 0;
    Json entries = Json::array();
    for (const auto& d : all.entries) {
        ok += d.pass;
        entries.push_back(Json{{"rule", d.rule}, {"payoff", d.payoff}, {"expectation", d.expectation},
                               {"std_error", d.std_error}, {"rho", d.rho}, {"pass", d.pass}});
    }
    o.detail = std::to_string(ok) + "/" + std::to_string(all.entries.size()) + " bounds hold; slack at gamma = kappa " +
               fmt(e.slack) + " vs 3 stderr " + fmt(3.0 * e.std_error);
    o.report = Json{{"entries", entries}, {"equality_slack", e.slack}, {"equality_std_error", e.std_error}};
    return o;
}

// 5. E(Γ - 1)² <= e^{u²r} - 1 + 5 stderr on 10⁵ paths.
Outcome doleans_bound() {
    Outcome o;
    o.pass = true;
    o.report = Json::array();
    double worst_margin = 1e300;
    Seed seed = kSeed;
    for (double u : {0.25, 0.5, 1.0})
        for (double r : {0.25, 1.0})
            for (const GammaRule& rule : {GammaRule::constant(u), GammaRule::alternating(u)}) {
                const GammaEnsemble e = doleans_exponential(rule, 0.0, r, 100000, 50, seed++);
                const GammaBoundReport b = gamma_bound_check(e, u, 0.0, r);
                o.pass = o.pass && b.pass;
                worst_margin = std::min(worst_margin, b.margin);
                o.report.push_back(Json{{"rule", rule.name()}, {"u", u}, {"r", r},
                                        {"second_moment", b.second_moment}, {"bound", b.bound},
                                        {"std_error", b.std_error}, {"pass", b.pass}});
            }
    o.detail = "12 (u, r, rule) cases, smallest margin " + fmt(worst_margin);
    return o;
}

// 6. HJB closed forms at dx = 0.01 with CFL-maximal dt.
Outcome hjb_closed_forms(double& slowest) {
    struct Case {
        const char* name;
        ProblemDefinition problem;
        DriverSpec driver;
        double expected, tolerance;
    };
    const Case cases[] = {
        {"risk toy", testing::brownian_linear(), DriverSpec::scaled_abs(0.5), 0.5, 1e-3},
        {"heat toy", testing::heat_quadratic(), DriverSpec::zero(), 1.0, 1e-2},
        {"two-action toy", testing::two_action_drift(), DriverSpec::zero(), -1.0, 1e-2},
    };
    Outcome o;
    o.pass = true;
    o.report = Json::object();
    slowest = 0.0;
    for (const auto& c : cases) {
        const auto start = std::chrono::steady_clock::now();
        const double v = solve_hjb(c.problem, c.driver, make_hjb_grid(c.problem, c.driver, 0.01)).value_at(0, 0.0);
        slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        const double err = std::abs(v - c.expected);
        o.pass = o.pass && err <= c.tolerance;
        if (!o.detail.empty()) o.detail += ", ";
        o.detail += std::string(c.name) + " error " + fmt(err);
        o.report[c.name] = v;
    }
    return o;
}

// 7. Convergence study on the two-action drift problem.
Outcome convergence() {
    const ExperimentConfig cfg =
        ExperimentConfig::from_config(load_config_file(std::string(RISKDRIFT_CONFIG_DIR) + "/two_action.json"));
    const ExperimentReport r = run_convergence(cfg);
    Outcome o;
    o.pass = r.nonincreasing && r.slope_ok && r.reference.pass;
    o.detail = "errors";
    for (const auto& row : r.rows) o.detail += " " + fmt(row.error);
    o.detail += "; nonincreasing " + std::string(r.nonincreasing ? "yes" : "no") + ", slope " + fmt(r.fit.slope) +
                " (need >= 0.2833), reference self-test " + (r.reference.pass ? "pass" : "fail") + ", C " +
                fmt(r.bound_constant);
    o.report = r.to_json();
    return o;
}

// 8. Mollification scaling on the closed-form toy.
Outcome mollification() {
    const MollifyStudyReport r =
        run_mollify_study(load_config_file(std::string(RISKDRIFT_CONFIG_DIR) + "/toy.json"), MollifyStudyConfig{});
    Outcome o;
    const bool finite = std::isfinite(r.sup_constant) && std::isfinite(r.gap_constant) &&
                        std::isfinite(r.seminorm_constant) && r.gap_rows.size() == 9;
    o.pass = finite && r.seminorm_slope_ok;
    o.detail = "sup C " + fmt(r.sup_constant) + ", seminorm slope " + fmt(r.seminorm_slope) + " (interior " +
               fmt(r.seminorm_slope_interior) + "), gap C " + fmt(r.gap_constant) + " over " +
               std::to_string(r.gap_rows.size()) + " (h, eps) pairs";
    o.report = r.to_json();
    return o;
}

using Runner = std::function<Outcome()>;

std::vector<Runner> runners(double& hjb_slowest) {
    return {closed_form_g_evaluation, zero_driver_reduction, risk_axioms, dual_bound, doleans_bound,
            [&hjb_slowest] { return hjb_closed_forms(hjb_slowest); }, convergence, mollification};
}

// Runtime limits in seconds. Criterion 1 holds both parts to the per-part
// limit together; criterion 6 also checks each solve against 30 s.
constexpr double kLimits[] = {5.0, 5.0, 60.0, 60.0, 30.0, 90.0, 600.0, 600.0};

bool report_line(int n, bool pass, double seconds, const std::string& detail) {
    std::printf("criterion %d: %s (%.2f s) %s\n", n, pass ? "PASS" : "FAIL", seconds, detail.c_str());
    std::fflush(stdout);
    return pass;
}

bool run_one(int n) {
    double hjb_slowest = 0.0;
    const auto all = runners(hjb_slowest);
    const auto start = std::chrono::steady_clock::now();
    if (n >= 1 && n <= 8) {
        Outcome o;
        try {
            o = all[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_time = seconds <= kLimits[n - 1];
        if (n == 6) in_time = in_time && hjb_slowest <= 30.0;
        if (!in_time) o.detail += "; runtime limit exceeded";
        return report_line(n, o.pass && in_time, seconds, o.detail);
    }
    // 9. Two passes over criteria 1-8; the second uses a different thread count.
    bool same = true;
    std::string detail;
    const std::size_t threads = thread_count();
    for (std::size_t k = 0; k < all.size(); ++k) {
        try {
            set_thread_count(threads);
            const std::string a = json_text(all[k]().report);
            set_thread_count(threads == 1 ? 2 : 1);
            const std::string b = json_text(all[k]().report);
            if (a != b) {
                same = false;
                detail += " differs:" + std::to_string(k + 1);
            }
        } catch (const std::exception& e) {
            same = false;
            detail += " error in " + std::to_string(k + 1) + ": " + e.what();
        }
    }
    set_thread_count(threads);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report_line(9, same, seconds, same ? "reports of criteria 1-8 byte-identical across two runs" : detail);
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            selected.push_back(std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 1;
        }
    }
    if (selected.empty())
        for (int n = 1; n <= 9; ++n) selected.push_back(n);
    bool ok = true;
    for (int n : selected) {
        if (n < 1 || n > 9) {
            std::cerr << "criterion must be in 1..9\n";
            return 1;
        }
        ok = run_one(n) && ok;
    }
    return ok ? 0 : 1;
}
