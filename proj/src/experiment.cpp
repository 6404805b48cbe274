// SPDX-License-Identifier: MIT
#include "riskdrift/experiment.hpp"

#include "riskdrift/dp.hpp"
#include "riskdrift/errors.hpp"
#include "riskdrift/forward.hpp"
#include "riskdrift/hjb.hpp"
#include "riskdrift/mollify.hpp"
#include "riskdrift/numeric.hpp"
#include "riskdrift/parallel.hpp"
#include "riskdrift/risk_checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace riskdrift {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Largest step of the form h²/m not above `target`.
double dividing_step(double h, double target) {
    const double len = h * h;
    const double m = std::max(1.0, std::ceil(len / target - 1e-9));
    return len / m;
}

bool within(double x, double center, double half_width) {
    return half_width <= 0.0 || std::abs(x - center) <= half_width;
}

} // namespace

// ----------------------------------------------------------------------------
// fit_rate
// ----------------------------------------------------------------------------

RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
    RateFit fit;
    std::vector<double> lx, ly;
    for (const auto& [h, err] : pairs) {
        if (!(h > 0.0)) throw ValidationError("fit_rate needs h > 0");
        if (err < 0.0 || !std::isfinite(err)) throw ValidationError("fit_rate needs finite nonnegative errors");
        if (err == 0.0) {
            fit.notes.push_back("excluded h=" + format_number(h) + " with zero error");
            continue;
        }
        lx.push_back(std::log(h));
        ly.push_back(std::log(err));
    }
    if (lx.size() < 2) throw ValidationError("fit_rate needs at least two pairs with positive error");
    const LineFit line = least_squares_line(lx, ly);
    fit.slope = line.slope;
    fit.log_c = line.intercept;
    fit.used = lx.size();
    return fit;
}

// ----------------------------------------------------------------------------
// ExperimentConfig
// ----------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_config(LoadedConfig config) {
    ExperimentConfig cfg;
    const Json section = config.document.contains("experiment") ? config.document["experiment"] : Json::object();
    try {
        if (section.contains("h_schedule")) cfg.h_schedule = section["h_schedule"].get<std::vector<double>>();
        cfg.epsilon_exponent = section.value("epsilon_exponent", cfg.epsilon_exponent);
        cfg.inner_dt_target = section.value("inner_dt_target", cfg.inner_dt_target);
        cfg.radius = section.value("radius", cfg.radius);
        cfg.reference_dx_factor = section.value("reference_dx_factor", cfg.reference_dx_factor);
        cfg.reference_dt_factor = section.value("reference_dt_factor", cfg.reference_dt_factor);
        if (section.contains("sweep_offsets")) cfg.sweep_offsets = section["sweep_offsets"].get<std::vector<double>>();
        cfg.perturbation_grid = section.value("perturbation_grid", cfg.perturbation_grid);
        cfg.seed = section.value("seed", cfg.seed);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("invalid experiment section: ") + e.what());
    }
    cfg.config = std::move(config);
    cfg.check();
    return cfg;
}

void ExperimentConfig::check() const {
    if (h_schedule.size() < 2) throw ValidationError("h schedule needs at least two entries");
    for (std::size_t i = 0; i < h_schedule.size(); ++i) {
        const double h = h_schedule[i];
        if (!(h > 0.0 && h <= 1.0)) throw ValidationError("h schedule entries must lie in (0, 1]");
        if (i > 0 && !(h < h_schedule[i - 1])) throw ValidationError("h schedule must be strictly decreasing");
    }
    if (!(epsilon_exponent > 0.0 && epsilon_exponent <= 1.0))
        throw ValidationError("epsilon exponent must lie in (0, 1]");
    if (!(inner_dt_target > 0.0)) throw ValidationError("inner dt target must be positive");
    if (!(reference_dx_factor > 1.0) || !(reference_dt_factor > 1.0))
        throw ValidationError("reference refinement factors must exceed 1");
    if (perturbation_grid < 2) throw ValidationError("perturbation grid needs at least two points per axis");
}

// ----------------------------------------------------------------------------
// run_convergence
// ----------------------------------------------------------------------------

ExperimentReport run_convergence(const ExperimentConfig& cfg) {
    cfg.check();
    const ProblemDefinition& problem = cfg.config.problem;
    const DriverSpec& driver = cfg.config.driver;
    const double x0 = cfg.config.x0;
    const double horizon = problem.horizon;
    if (cfg.config.t0 != 0.0) throw ValidationError("the convergence study evaluates at t0 = 0");

    ExperimentReport report;
    report.config_hash = config_hash(cfg.config.document);
    report.seed = cfg.seed;
    report.notes.push_back("one simulated probability space per seed stands in for the weak formulation");

    const std::size_t n = cfg.h_schedule.size();
    std::vector<ConvergenceRow> rows(n);
    std::vector<DpSolution> solutions(n);
    DpOptions dp_options;
    dp_options.x0 = x0;
    parallel_for(n, [&](std::size_t i) {
        const auto start = Clock::now();
        ConvergenceRow& row = rows[i];
        row.h = cfg.h_schedule[i];
        row.epsilon = std::pow(row.h, cfg.epsilon_exponent);
        row.inner_dt = dividing_step(row.h, cfg.inner_dt_target);
        try {
            solutions[i] = dp_solve(problem, driver, row.h, row.inner_dt, cfg.radius, dp_options);
            row.dx = solutions[i].field.space().step;
            row.v_h = solutions[i].value_at(x0);
            if (row.epsilon >= row.h && row.epsilon * row.epsilon + row.h * row.h <= horizon) {
                PerturbedOptions popt;
                popt.radius = cfg.radius;
                popt.x0 = x0;
                row.v_tilde = perturbed_dp_solve(problem, driver, row.h, row.epsilon, row.inner_dt,
                                                 cfg.perturbation_grid, popt)
                                  .value_at(x0);
            }
        } catch (const ValidationError& e) {
            throw ValidationError("h=" + format_number(row.h) + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError("h=" + format_number(row.h) + ": " + e.what());
        }
        row.seconds = seconds_since(start);
    });
    for (const auto& row : rows)
        if (!row.v_tilde)
            report.notes.push_back("h=" + format_number(row.h) + ": perturbed value skipped, eps=" +
                                   format_number(row.epsilon) + " violates eps >= h or eps^2 + h^2 <= T");

    // Reference grid: finer than the coarsest DP run by the configured factors.
    double coarse_dx = 0.0, coarse_inner = 0.0, fine_dx = std::numeric_limits<double>::infinity(),
           fine_inner = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
        coarse_dx = std::max(coarse_dx, row.dx);
        coarse_inner = std::max(coarse_inner, row.inner_dt);
        fine_dx = std::min(fine_dx, row.dx);
        fine_inner = std::min(fine_inner, row.inner_dt);
    }
    ReferenceCheck& ref = report.reference;
    ref.dx = coarse_dx / cfg.reference_dx_factor;
    HjbGridOptions hopt;
    hopt.center = x0;
    const HjbGrid cfl_grid = make_hjb_grid(problem, driver, ref.dx, hopt);
    ref.dt = std::min(cfl_grid.dt, coarse_inner / cfg.reference_dt_factor);
    if (!(ref.dx < fine_dx && ref.dt < fine_inner))
        throw ValidationError("reference grid is not strictly finer than every dp run");
    hopt.dt = ref.dt;

    const auto ref_start = Clock::now();
    const ValueField reference = solve_hjb(problem, driver, make_hjb_grid(problem, driver, ref.dx, hopt));
    ref.value = reference.value_at(0, x0);
    ref.seconds = seconds_since(ref_start);

    ref.coarse_dx = 2.0 * ref.dx;
    const ValueField coarse = solve_hjb(problem, driver, make_hjb_grid(problem, driver, ref.coarse_dx, hopt));
    ref.coarse_value = coarse.value_at(0, x0);
    ref.change = std::abs(ref.value - ref.coarse_value);

    std::vector<std::pair<double, double>> pairs;
    double min_error = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        ConvergenceRow& row = rows[i];
        row.v_ref = ref.value;
        row.error = std::abs(ref.value - row.v_h);
        for (const double off : cfg.sweep_offsets) {
            const double x = x0 + off;
            row.sweep_errors.push_back(std::abs(reference.value_at(0, x) - solutions[i].value_at(x)));
        }
        pairs.emplace_back(row.h, row.error);
        min_error = std::min(min_error, row.error);
    }
    ref.threshold = 0.1 * min_error;
    ref.pass = ref.change < ref.threshold;

    report.nonincreasing = true;
    for (std::size_t i = 1; i < n; ++i)
        if (rows[i].error > rows[i - 1].error) report.nonincreasing = false;

    for (const auto& row : rows)
        report.bound_constant = std::max(report.bound_constant, row.error / std::cbrt(row.h));
    report.bound_holds = true;
    for (const auto& row : rows)
        if (row.error > report.bound_constant * std::cbrt(row.h) * (1.0 + 1e-12)) report.bound_holds = false;

    try {
        report.fit = fit_rate(pairs);
        report.slope_ok = report.fit.slope >= 1.0 / 3.0 - 0.05;
    } catch (const ValidationError& e) {
        report.fit.slope = std::numeric_limits<double>::quiet_NaN();
        report.fit.log_c = std::numeric_limits<double>::quiet_NaN();
        report.fit.notes.emplace_back(e.what());
        report.slope_ok = false;
    }
    report.rows = std::move(rows);
    return report;
}

Json ExperimentReport::to_json() const {
    Json runs = Json::array();
    for (const auto& r : rows) {
        Json j{{"h", r.h},
               {"epsilon", r.epsilon},
               {"inner_dt", r.inner_dt},
               {"dx", r.dx},
               {"V_h", r.v_h},
               {"V_ref", r.v_ref},
               {"error", r.error},
               {"sweep_errors", r.sweep_errors}};
        j["V_tilde"] = r.v_tilde ? Json(*r.v_tilde) : Json(nullptr);
        runs.push_back(std::move(j));
    }
    return Json{{"config_hash", config_hash},
                {"seed", seed},
                {"runs", runs},
                {"fit", {{"slope", fit.slope}, {"log_c", fit.log_c}, {"used", fit.used}, {"notes", fit.notes}}},
                {"bound", {{"constant", bound_constant}, {"exponent", 1.0 / 3.0}, {"holds", bound_holds}}},
                {"reference",
                 {{"dx", reference.dx},
                  {"dt", reference.dt},
                  {"value", reference.value},
                  {"coarse_dx", reference.coarse_dx},
                  {"coarse_value", reference.coarse_value},
                  {"change", reference.change},
                  {"threshold", reference.threshold},
                  {"pass", reference.pass}}},
                {"checks",
                 {{"errors_nonincreasing", nonincreasing},
                  {"slope_at_least_one_third_minus_0.05", slope_ok},
                  {"reference_adequate", reference.pass}}},
                {"notes", notes}};
}

Json ExperimentReport::timings_json() const {
    Json runs = Json::array();
    for (const auto& r : rows) runs.push_back(Json{{"h", r.h}, {"seconds", r.seconds}});
    return Json{{"runs", runs}, {"reference_seconds", reference.seconds}};
}

// ----------------------------------------------------------------------------
// run_axioms
// ----------------------------------------------------------------------------

AxiomsSummary run_axioms(const LoadedConfig& config, const AxiomsOptions& options) {
    const DriverSpec& driver = config.driver;
    const double horizon = config.problem.horizon;
    AxiomsSummary summary;
    Json& out = summary.report;
    out["config_hash"] = config_hash(config.document);
    out["seed"] = options.seed;
    out["driver"] = driver.label();

    const DriverAxiomReport da = driver_axiom_check(driver, options.driver_samples, options.seed, horizon);
    out["driver_axioms"] = Json{{"samples", da.samples},
                                {"max_normalization_error", da.max_normalization_error},
                                {"max_convexity_violation", da.max_convexity_violation},
                                {"max_homogeneity_error", da.max_homogeneity_error},
                                {"max_lipschitz_excess", da.max_lipschitz_excess},
                                {"max_time_extension_error", da.max_time_extension_error},
                                {"failures", da.failures},
                                {"pass", da.pass}};
    for (const auto& f : da.failures) summary.failures.push_back(f);

    if (!da.pass) {
        out["risk_axioms"] = "skipped: driver axioms failed";
        out["dual_bound"] = "skipped: driver axioms failed";
    } else if (driver.noise_dim() != 1) {
        out["risk_axioms"] = "skipped: scalar drivers only";
        out["dual_bound"] = "skipped: scalar drivers only";
    } else {
        const RiskAxiomReport ra = risk_axiom_suite(driver, options.risk_instances, options.seed);
        Json props = Json::array();
        for (const auto& r : ra.results)
            props.push_back(Json{{"name", r.name}, {"max_violation", r.max_violation}, {"pass", r.pass}});
        out["risk_axioms"] =
            Json{{"instances", ra.instances}, {"dt", ra.dt}, {"properties", props}, {"pass", ra.pass}};
        for (const auto& f : ra.failures) summary.failures.push_back(f);

        const auto [lo, hi] = driver.slopes(0.0);
        DualCheckOptions dopt;
        dopt.paths = options.dual_paths;
        const DualCheckReport dual =
            dual_lower_bound_check(driver, default_dual_payoffs(), default_gamma_rules(lo, hi, options.seed),
                                   options.seed, dopt);
        Json entries = Json::array();
        for (const auto& e : dual.entries) {
            entries.push_back(Json{{"rule", e.rule},
                                   {"payoff", e.payoff},
                                   {"expectation", e.expectation},
                                   {"std_error", e.std_error},
                                   {"rho", e.rho},
                                   {"slack", e.slack},
                                   {"allowance", e.allowance},
                                   {"pass", e.pass}});
            if (!e.pass) summary.failures.push_back("dual lower bound (" + e.rule + ", " + e.payoff + ")");
        }
        out["dual_bound"] = Json{{"lattice_dt", dual.lattice_dt}, {"entries", entries}, {"pass", dual.pass}};
    }

    const double u = driver.subgradient_bound_u();
    Json gamma = Json::array();
    for (const GammaRule& rule : {GammaRule::constant(u), GammaRule::alternating(u)}) {
        const GammaEnsemble ens = doleans_exponential(rule, 0.0, horizon, options.gamma_paths, 50, options.seed);
        const GammaBoundReport gb = gamma_bound_check(ens, u, 0.0, horizon);
        gamma.push_back(Json{{"rule", rule.name()},
                             {"u", u},
                             {"second_moment", gb.second_moment},
                             {"std_error", gb.std_error},
                             {"bound", gb.bound},
                             {"margin", gb.margin},
                             {"pass", gb.pass}});
        if (!gb.pass) summary.failures.push_back("doleans bound (" + rule.name() + ")");
    }
    out["doleans_bound"] = gamma;
    out["failures"] = summary.failures;
    out["pass"] = summary.pass();
    return summary;
}

// ----------------------------------------------------------------------------
// run_mollify_study
// ----------------------------------------------------------------------------

namespace {

Json seminorm_json(const SeminormReport& s) {
    return Json{{"sup_abs", s.sup_abs},       {"sup_dx", s.sup_dx},         {"sup_dxx", s.sup_dxx},
                {"sup_dt", s.sup_dt},         {"holder_dxx", s.holder_dxx}, {"holder_dt", s.holder_dt},
                {"total", s.total()},         {"nodes", s.nodes}};
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return least_squares_line(lx, ly).slope;
}

} // namespace

MollifyStudyReport run_mollify_study(const LoadedConfig& config, const MollifyStudyConfig& study) {
    const ProblemDefinition& problem = config.problem;
    const DriverSpec& driver = config.driver;
    const double x0 = config.x0;
    if (study.epsilons.size() < 2) throw ValidationError("the mollify study needs at least two epsilon values");
    if (!(study.inner_dt_divisions >= 1.0)) throw ValidationError("inner dt divisions must be at least 1");

    PerturbedOptions popt;
    popt.radius = study.radius;
    popt.x0 = x0;
    DpOptions dopt;
    dopt.x0 = x0;
    auto inner_dt_for = [&](double h) { return h * h / std::round(study.inner_dt_divisions); };

    MollifyStudyReport report;
    const DpSolution dp = dp_solve(problem, driver, study.h, inner_dt_for(study.h), study.radius, dopt);
    const double v_h = dp.value_at(x0);

    report.epsilon_rows.resize(study.epsilons.size());
    parallel_for(study.epsilons.size(), [&](std::size_t e) {
        auto& row = report.epsilon_rows[e];
        row.epsilon = study.epsilons[e];
        const PerturbedSolution tilde = perturbed_dp_solve(problem, driver, study.h, row.epsilon,
                                                           inner_dt_for(study.h), study.perturbation_grid, popt);
        const ValueField hat = mollify_convolve(tilde.field, Mollifier(row.epsilon, study.quad_points));
        for (std::size_t k = 0; k < hat.time_count(); ++k) {
            const std::size_t kt = tilde.field.time_index(hat.times()[k]);
            if (kt == tilde.field.time_count()) throw NumericalError("mollified time is not a node of the dp grid");
            for (std::size_t i = 0; i < hat.space_count(); ++i) {
                const double d = std::abs(hat.at(k, i) - tilde.field.at(kt, i));
                row.sup_diff = std::max(row.sup_diff, d);
                if (within(hat.space()[i], x0, study.interior_half_width))
                    row.sup_diff_interior = std::max(row.sup_diff_interior, d);
            }
        }
        row.value_shift = std::abs(tilde.value_at(x0) - v_h);
        const SeminormReport full = seminorm_estimate(hat, row.epsilon);
        SeminormOptions sopt;
        sopt.center = x0;
        sopt.half_width = study.interior_half_width;
        const SeminormReport interior = seminorm_estimate(hat, row.epsilon, sopt);
        row.seminorm = full.total();
        row.seminorm_interior = interior.total();
        row.seminorm_terms = Json{{"full", seminorm_json(full)}, {"interior", seminorm_json(interior)}};
    });

    std::vector<double> eps, semi, semi_in;
    for (const auto& row : report.epsilon_rows) {
        eps.push_back(row.epsilon);
        semi.push_back(row.seminorm);
        semi_in.push_back(row.seminorm_interior);
        report.sup_constant = std::max(report.sup_constant, row.sup_diff / row.epsilon);
        report.shift_constant = std::max(report.shift_constant, row.value_shift / row.epsilon);
        report.seminorm_constant = std::max(report.seminorm_constant, row.seminorm * row.epsilon * row.epsilon);
    }
    report.seminorm_slope = log_slope(eps, semi);
    report.seminorm_slope_interior = log_slope(eps, semi_in);
    report.seminorm_slope_ok = std::abs(report.seminorm_slope + 2.0) <= 0.3;

    for (const double h : study.gap_h)
        for (const double e : study.epsilons) report.gap_rows.push_back({h, e, 0.0, 0.0});
    parallel_for(report.gap_rows.size(), [&](std::size_t j) {
        auto& row = report.gap_rows[j];
        const double inner = inner_dt_for(row.h);
        const PerturbedSolution tilde =
            perturbed_dp_solve(problem, driver, row.h, row.epsilon, inner, study.perturbation_grid, popt);
        const ValueField hat = mollify_convolve(tilde.field, Mollifier(row.epsilon, study.quad_points));
        GapOptions gopt;
        gopt.center = x0;
        row.gap = mollified_dp_gap(problem, driver, row.h, row.epsilon, hat, gopt).max_gap;
        gopt.half_width = study.interior_half_width;
        row.gap_interior = mollified_dp_gap(problem, driver, row.h, row.epsilon, hat, gopt).max_gap;
    });
    report.gap_constant = -std::numeric_limits<double>::infinity();
    for (const auto& row : report.gap_rows)
        report.gap_constant = std::max(report.gap_constant, row.gap / (row.h * row.h * row.epsilon));
    return report;
}

Json MollifyStudyReport::to_json() const {
    Json eps = Json::array();
    for (const auto& r : epsilon_rows)
        eps.push_back(Json{{"epsilon", r.epsilon},
                           {"sup_diff", r.sup_diff},
                           {"sup_diff_interior", r.sup_diff_interior},
                           {"value_shift", r.value_shift},
                           {"seminorm", r.seminorm},
                           {"seminorm_interior", r.seminorm_interior},
                           {"seminorm_terms", r.seminorm_terms}});
    Json gaps = Json::array();
    for (const auto& r : gap_rows)
        gaps.push_back(Json{{"h", r.h}, {"epsilon", r.epsilon}, {"gap", r.gap}, {"gap_interior", r.gap_interior}});
    return Json{{"epsilon_sweep", eps},
                {"sup_constant", sup_constant},
                {"shift_constant", shift_constant},
                {"seminorm_slope", seminorm_slope},
                {"seminorm_slope_interior", seminorm_slope_interior},
                {"seminorm_constant", seminorm_constant},
                {"seminorm_slope_within_0.3_of_-2", seminorm_slope_ok},
                {"gap_sweep", gaps},
                {"gap_constant", gap_constant}};
}

} // namespace riskdrift
