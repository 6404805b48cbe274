// SPDX-License-Identifier: MIT
//
// riskdrift: command-line front end for the risk-averse control toolkit.
//
//   riskdrift [--config PATH] [--out DIR] [--seed N] [--threads N] <command> [flags]
//
// Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 I/O error.
// RISKDRIFT_THREADS overrides --threads.

#include "riskdrift/config.hpp"
#include "riskdrift/dp.hpp"
#include "riskdrift/errors.hpp"
#include "riskdrift/experiment.hpp"
#include "riskdrift/hjb.hpp"
#include "riskdrift/mollify.hpp"
#include "riskdrift/numeric.hpp"
#include "riskdrift/parallel.hpp"
#include "riskdrift/report.hpp"
#include "riskdrift/risk.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace riskdrift;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = "out";
    Seed seed = 1;
    std::size_t threads = 1;
};

struct RiskFlags {
    double dt = 0.0;
    double radius = 0.0;
    std::string method = "lattice";
    std::size_t paths = 20000;
    std::optional<Seed> seed;
    std::size_t control = 0;
};

struct DpFlags {
    double h = 0.1;
    double inner_dt = 0.0;
    double radius = 0.0;
};

struct HjbFlags {
    double dx = 0.01;
    double dt = 0.0;
    double radius = 0.0;
    bool policy = false;
};

struct MollifyFlags {
    double epsilon = 0.2;
    std::size_t quad_points = 32;
    double h = 0.1;
    double inner_dt = 0.0;
    double radius = 0.0;
    std::size_t perturbation_grid = 3;
    bool study = false;
};

struct ConvergeFlags {
    bool strict = false;
};

struct AxiomsFlags {
    std::size_t instances = 100;
};

std::size_t resolve_threads(std::size_t flag) {
    const char* env = std::getenv("RISKDRIFT_THREADS");
    if (env == nullptr || *env == '\0') return flag;
    try {
        std::size_t used = 0;
        const long long n = std::stoll(env, &used);
        if (used != std::string(env).size() || n < 1) throw std::invalid_argument(env);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ValidationError(std::string("RISKDRIFT_THREADS must be a positive integer, got \"") + env + "\"");
    }
}

LoadedConfig load(const GlobalOptions& g) {
    return g.config_path.empty() ? load_config(default_config_document()) : load_config_file(g.config_path);
}

Provenance provenance(const LoadedConfig& cfg, Seed seed) { return {config_hash(cfg.document), seed}; }

void emit(const GlobalOptions& g, const std::string& name, const Json& report) {
    const std::string text = json_text(report);
    write_text_file(fs::path(g.out_dir) / name, text);
    std::cout << text;
}

void emit_csv(const GlobalOptions& g, const std::string& name, const std::string& text) {
    write_text_file(fs::path(g.out_dir) / name, text);
}

// ----------------------------------------------------------------------------
// Commands
// ----------------------------------------------------------------------------

int cmd_validate(const GlobalOptions& g) {
    const LoadedConfig cfg = load(g);
    const AssumptionReport ar = validate_problem(cfg.problem, 2000, g.seed);
    const DriverAxiomReport da = driver_axiom_check(cfg.driver, 2000, g.seed, cfg.problem.horizon);
    (void)ExperimentConfig::from_config(cfg);

    Json coeffs = Json::array();
    for (const auto& c : ar.coefficients)
        coeffs.push_back(Json{{"name", c.name},
                              {"max_lipschitz_ratio", c.max_lipschitz_ratio},
                              {"max_holder_ratio", c.max_holder_ratio},
                              {"max_magnitude", c.max_magnitude}});
    Json report{{"problem", {{"samples", ar.samples}, {"coefficients", coeffs}, {"pass", ar.pass}}},
                {"driver", {{"label", cfg.driver.label()}, {"failures", da.failures}, {"pass", da.pass}}},
                {"pass", ar.pass && da.pass}};
    emit(g, "validate.json", with_provenance(report, provenance(cfg, g.seed)));
    if (!ar.pass) std::cerr << "validate: problem violates the declared Lipschitz or bound constants\n";
    for (const auto& f : da.failures) std::cerr << "validate: driver fails " << f << "\n";
    return ar.pass && da.pass ? 0 : 1;
}

int cmd_axioms(const GlobalOptions& g, const AxiomsFlags& f) {
    const LoadedConfig cfg = load(g);
    AxiomsOptions opt;
    opt.seed = g.seed;
    opt.risk_instances = f.instances;
    const AxiomsSummary summary = run_axioms(cfg, opt);
    emit(g, "axioms.json", summary.report);
    for (const auto& name : summary.failures) std::cerr << "axioms: failed " << name << "\n";
    return summary.pass() ? 0 : 1;
}

int cmd_evaluate_risk(const GlobalOptions& g, const RiskFlags& f) {
    const LoadedConfig cfg = load(g);
    if (f.control >= cfg.problem.controls.size()) throw ValidationError("--control index out of range");
    const ControlValue control = cfg.problem.controls.value(f.control);
    const CostFunctional cost = CostFunctional::from_problem(cfg.problem);
    const Seed seed = f.seed.value_or(g.seed);
    const double span = cfg.problem.horizon - cfg.t0;

    Json report;
    if (f.method == "lattice") {
        const double dt = f.dt > 0.0 ? f.dt : 1e-3;
        const Lattice lattice = build_lattice(cfg.problem, cfg.t0, cfg.x0, dt, f.radius);
        const RiskValue r = g_evaluate_lattice(lattice, cfg.driver, cost, control);
        report = Json{{"value", r.value},
                      {"dt", lattice.dt()},
                      {"method", r.method},
                      {"diagnostics",
                       {{"steps", lattice.steps()},
                        {"dx", lattice.dx()},
                        {"nodes", lattice.space().count},
                        {"x_min", lattice.space()[0]},
                        {"x_max", lattice.space().back()},
                        {"z_first", r.z_profile.empty() ? 0.0 : r.z_profile.front()},
                        {"z_last", r.z_profile.empty() ? 0.0 : r.z_profile.back()}}}};
    } else if (f.method == "mc") {
        const double dt = f.dt > 0.0 ? f.dt : 1e-2;
        McOptions opt;
        opt.paths = f.paths;
        opt.steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt - 1e-9)));
        opt.seed = seed;
        const double x0[1] = {cfg.x0};
        const RiskValue r = g_evaluate_mc(cfg.problem, cfg.driver, cost, control, cfg.t0, x0, opt);
        report = Json{{"value", r.value},
                      {"dt", span / static_cast<double>(opt.steps)},
                      {"method", r.method},
                      {"diagnostics",
                       {{"steps", opt.steps},
                        {"paths", opt.paths},
                        {"std_error", r.std_error},
                        {"basis_degree", opt.basis_degree},
                        {"z_first", r.z_profile.empty() ? 0.0 : r.z_profile.front()},
                        {"z_last", r.z_profile.empty() ? 0.0 : r.z_profile.back()}}}};
    } else {
        throw ValidationError("--method must be lattice or mc");
    }
    emit(g, "risk.json", with_provenance(report, provenance(cfg, seed)));
    return 0;
}

int cmd_solve_dp(const GlobalOptions& g, const DpFlags& f) {
    const LoadedConfig cfg = load(g);
    const double inner_dt = f.inner_dt > 0.0 ? f.inner_dt : f.h * f.h / 10.0;
    DpOptions opt;
    opt.x0 = cfg.x0;
    const DpSolution sol = dp_solve(cfg.problem, cfg.driver, f.h, inner_dt, f.radius, opt);
    const Provenance prov = provenance(cfg, g.seed);
    std::ostringstream value, policy;
    write_field_csv(sol.field, prov, value);
    write_policy_csv(sol.policy, cfg.problem.controls, prov, policy);
    emit_csv(g, "dp_value.csv", value.str());
    emit_csv(g, "dp_policy.csv", policy.str());
    Json report{{"h", f.h},
                {"inner_dt", inner_dt},
                {"intervals", sol.policy.interval_count()},
                {"dx", sol.field.space().step},
                {"nodes", sol.field.space_count()},
                {"x0", cfg.x0},
                {"value", sol.value_at(cfg.x0)},
                {"terminal_deviation", dp_terminal_deviation(sol)}};
    emit(g, "dp.json", with_provenance(report, prov));
    return 0;
}

int cmd_solve_hjb(const GlobalOptions& g, const HjbFlags& f) {
    const LoadedConfig cfg = load(g);
    HjbGridOptions opt;
    opt.dt = f.dt;
    opt.radius = f.radius;
    opt.center = cfg.x0;
    const HjbGrid grid = make_hjb_grid(cfg.problem, cfg.driver, f.dx, opt);
    const ValueField field = solve_hjb(cfg.problem, cfg.driver, grid);
    const Provenance prov = provenance(cfg, g.seed);
    std::ostringstream value;
    write_field_csv(field, prov, value);
    emit_csv(g, "hjb_value.csv", value.str());
    if (f.policy) {
        std::ostringstream policy;
        write_policy_csv(extract_policy(field, cfg.problem, cfg.driver), cfg.problem.controls, prov, policy);
        emit_csv(g, "hjb_policy.csv", policy.str());
    }
    const HamiltonianReport res = hamiltonian_residual(field, cfg.problem, cfg.driver);
    // The reflecting boundary dominates the max norm; the inner half of the
    // domain shows the scheme's own residual.
    double inner_max = 0.0;
    const double half = 0.5 * (res.space.back() - res.space[0]) / 2.0;
    for (std::size_t k = 0; k < res.times.size(); ++k)
        for (std::size_t i = 0; i < res.space.count; ++i)
            if (std::abs(res.space[i] - cfg.x0) <= half)
                inner_max = std::max(inner_max, std::abs(res.residual[k * res.space.count + i]));
    Json report{{"dx", grid.dx},
                {"dt", grid.dt},
                {"steps", grid.steps},
                {"store_every", grid.store_every},
                {"cfl", grid.cfl},
                {"nodes", grid.space().count},
                {"x0", cfg.x0},
                {"value", field.value_at(0, cfg.x0)},
                {"residual_max", res.max_norm},
                {"residual_max_inner_half", inner_max},
                {"residual_at", {{"t", res.max_time}, {"x", res.max_x}}}};
    emit(g, "hjb.json", with_provenance(report, prov));
    return 0;
}

int cmd_mollify(const GlobalOptions& g, const MollifyFlags& f) {
    const LoadedConfig cfg = load(g);
    const Provenance prov = provenance(cfg, g.seed);
    if (f.study) {
        MollifyStudyConfig study;
        study.h = f.h;
        study.quad_points = f.quad_points;
        study.perturbation_grid = f.perturbation_grid;
        study.radius = f.radius;
        emit(g, "mollify_study.json", with_provenance(run_mollify_study(cfg, study).to_json(), prov));
        return 0;
    }
    const double inner_dt = f.inner_dt > 0.0 ? f.inner_dt : f.h * f.h / 10.0;
    PerturbedOptions popt;
    popt.radius = f.radius;
    popt.x0 = cfg.x0;
    const PerturbedSolution tilde =
        perturbed_dp_solve(cfg.problem, cfg.driver, f.h, f.epsilon, inner_dt, f.perturbation_grid, popt);
    const Mollifier mollifier(f.epsilon, f.quad_points);
    const ValueField hat = mollify_convolve(tilde.field, mollifier);
    std::ostringstream value;
    write_field_csv(hat, prov, value);
    emit_csv(g, "mollified.csv", value.str());
    const SeminormReport s = seminorm_estimate(hat, f.epsilon);
    Json report{{"epsilon", f.epsilon},
                {"h", f.h},
                {"inner_dt", inner_dt},
                {"quad_points", f.quad_points},
                {"mollifier_mass", mollifier.mass()},
                {"V_tilde", tilde.value_at(cfg.x0)},
                {"V_hat", hat.value_at(0, cfg.x0)},
                {"seminorm",
                 {{"sup_abs", s.sup_abs},
                  {"sup_dx", s.sup_dx},
                  {"sup_dxx", s.sup_dxx},
                  {"sup_dt", s.sup_dt},
                  {"holder_dxx", s.holder_dxx},
                  {"holder_dt", s.holder_dt},
                  {"total", s.total()},
                  {"nodes", s.nodes}}}};
    emit(g, "seminorm.json", with_provenance(report, prov));
    return 0;
}

int cmd_converge(const GlobalOptions& g, const ConvergeFlags& f) {
    ExperimentConfig cfg = ExperimentConfig::from_config(load(g));
    if (!cfg.config.document.contains("experiment") || !cfg.config.document["experiment"].contains("seed"))
        cfg.seed = g.seed;
    const ExperimentReport report = run_convergence(cfg);
    emit(g, "convergence.json", report.to_json());
    write_text_file(fs::path(g.out_dir) / "timings.json", json_text(report.timings_json()));
    const bool ok = report.nonincreasing && report.slope_ok && report.reference.pass;
    if (!ok) {
        if (!report.nonincreasing) std::cerr << "converge: errors are not nonincreasing in h\n";
        if (!report.slope_ok) std::cerr << "converge: fitted slope below 1/3 - 0.05\n";
        if (!report.reference.pass) std::cerr << "converge: reference self-test failed\n";
    }
    return ok || !f.strict ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-averse optimal control with g-evaluations"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config_path, "Problem and driver JSON (default: built-in closed-form toy)");
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (RISKDRIFT_THREADS overrides)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Check the config against the standing assumptions");

    AxiomsFlags af;
    auto* axioms = app.add_subcommand("axioms", "Run the driver, risk, dual and Doleans property suites");
    axioms->add_option("--instances", af.instances, "Randomized risk-axiom instances")->capture_default_str();

    RiskFlags rf;
    auto* risk = app.add_subcommand("evaluate-risk", "g-evaluation of the cost functional at (t0, x0)");
    risk->add_option("--dt", rf.dt, "Time step (default 1e-3 lattice, 1e-2 mc)");
    risk->add_option("--radius", rf.radius, "Lattice half width (default 6 sigma sqrt(T))");
    risk->add_option("--method", rf.method, "lattice or mc")
        ->check(CLI::IsMember({"lattice", "mc"}))
        ->capture_default_str();
    risk->add_option("--paths", rf.paths, "Monte Carlo paths")->capture_default_str();
    risk->add_option("--seed", rf.seed, "Monte Carlo seed (default: global --seed)");
    risk->add_option("--control", rf.control, "Index of the fixed control")->capture_default_str();

    DpFlags df;
    auto* dp = app.add_subcommand("solve-dp", "Piecewise-constant control value V_h by dynamic programming");
    dp->set_help_flag("--help", "Print this help message and exit");
    dp->add_option("--h", df.h, "Control interval is h^2")->capture_default_str();
    dp->add_option("--inner-dt", df.inner_dt, "Lattice step inside an interval (default h^2/10)");
    dp->add_option("--radius", df.radius, "Space half width");

    HjbFlags hf;
    auto* hjb = app.add_subcommand("solve-hjb", "Explicit monotone scheme for the risk-averse HJB equation");
    hjb->add_option("--dx", hf.dx, "Space step")->capture_default_str();
    hjb->add_option("--dt", hf.dt, "Time step (default: CFL-maximal)");
    hjb->add_option("--radius", hf.radius, "Space half width");
    hjb->add_flag("--policy", hf.policy, "Also write the greedy policy CSV");

    MollifyFlags mf;
    auto* moll = app.add_subcommand("mollify", "Perturbed value, mollified field and seminorm");
    moll->set_help_flag("--help", "Print this help message and exit");
    moll->add_option("--epsilon", mf.epsilon, "Mollifier scale (>= h)")->capture_default_str();
    moll->add_option("--quad-points", mf.quad_points, "Gauss-Legendre points per axis")->capture_default_str();
    moll->add_option("--h", mf.h, "Control interval is h^2")->capture_default_str();
    moll->add_option("--inner-dt", mf.inner_dt, "Lattice step (default h^2/10)");
    moll->add_option("--radius", mf.radius, "Space half width");
    moll->add_option("--perturbation-grid", mf.perturbation_grid, "Perturbations per axis")->capture_default_str();
    moll->add_flag("--study", mf.study, "Run the epsilon sweep and the (h, epsilon) gap sweep");

    ConvergeFlags cf;
    auto* conv = app.add_subcommand("converge", "Convergence study of V_h against the HJB reference");
    conv->add_flag("--strict", cf.strict, "Exit 1 when a convergence check fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        set_thread_count(resolve_threads(g.threads));
        if (validate->parsed()) return cmd_validate(g);
        if (axioms->parsed()) return cmd_axioms(g, af);
        if (risk->parsed()) return cmd_evaluate_risk(g, rf);
        if (dp->parsed()) return cmd_solve_dp(g, df);
        if (hjb->parsed()) return cmd_solve_hjb(g, hf);
        if (moll->parsed()) return cmd_mollify(g, mf);
        if (conv->parsed()) return cmd_converge(g, cf);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
