// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/config.hpp"
#include "riskdrift/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace riskdrift {

// ============================================================================
// Rate fitting
// ============================================================================

struct RateFit {
    double slope = 0.0;
    double log_c = 0.0;
    std::size_t used = 0;
    std::vector<std::string> notes; // e.g. excluded zero errors
};

/// OLS of log err on log h. Pairs with err = 0 are dropped with a note;
/// fewer than two remaining pairs is a ValidationError.
[[nodiscard]] RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs);

// ============================================================================
// Convergence study
// ============================================================================

struct ExperimentConfig {
    LoadedConfig config;
    std::vector<double> h_schedule{0.6, 0.45, 0.35, 0.27};
    double epsilon_exponent = 1.0 / 3.0;  // ε = h^exponent
    double inner_dt_target = 0.002;       // inner_dt = h² / ceil(h² / target)
    double radius = 0.0;                  // <= 0: default
    double reference_dx_factor = 8.0;     // reference dx = coarsest DP dx / factor
    double reference_dt_factor = 64.0;    // reference dt <= coarsest inner_dt / factor (and CFL)
    std::vector<double> sweep_offsets{-1.0, -0.5, 0.0, 0.5, 1.0};
    std::size_t perturbation_grid = 3;    // per axis, for Ṽ where the (h, ε) pair is admissible
    Seed seed = 1;

    /// Reads the optional "experiment" section of the config document.
    [[nodiscard]] static ExperimentConfig from_config(LoadedConfig config);
    /// Rejects a schedule that is not strictly decreasing or leaves (0, 1].
    void check() const;
};

struct ConvergenceRow {
    double h = 0.0;
    double epsilon = 0.0;
    double inner_dt = 0.0;
    double dx = 0.0;
    double v_h = 0.0;
    double v_ref = 0.0;
    double error = 0.0;
    std::vector<double> sweep_errors;   // |V_ref - V_h| at x0 + offsets
    std::optional<double> v_tilde;      // perturbed value at (t0, x0) when ε ≥ h and ε² + h² ≤ T
    double seconds = 0.0;               // wall clock, reported separately
};

struct ReferenceCheck {
    double dx = 0.0;
    double dt = 0.0;
    double value = 0.0;
    double coarse_dx = 0.0;
    double coarse_value = 0.0;
    double change = 0.0;
    double threshold = 0.0; // 10% of the smallest DP error
    bool pass = false;
    double seconds = 0.0;
};

struct ExperimentReport {
    std::vector<ConvergenceRow> rows;
    RateFit fit;
    double bound_constant = 0.0; // C = max error(h)/h^{1/3}
    bool bound_holds = false;    // error(h) <= C·h^{1/3} for every h (true by construction)
    bool nonincreasing = false;  // errors nonincreasing as h decreases
    bool slope_ok = false;       // fitted slope >= 1/3 - 0.05
    ReferenceCheck reference;
    std::string config_hash;
    Seed seed = 0;
    std::vector<std::string> notes;

    /// Report without wall-clock fields (byte-identical across runs).
    [[nodiscard]] Json to_json() const;
    /// Wall-clock seconds per run.
    [[nodiscard]] Json timings_json() const;
};

/// Reference V by solve_hjb on the refined grid, V_h by dp_solve per h, errors
/// at (0, x0), log-log fit and the bound-form check.
[[nodiscard]] ExperimentReport run_convergence(const ExperimentConfig& cfg);

// ============================================================================
// Axiom suites
// ============================================================================

struct AxiomsOptions {
    std::size_t driver_samples = 2000;
    std::size_t risk_instances = 100;
    std::size_t dual_paths = 20000;
    std::size_t gamma_paths = 100000;
    Seed seed = 1;
};

struct AxiomsSummary {
    Json report;                      // per-suite details
    std::vector<std::string> failures; // failing property names
    [[nodiscard]] bool pass() const { return failures.empty(); }
};

/// driver_axiom_check, risk_axiom_suite, dual_lower_bound_check and
/// gamma_bound_check for the configured driver. The risk and dual suites
/// presuppose the driver axioms and are skipped (not passed) when they fail.
[[nodiscard]] AxiomsSummary run_axioms(const LoadedConfig& config, const AxiomsOptions& options = {});

// ============================================================================
// Mollification study
// ============================================================================

struct MollifyStudyConfig {
    double h = 0.1;                                // h for the ε sweep
    std::vector<double> epsilons{0.1, 0.2, 0.4};
    std::vector<double> gap_h{0.05, 0.075, 0.1};   // (h, ε) sweep for the DP gap
    double inner_dt_divisions = 10.0;              // inner_dt = h² / divisions
    std::size_t perturbation_grid = 3;
    std::size_t quad_points = 32;
    double interior_half_width = 3.0;              // window for the interior diagnostics
    double radius = 0.0;                           // <= 0: default
};

struct MollifyStudyReport {
    struct EpsilonRow {
        double epsilon = 0.0;
        double sup_diff = 0.0;            // sup |V̂ - Ṽ| over the V̂ grid
        double sup_diff_interior = 0.0;
        double value_shift = 0.0;         // |Ṽ(0, x0) - V_h(0, x0)|
        double seminorm = 0.0;            // total over the V̂ grid
        double seminorm_interior = 0.0;
        Json seminorm_terms;
    };
    struct GapRow {
        double h = 0.0;
        double epsilon = 0.0;
        double gap = 0.0;
        double gap_interior = 0.0;
    };
    std::vector<EpsilonRow> epsilon_rows;
    std::vector<GapRow> gap_rows;
    double sup_constant = 0.0;        // max sup_diff / ε
    double shift_constant = 0.0;      // max value_shift / ε
    double seminorm_slope = 0.0;      // log-log slope of seminorm vs ε
    double seminorm_slope_interior = 0.0;
    double seminorm_constant = 0.0;   // max seminorm · ε²
    double gap_constant = 0.0;        // max gap / (h²ε)
    bool seminorm_slope_ok = false;   // |slope + 2| <= 0.3

    [[nodiscard]] Json to_json() const;
};

[[nodiscard]] MollifyStudyReport run_mollify_study(const LoadedConfig& config, const MollifyStudyConfig& study);

} // namespace riskdrift
