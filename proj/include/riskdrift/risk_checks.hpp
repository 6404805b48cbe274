// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/forward.hpp"
#include "riskdrift/model.hpp"
#include "riskdrift/risk.hpp"

#include <functional>
#include <string>
#include <vector>

namespace riskdrift {

// ============================================================================
// Property suite for the lattice g-evaluation
// ============================================================================

struct AxiomResult {
    std::string name;
    double max_violation = 0.0; // worst signed excess over the tolerance budget
    bool pass = true;
};

struct RiskAxiomReport {
    std::size_t instances = 0;
    double dt = 0.0;
    std::vector<AxiomResult> results; // one entry per property, in a fixed order
    bool pass = false;
    std::vector<std::string> failures;

    [[nodiscard]] const AxiomResult& at(const std::string& name) const;
};

struct RiskAxiomOptions {
    double tolerance = 1e-9;
    double horizon = 1.0;
    /// Upper bound on the lattice step; it is reduced until the explicit
    /// scheme is monotone for the driver's Lipschitz constant.
    double max_dt = 0.02;
};

/**
 * Randomized property tests of ρ^g on a fixed lattice with b = 0.3 sin x,
 * σ = 1 + 0.2 cos x. Each instance draws nodal terminal payoffs and checks
 * (on every node of the initial layer):
 *   normalization, translation, positive homogeneity, convexity,
 *   monotonicity, time consistency (bitwise) and driver comparison.
 * Driver comparison uses the bracket linear(γ) <= g <= scaled_abs(K) for
 * γ ∈ {-g(-1), g(1)}, valid for convex positively homogeneous scalar drivers.
 */
[[nodiscard]] RiskAxiomReport risk_axiom_suite(const DriverSpec& driver, std::size_t instances, Seed seed,
                                               const RiskAxiomOptions& options = {});

/// ρ^{g1}[ξ] - ρ^{g2}[ξ] at x0 on the suite lattice for a nodal payoff function.
[[nodiscard]] double driver_comparison_gap(const DriverSpec& g1, const DriverSpec& g2,
                                           const std::function<double(double)>& payoff, double dt = 0.01);

// ============================================================================
// Dual representation lower bound
// ============================================================================

struct NamedPayoff {
    std::string name;
    std::function<double(double)> fn; // ξ = fn(W_T)
};

struct DualEntry {
    std::string rule;
    std::string payoff;
    double expectation = 0.0; // Monte Carlo E[Γξ]
    double std_error = 0.0;
    double rho = 0.0;         // lattice ρ^g[ξ]
    double slack = 0.0;       // ρ - E[Γξ]
    double allowance = 0.0;   // 5·stderr + 5Δt
    bool pass = false;
};

struct DualCheckReport {
    std::vector<DualEntry> entries;
    double lattice_dt = 0.0;
    bool pass = false;
};

struct DualCheckOptions {
    double horizon = 1.0;
    std::size_t paths = 20000;
    std::size_t steps = 50;
    double lattice_dt = 1e-3;
};

/**
 * For ξ = f(W_T) with X = W (b = 0, σ = 1), checks
 * E[Γ_{0,T}ξ] <= ρ^g_{0,T}[ξ] + 5·stderr + 5Δt for every rule and payoff.
 * Γ and W_T share the same Brownian increments (seeded as in simulate_paths).
 */
[[nodiscard]] DualCheckReport dual_lower_bound_check(const DriverSpec& driver, const std::vector<NamedPayoff>& payoffs,
                                                     const std::vector<GammaRule>& rules, Seed seed,
                                                     const DualCheckOptions& options = {});

/// Ten selection rules with values in ∂g(·, 0) = [lo, hi].
[[nodiscard]] std::vector<GammaRule> default_gamma_rules(double lo, double hi, Seed seed);

/// W_T, max(W_T, 0) and cos(2 W_T).
[[nodiscard]] std::vector<NamedPayoff> default_dual_payoffs();

} // namespace riskdrift
