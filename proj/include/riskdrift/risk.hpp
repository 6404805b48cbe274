// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/forward.hpp"
#include "riskdrift/model.hpp"
#include "riskdrift/value_field.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace riskdrift {

// ============================================================================
// Trinomial lattice
// ============================================================================

/// One-step transition probabilities to x - dx, x, x + dx.
struct Stencil {
    double down = 0.0;
    double stay = 1.0;
    double up = 0.0;
};

/**
 * Moment-matched trinomial stencil:
 *   p_up   = ½(σ²Δt/Δx² + bΔt/Δx)
 *   p_down = ½(σ²Δt/Δx² - bΔt/Δx)
 *   p_stay = 1 - σ²Δt/Δx²
 * Throws NumericalError when any probability is negative.
 */
[[nodiscard]] Stencil trinomial_stencil(double drift, double sigma, double dt, double dx);

/// Bounds of |b| and |σ| sampled over the nodes of `space`, a few times in
/// [t0, T], and every control.
struct CoefficientBounds {
    double drift_max = 0.0;
    double sigma_max = 0.0;
};
[[nodiscard]] CoefficientBounds sample_coefficient_bounds(const ProblemDefinition& problem, double t0,
                                                          const UniformGrid& space);

/// 6·σ_max·√T, the default half-width of the truncated space grid.
[[nodiscard]] double default_radius(const ProblemDefinition& problem, double center = 0.0);

struct LatticeOptions {
    /// dx = lambda·σ_max·√dt; lambda >= 1. √3 matches the fourth Gaussian moment.
    double lambda = 1.7320508075688772;
    /// Explicit dx; overrides lambda when > 0.
    double dx = 0.0;
};

/**
 * Time/space lattice on [t0, T] × [x0 - R, x0 + R] for a scalar problem. The
 * stencil reflects at the truncation boundary (ghost node mirrors the
 * interior neighbour). Holds a copy of the problem.
 */
class Lattice {
public:
    Lattice(ProblemDefinition problem, double t0, double x0, double dt, double dx, UniformGrid space);

    [[nodiscard]] const ProblemDefinition& problem() const { return problem_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] double dx() const { return dx_; }
    [[nodiscard]] double t0() const { return t0_; }
    [[nodiscard]] double x0() const { return x0_; }
    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    [[nodiscard]] const UniformGrid& space() const { return space_; }
    [[nodiscard]] std::size_t steps() const { return times_.size() - 1; }
    [[nodiscard]] std::size_t center_index() const { return space_.nearest(x0_); }

    [[nodiscard]] Stencil stencil(double t, double x, Control a) const {
        return trinomial_stencil(problem_.drift_at(t, x, a), problem_.diffusion_at(t, x, a), dt_, dx_);
    }

private:
    ProblemDefinition problem_;
    double t0_, x0_, dt_, dx_;
    std::vector<double> times_;
    UniformGrid space_;
};

/// Builds the lattice with steps = ceil((T - t0)/dt) of equal length (<= dt)
/// and validates the stencil at every node, time and control.
/// radius <= 0 selects default_radius.
[[nodiscard]] Lattice build_lattice(const ProblemDefinition& problem, double t0, double x0, double dt, double radius,
                                    const LatticeOptions& options = {});

// ============================================================================
// Cost functional and the backward recursion
// ============================================================================

/// ξ = ∫ c ds (left rectangle rule) + Ψ(X_T).
struct CostFunctional {
    std::function<double(double t, double x, Control a)> running; // empty: no running cost
    std::function<double(double x)> terminal;

    static CostFunctional from_problem(const ProblemDefinition& problem);
    static CostFunctional terminal_only(std::function<double(double)> terminal);

    /// Pathwise value for path p of a scalar ensemble.
    [[nodiscard]] double on_path(const PathEnsemble& paths, std::size_t p, const ControlSet& controls,
                                 const ControlValue* fixed) const;
};

/**
 * One backward step of the explicit g-evaluation scheme on a reflecting 1-D
 * grid:
 *   E   = Σ_j p_j Y_{k+1, j}
 *   Z   = Σ_j p_j (Y_{k+1, j} - Y_{k+1, i}) ΔW_j / Δt,  ΔW_j = (Δξ_j - bΔt)/σ
 *   Y_k = E + Δt·[c(t_k, x_i, α) + g(t_k, Z)]
 * with Z = 0 where σ = 0. `controls` has one entry (broadcast) or one per
 * node. `z_out` may be empty. Rejects K·Δt >= 1.
 */
void backward_step(const ProblemDefinition& problem, const DriverSpec& driver, const UniformGrid& grid, double t,
                   double dt, std::span<const Control> controls, std::span<const double> next,
                   std::span<double> out, std::span<double> z_out,
                   const std::function<double(double, double, Control)>* running);

/// Y at (t0, x0) and the discrete Z at the x0 node for each step.
struct RiskValue {
    double value = 0.0;
    std::vector<double> z_profile;
    double std_error = 0.0; // Monte Carlo only
    std::string method;
};

using LatticeControl = std::variant<ControlValue, std::reference_wrapper<const PolicyField>>;

/// Layer at step k_begin obtained by recursing from `layer_end` at step k_end.
[[nodiscard]] std::vector<double> g_evaluate_layers(const Lattice& lattice, const DriverSpec& driver,
                                                    const CostFunctional& cost, const LatticeControl& control,
                                                    std::span<const double> layer_end, std::size_t k_end,
                                                    std::size_t k_begin, std::vector<double>* z_center = nullptr);

/**
 * Layer at t_begin from `layer_end` at t_end with `steps` equal explicit
 * steps on `grid`. `controls` has one entry (broadcast) or one per node.
 * `running` may be null.
 */
[[nodiscard]] std::vector<double> g_evaluate_interval(const ProblemDefinition& problem, const DriverSpec& driver,
                                                      const UniformGrid& grid, double t_begin, double t_end,
                                                      std::size_t steps, std::span<const Control> controls,
                                                      std::span<const double> layer_end,
                                                      const std::function<double(double, double, Control)>* running);

/// ρ^g_{t0,T}[ξ] at (t0, x0) with terminal layer Ψ.
[[nodiscard]] RiskValue g_evaluate_lattice(const Lattice& lattice, const DriverSpec& driver,
                                           const CostFunctional& cost, const LatticeControl& control);

// ============================================================================
// Regression Monte Carlo
// ============================================================================

struct McOptions {
    std::size_t paths = 20000;
    std::size_t steps = 100;
    std::size_t basis_degree = 3;
    Seed seed = 1;
};

/**
 * Least-squares backward induction on Euler paths: E_k[Y_{k+1}] and
 * Z_k = E_k[Y_{k+1}ΔW_k]/Δt are regressed on polynomials of X_k up to
 * basis_degree (per coordinate, standardized). Coordinates with zero spread
 * (e.g. at k = 0) drop out of the basis. The standard error is that of the
 * pathwise estimator Ψ(X_T) + Σ Δt[c + g(Z_k(X_k))].
 */
[[nodiscard]] RiskValue g_evaluate_mc(const ProblemDefinition& problem, const DriverSpec& driver,
                                      const CostFunctional& cost, const PathControl& control, double t0,
                                      std::span<const double> x0, const McOptions& options);

} // namespace riskdrift
