// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/model.hpp"
#include "riskdrift/value_field.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace riskdrift {

// ============================================================================
// Mollifier on B = (-1, 0) × (-1, 1)
// ============================================================================

/**
 * φ(τ, ζ) = C·ψ(2τ + 1)·ψ(ζ) with the bump ψ(s) = exp(-1/(1 - s²)) on |s| < 1,
 * symmetric in ζ and supported on τ ∈ (-1, 0). C is fixed by a 400-point
 * Gauss–Legendre rule so that φ has unit mass. Convolutions use a tensor
 * Gauss–Legendre rule with `points` nodes per axis whose weights are
 * renormalized to sum to exactly one (constants are reproduced exactly).
 */
class Mollifier {
public:
    explicit Mollifier(double epsilon, std::size_t points = 32);

    [[nodiscard]] double epsilon() const { return epsilon_; }
    [[nodiscard]] std::size_t points() const { return points_; }

    [[nodiscard]] double operator()(double tau, double zeta) const;
    /// φ_ε(s, y) = ε^{-3} φ(s/ε², y/ε) for n = 1.
    [[nodiscard]] double rescaled(double s, double y) const;

    /// ∫_B φ by the tensor rule with `points` nodes per axis (before renormalization).
    [[nodiscard]] double mass() const;
    /// ∫ φ_ε over (-ε², 0) × (-ε, ε) by the same rule.
    [[nodiscard]] double rescaled_mass() const;

    /// Quadrature nodes in B and normalized weights (sum to one).
    struct Node {
        double tau;
        double zeta;
        double weight;
    };
    [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }

private:
    double epsilon_;
    std::size_t points_;
    double scale_ = 1.0;
    double raw_mass_ = 0.0;
    std::vector<Node> nodes_;
};

// ============================================================================
// Perturbed value function
// ============================================================================

/// β = (τ, ζ) ∈ B: τ ∈ (-1, 0), |ζ| < 1.
struct Perturbation {
    double tau = -0.5;
    double zeta = 0.0;

    [[nodiscard]] bool in_box() const { return tau > -1.0 && tau < 0.0 && zeta > -1.0 && zeta < 1.0; }
};

/// τ_j = -j/(n+1), ζ_j = -1 + 2j/(n+1) for j = 1..n (tensor product, τ slowest).
[[nodiscard]] std::vector<Perturbation> perturbation_grid(std::size_t per_axis);

struct PerturbedOptions {
    double radius = 0.0; // <= 0: default 6·σ_max·√T
    double x0 = 0.0;
    double lambda = 1.7320508075688772;
};

struct PerturbedSolution {
    ValueField field; // producer V_tilde on the dp grid
    double h = 0.0;
    double epsilon = 0.0;
    double inner_dt = 0.0;
    std::vector<Perturbation> perturbations;

    [[nodiscard]] double value_at(double x) const { return field.value_at(0, x); }
};

/**
 * Backward DP over intervals of length h² that also minimizes over the
 * perturbations: for each control α and β = (τ, ζ), the interval sweep runs
 * on [t_i + ε²τ, t_{i+1} + ε²τ] with terminal values Ṽ(t_{i+1}, y - εζ) and is
 * read at x + εζ. Negative times use the clamped coefficients.
 *
 * Requires ε >= h, ε² + h² <= T and a nonempty perturbation list inside B.
 */
[[nodiscard]] PerturbedSolution perturbed_dp_solve(const ProblemDefinition& problem, const DriverSpec& driver,
                                                   double h, double epsilon, double inner_dt,
                                                   const std::vector<Perturbation>& perturbations,
                                                   const PerturbedOptions& options = {});

/// Convenience form with the default tensor grid (per_axis >= 2).
[[nodiscard]] PerturbedSolution perturbed_dp_solve(const ProblemDefinition& problem, const DriverSpec& driver,
                                                   double h, double epsilon, double inner_dt, std::size_t per_axis,
                                                   const PerturbedOptions& options = {});

// ============================================================================
// Convolution and diagnostics
// ============================================================================

/**
 * V̂(t, x) = Σ_q w_q Ṽ(t - ε²τ_q, x - εζ_q) with bilinear interpolation of Ṽ,
 * on the space grid of `field` and its times t <= T - ε² (or `times` when
 * given). Interpolation clamps at the edges of the space grid.
 */
[[nodiscard]] ValueField mollify_convolve(const ValueField& field, const Mollifier& mollifier,
                                          const std::optional<std::vector<double>>& times = std::nullopt);

struct SeminormReport {
    double sup_abs = 0.0;     // sup |w|
    double sup_dx = 0.0;      // sup |D_x w|
    double sup_dxx = 0.0;     // sup |D²_xx w|
    double sup_dt = 0.0;      // sup |∂_t w|
    double holder_dxx = 0.0;  // sup |D²w(t,x) - D²w(s,y)| / (|t-s| + |x-y|), adjacent nodes
    double holder_dt = 0.0;   // same for ∂_t w
    double epsilon = 0.0;
    std::size_t nodes = 0;

    [[nodiscard]] double total() const {
        return sup_abs + sup_dx + sup_dxx + sup_dt + holder_dxx + holder_dt;
    }
};

struct SeminormOptions {
    /// Only nodes with |x - center| <= half_width enter the suprema (<= 0: all).
    double center = 0.0;
    double half_width = 0.0;
};

/**
 * Central differences in t and x on the interior nodes of a uniform grid
 * (>= 5 nodes per axis); Hölder quotients over pairs of adjacent interior
 * nodes in either direction.
 */
[[nodiscard]] SeminormReport seminorm_estimate(const ValueField& field, double epsilon = 0.0,
                                               const SeminormOptions& options = {});

struct GapOptions {
    double inner_dt = 0.0;  // <= 0: h²/10
    double center = 0.0;
    double half_width = 0.0; // sampled x: grid nodes with |x - center| <= half_width (<= 0: all)
};

struct GapReport {
    double max_gap = 0.0;   // max over (t, x, α) of V̂(t,x) - ρ^α[∫c + V̂(t + h², X)]
    double at_t = 0.0;
    double at_x = 0.0;
    std::size_t at_control = 0;
    std::size_t samples = 0;
};

/**
 * For every time t of `field_hat` with t + h² <= T - ε², every sampled node x
 * and every control α, evaluates the one-interval risk of the mollified field
 * on the lattice (terminal layer V̂(t + h², ·) by bilinear interpolation).
 */
[[nodiscard]] GapReport mollified_dp_gap(const ProblemDefinition& problem, const DriverSpec& driver, double h,
                                         double epsilon, const ValueField& field_hat, const GapOptions& options = {});

} // namespace riskdrift
