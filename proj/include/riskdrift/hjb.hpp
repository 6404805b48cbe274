// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/model.hpp"
#include "riskdrift/value_field.hpp"

#include <cstddef>
#include <vector>

namespace riskdrift {

/**
 * Explicit finite-difference grid for the risk-averse HJB equation.
 *
 * CFL: dt·(σ_max²/dx² + (b_max + K·σ_max)/dx) <= 1, with K the driver's
 * Lipschitz constant. Boundaries reflect (ghost node mirrors the interior
 * neighbour).
 */
struct HjbGrid {
    double dt = 0.0;
    double dx = 0.0;
    double radius = 0.0;
    double center = 0.0;
    std::size_t steps = 0;      // time steps on [0, T]
    std::size_t store_every = 1; // keep every k-th time layer (the terminal one always)
    double drift_max = 0.0;
    double sigma_max = 0.0;
    double cfl = 0.0;           // left-hand side of the CFL condition

    [[nodiscard]] UniformGrid space() const { return UniformGrid::covering(center, dx, radius); }
};

struct HjbGridOptions {
    double dt = 0.0;           // <= 0: CFL-maximal step (T divided into the fewest steps)
    double radius = 0.0;       // <= 0: 6·σ_max·√T + b_max·T
    double center = 0.0;
    std::size_t max_stored_layers = 257; // 0 keeps every layer
};

/// Builds the grid and rejects a CFL violation with NumericalError.
[[nodiscard]] HjbGrid make_hjb_grid(const ProblemDefinition& problem, const DriverSpec& driver, double dx,
                                    const HjbGridOptions& options = {});

/**
 * v_k = v_{k+1} + dt·min_α { c + ½σ²D²v + max_{γ ∈ {lo, hi}} [(b + γσ)⁺D⁺v - (b + γσ)⁻D⁻v] }
 * on layer k + 1, from v(T, ·) = Ψ, with coefficients at t_k. The driver enters
 * through g(z) = max(lo·z, hi·z), lo = -g(-1), hi = g(1), which is exact for
 * convex positively homogeneous scalar drivers; other drivers are rejected.
 * The upwind direction per γ keeps every neighbour weight nonnegative.
 */
[[nodiscard]] ValueField solve_hjb(const ProblemDefinition& problem, const DriverSpec& driver, const HjbGrid& grid);

struct HamiltonianReport {
    std::vector<double> times;     // layer times t_k, k < last
    UniformGrid space;
    std::vector<double> residual;  // (times × space) row-major, 0 on boundary nodes
    double max_norm = 0.0;
    double max_time = 0.0;
    double max_x = 0.0;
};

/**
 * (v_{k+1} - v_k)/(t_{k+1} - t_k) + min_α{c + ½σ²D²v_k + upwind drift and
 * driver terms on v_k} at every interior node of every stored layer but the
 * last. Exact (up to rounding) on fields affine in x and linear in t.
 */
[[nodiscard]] HamiltonianReport hamiltonian_residual(const ValueField& field, const ProblemDefinition& problem,
                                                     const DriverSpec& driver);

/// Per node of every layer but the last, the α minimizing the discrete
/// Hamiltonian on that layer; ties go to the lowest index.
[[nodiscard]] PolicyField extract_policy(const ValueField& field, const ProblemDefinition& problem,
                                         const DriverSpec& driver);

} // namespace riskdrift
