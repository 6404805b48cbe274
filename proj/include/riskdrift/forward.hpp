// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/model.hpp"
#include "riskdrift/random.hpp"
#include "riskdrift/value_field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace riskdrift {

/// Brownian increment ΔW for (path, step, coordinate) on a grid of `steps`
/// steps of length dt. With refinement r > 1 the increment is the sum of the
/// r increments of the r-times finer grid, so runs at different resolutions
/// sharing a seed see the same Brownian path.
[[nodiscard]] double brownian_increment(const CounterRng& rng, std::size_t path, std::size_t step,
                                        std::size_t coord, double dt, std::size_t refinement = 1);

using PathControl = std::variant<ControlValue, std::reference_wrapper<const FeedbackPolicy>>;

struct SimulationOptions {
    /// Increments are drawn on a grid this many times finer and summed.
    std::size_t brownian_refinement = 1;
};

/// Euler–Maruyama paths of the controlled diffusion.
struct PathEnsemble {
    std::vector<double> time_grid; // steps + 1 points from t0 to T
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::size_t state_dim = 1;
    std::size_t noise_dim = 1;
    std::vector<double> increments; // paths × steps × d
    std::vector<double> states;     // paths × (steps + 1) × n
    std::vector<std::size_t> control_indices; // paths × steps, only for policy-driven runs
    Seed seed = 0;

    [[nodiscard]] double state(std::size_t p, std::size_t k, std::size_t i = 0) const {
        return states[(p * (steps + 1) + k) * state_dim + i];
    }
    [[nodiscard]] double increment(std::size_t p, std::size_t k, std::size_t j = 0) const {
        return increments[(p * steps + k) * noise_dim + j];
    }
    [[nodiscard]] double terminal(std::size_t p, std::size_t i = 0) const { return state(p, steps, i); }
};

/**
 * X_{k+1} = X_k + b(t_k, X_k, u_k)Δt + σ(t_k, X_k, u_k)ΔW_k from (t0, x0) to T.
 *
 * With a feedback policy the control is chosen at (t_k, X_k) whenever the
 * previous decision's hold time has been reached and then held; policies
 * must be 1-D and cover [t0, T].
 */
[[nodiscard]] PathEnsemble simulate_paths(const ProblemDefinition& problem, const PathControl& control, double t0,
                                          std::span<const double> x0, std::size_t steps, std::size_t paths,
                                          Seed seed, const SimulationOptions& options = {});

/// CSV with columns path, step, t, x1..xn.
void write_paths_csv(const PathEnsemble& ensemble, std::ostream& out);

// ============================================================================
// Doléans exponentials Γ_{t,r} = exp(∫γ dW - ½∫γ² ds)
// ============================================================================

/**
 * Selection rule for γ_s ∈ ∂g(s, 0). The value may depend on the path index,
 * the step, the time and the running Brownian value W_s - W_t (adapted).
 */
class GammaRule {
public:
    using Fn = std::function<double(std::size_t path, std::size_t step, double s, double w)>;

    static GammaRule constant(double gamma);
    /// +u on even steps, -u on odd steps.
    static GammaRule alternating(double u);
    /// u·sign(W_s - W_t), with +u at W = 0.
    static GammaRule path_sign(double u);
    /// Independent uniform draws on [lo, hi] per (path, step).
    static GammaRule random_uniform(double lo, double hi, Seed seed);
    /// `before` on s < switch_time, `after` from then on.
    static GammaRule time_switch(double before, double after, double switch_time);
    static GammaRule custom(Fn fn, double lo, double hi, std::string name);

    [[nodiscard]] double operator()(std::size_t path, std::size_t step, double s, double w) const {
        return fn_(path, step, s, w);
    }
    [[nodiscard]] double lower() const { return lo_; }
    [[nodiscard]] double upper() const { return hi_; }
    [[nodiscard]] double max_abs() const { return std::max(std::abs(lo_), std::abs(hi_)); }
    [[nodiscard]] const std::string& name() const { return name_; }

private:
    Fn fn_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::string name_;
};

struct GammaEnsemble {
    double t = 0.0;
    double r = 0.0;
    std::size_t steps = 0;
    std::string rule;
    std::vector<double> gamma;      // Γ_{t,r} per path
    std::vector<double> brownian;   // W_r - W_t per path
    Seed seed = 0;

    [[nodiscard]] std::size_t paths() const { return gamma.size(); }
    [[nodiscard]] double mean() const;
    [[nodiscard]] double mean_std_error() const;
};

/// Exact per-step update Γ_{k+1} = Γ_k·exp(γ_k ΔW_k - ½γ_k² Δt). ΔW_k is the
/// same increment simulate_paths draws for (seed, path, step).
[[nodiscard]] GammaEnsemble doleans_exponential(const GammaRule& rule, double t, double r, std::size_t paths,
                                                std::size_t steps, Seed seed);

/// As above, rejecting rules whose range leaves the admissible set ∂g(·, 0).
[[nodiscard]] GammaEnsemble doleans_exponential(const GammaRule& rule, const SubgradientSet& admissible, double t,
                                                double r, std::size_t paths, std::size_t steps, Seed seed);

struct GammaBoundReport {
    double second_moment = 0.0;  // sample mean of (Γ - 1)²
    double std_error = 0.0;
    double bound = 0.0;          // e^{u²(r - t)} - 1
    double margin = 0.0;         // bound + 5·stderr - second_moment
    double mean = 0.0;           // sample mean of Γ
    double mean_std_error = 0.0;
    bool pass = false;
};

/// Asserts sample E(Γ - 1)² <= e^{u²(r-t)} - 1 + 5 standard errors.
[[nodiscard]] GammaBoundReport gamma_bound_check(const GammaEnsemble& ensemble, double u, double t, double r);

} // namespace riskdrift
