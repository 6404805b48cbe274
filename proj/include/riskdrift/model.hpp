// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/random.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace riskdrift {

// ============================================================================
// Controls
// ============================================================================

/// A point of the compact control set U (m components).
struct ControlValue {
    std::vector<double> components;

    [[nodiscard]] std::span<const double> view() const { return components; }
    bool operator==(const ControlValue&) const = default;
};

/**
 * Finite discretization of the compact control set U.
 *
 * Either an explicit list, or a box with a uniform per-axis node count
 * (tensor grid, last axis fastest). All minimizations over U range over this
 * list, and policies refer to controls by index.
 */
class ControlSet {
public:
    static ControlSet finite(const std::vector<ControlValue>& values);
    static ControlSet box(const std::vector<double>& lower, const std::vector<double>& upper,
                          const std::vector<std::size_t>& counts);
    /// Single scalar control, the common case for uncontrolled problems.
    static ControlSet singleton(double value = 0.0);

    [[nodiscard]] std::size_t size() const { return dim_ == 0 ? 0 : flat_.size() / dim_; }
    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] bool empty() const { return flat_.empty(); }
    [[nodiscard]] std::span<const double> operator[](std::size_t i) const {
        return {flat_.data() + i * dim_, dim_};
    }
    [[nodiscard]] ControlValue value(std::size_t i) const;
    /// Index of the member equal to `a` within `tol`, or size() when absent.
    [[nodiscard]] std::size_t index_of(std::span<const double> a, double tol = 1e-12) const;
    [[nodiscard]] bool contains(std::span<const double> a, double tol = 1e-12) const {
        return index_of(a, tol) < size();
    }

private:
    std::size_t dim_ = 0;
    std::vector<double> flat_;
};

// ============================================================================
// Controlled system
// ============================================================================

using State = std::span<const double>;
using Control = std::span<const double>;

/// b or σ: writes n (drift) or n*d row-major (diffusion) values into `out`.
using VectorCoefficient = std::function<void(double t, State x, Control a, std::span<double> out)>;
using ScalarCoefficient = std::function<double(double t, State x, Control a)>;
using TerminalCoefficient = std::function<double(State x)>;

/**
 * Controlled diffusion dX = b dt + σ dW with running cost c and terminal
 * cost Ψ on [0, T].
 *
 * Coefficients are evaluated through the accessors below, which clamp
 * negative times to 0 (b(t,·) = b(0,·) for t < 0), the convention the
 * perturbed system relies on.
 */
struct ProblemDefinition {
    VectorCoefficient drift;
    VectorCoefficient diffusion;
    ScalarCoefficient running_cost;
    TerminalCoefficient terminal_cost;
    double horizon = 1.0;
    ControlSet controls;
    std::size_t state_dim = 1;
    std::size_t noise_dim = 1;
    double lipschitz_K = 1.0;
    double bound_K = 1.0;

    /// Rejects horizon <= 0, an empty control set and missing coefficients.
    void check() const;

    [[nodiscard]] bool is_scalar() const { return state_dim == 1 && noise_dim == 1; }

    // 1-D accessors used by the lattice, DP and HJB engines.
    [[nodiscard]] double drift_at(double t, double x, Control a) const;
    [[nodiscard]] double diffusion_at(double t, double x, Control a) const;
    [[nodiscard]] double running_cost_at(double t, double x, Control a) const;
    [[nodiscard]] double terminal_at(double x) const;

    // General accessors.
    void drift_into(double t, State x, Control a, std::span<double> out) const;
    void diffusion_into(double t, State x, Control a, std::span<double> out) const;
    [[nodiscard]] double running_cost_at(double t, State x, Control a) const;
};

/// Convenience builder for scalar problems with time-homogeneous closures.
struct ScalarProblemBuilder {
    std::function<double(double t, double x, double a)> drift = [](double, double, double) { return 0.0; };
    std::function<double(double t, double x, double a)> diffusion = [](double, double, double) { return 1.0; };
    std::function<double(double t, double x, double a)> running_cost = [](double, double, double) { return 0.0; };
    std::function<double(double x)> terminal_cost = [](double x) { return x; };
    double horizon = 1.0;
    ControlSet controls = ControlSet::singleton();
    double lipschitz_K = 1.0;
    double bound_K = 10.0;

    [[nodiscard]] ProblemDefinition build() const;
};

// ============================================================================
// Driver g(t, z)
// ============================================================================

enum class DriverKind { zero, linear, scaled_abs, positive_part, custom };

[[nodiscard]] std::string to_string(DriverKind kind);

/// Descriptor of ∂g(t, 0): a point, an interval (d = 1) or a centred ball.
struct SubgradientSet {
    enum class Shape { point, interval, ball };
    Shape shape = Shape::point;
    std::vector<double> center;
    double lower = 0.0; // interval only
    double upper = 0.0; // interval only
    double radius = 0.0;

    [[nodiscard]] bool contains(std::span<const double> gamma, double tol = 1e-12) const;
    [[nodiscard]] bool contains(double gamma, double tol = 1e-12) const {
        return contains(std::span<const double>(&gamma, 1), tol);
    }
};

/**
 * Deterministic BSDE generator g(t, z), z ∈ R^d, independent of y.
 *
 * Built-in kinds are convex, positively homogeneous and vanish at z = 0.
 * Custom drivers carry declared constants; their axioms are only checked by
 * sampling (driver_axiom_check).
 */
class DriverSpec {
public:
    using CustomFn = std::function<double(double t, std::span<const double> z)>;

    static DriverSpec zero(std::size_t noise_dim = 1);
    static DriverSpec linear(std::vector<double> gamma);
    static DriverSpec scaled_abs(double kappa, std::size_t noise_dim = 1);
    static DriverSpec positive_part(double kappa);
    static DriverSpec custom(CustomFn fn, double lipschitz_K, double subgradient_bound_u,
                             std::size_t noise_dim = 1, std::string label = "custom");

    /// g(max(t, 0), z).
    [[nodiscard]] double operator()(double t, std::span<const double> z) const;
    [[nodiscard]] double operator()(double t, double z) const {
        return (*this)(t, std::span<const double>(&z, 1));
    }

    [[nodiscard]] DriverKind kind() const { return kind_; }
    [[nodiscard]] std::size_t noise_dim() const { return noise_dim_; }
    [[nodiscard]] double lipschitz_K() const { return lipschitz_K_; }
    [[nodiscard]] double subgradient_bound_u() const { return subgradient_u_; }
    [[nodiscard]] const std::vector<double>& gamma() const { return gamma_; }
    [[nodiscard]] double kappa() const { return kappa_; }
    [[nodiscard]] const std::string& label() const { return label_; }

    /// For d = 1 and a positively homogeneous convex g, g(t, z) = max(lo·z, hi·z)
    /// with lo = -g(t, -1), hi = g(t, 1). Used by the upwind HJB scheme.
    [[nodiscard]] std::pair<double, double> slopes(double t) const {
        return {-(*this)(t, -1.0), (*this)(t, 1.0)};
    }

private:
    DriverKind kind_ = DriverKind::zero;
    std::size_t noise_dim_ = 1;
    double lipschitz_K_ = 0.0;
    double subgradient_u_ = 0.0;
    double kappa_ = 0.0;
    std::vector<double> gamma_;
    CustomFn custom_;
    std::string label_ = "zero";
};

[[nodiscard]] inline double driver_eval(const DriverSpec& driver, double t, std::span<const double> z) {
    return driver(t, z);
}

[[nodiscard]] SubgradientSet driver_subgradient_interval(const DriverSpec& driver);

// ============================================================================
// Sampled assumption checks
// ============================================================================

struct CoefficientStats {
    std::string name;
    double max_lipschitz_ratio = 0.0;
    double max_holder_ratio = 0.0; // |μ(t,·) - μ(s,·)| / |t - s|^{1/2}
    double max_magnitude = 0.0;
};

struct AssumptionReport {
    std::vector<CoefficientStats> coefficients; // drift, diffusion, running_cost, terminal_cost
    std::size_t samples = 0;
    bool pass = false;

    [[nodiscard]] const CoefficientStats& at(const std::string& name) const;
};

struct ValidationOptions {
    double state_radius = 10.0; ///< samples x in the box |x_i| <= state_radius
};

/// Samples pairs of (t, x, α) and records Lipschitz ratios, Hölder-½ time
/// ratios and magnitudes. pass iff every ratio <= lipschitz_K and every
/// magnitude <= bound_K. Deterministic given the seed.
[[nodiscard]] AssumptionReport validate_problem(const ProblemDefinition& problem, std::size_t samples,
                                                Seed seed, const ValidationOptions& options = {});

struct DriverAxiomReport {
    double max_normalization_error = 0.0;
    double max_convexity_violation = 0.0;
    double max_homogeneity_error = 0.0;
    double max_lipschitz_excess = 0.0;
    double max_time_extension_error = 0.0;
    std::size_t samples = 0;
    bool pass = false;
    std::vector<std::string> failures; // e.g. "positive homogeneity"
};

/// Checks normalization, convexity, positive homogeneity, the declared
/// Lipschitz bound and the negative-time extension on sampled tuples, with
/// tolerance 1e-12 relative to the magnitudes involved.
[[nodiscard]] DriverAxiomReport driver_axiom_check(const DriverSpec& driver, std::size_t samples, Seed seed,
                                                   double horizon = 1.0);

} // namespace riskdrift
