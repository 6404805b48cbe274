// SPDX-License-Identifier: MIT
#include "support.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/hjb.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace riskdrift;

namespace {

ValueField solve(const ProblemDefinition& p, const DriverSpec& g, double dx, std::size_t max_layers = 257) {
    HjbGridOptions opt;
    opt.max_stored_layers = max_layers;
    return solve_hjb(p, g, make_hjb_grid(p, g, dx, opt));
}

double inner_residual(const HamiltonianReport& r, double half_width) {
    double worst = 0.0;
    for (std::size_t k = 0; k < r.times.size(); ++k)
        for (std::size_t i = 0; i < r.space.count; ++i)
            if (std::abs(r.space[i]) <= half_width)
                worst = std::max(worst, std::abs(r.residual[k * r.space.count + i]));
    return worst;
}

} // namespace

TEST_CASE("solve_hjb closed forms at dx = 0.01") {
    // V(t, x) = x + κ(T - t).
    CHECK(std::abs(solve(testing::brownian_linear(), DriverSpec::scaled_abs(0.5), 0.01).value_at(0, 0.0) - 0.5) <=
          1e-3);
    // V(t, x) = x² + (T - t).
    CHECK(std::abs(solve(testing::heat_quadratic(), DriverSpec::zero(), 0.01).value_at(0, 0.0) - 1.0) <= 1e-2);
    // V(t, x) = x - (T - t) with α ≡ -1.
    CHECK(std::abs(solve(testing::two_action_drift(), DriverSpec::zero(), 0.01).value_at(0, 0.0) + 1.0) <= 1e-2);
}

TEST_CASE("grid construction") {
    const ProblemDefinition p = testing::brownian_linear();
    const DriverSpec g = DriverSpec::scaled_abs(0.5);
    const HjbGrid grid = make_hjb_grid(p, g, 0.01);
    CHECK(grid.cfl <= 1.0);
    CHECK(grid.cfl > 0.99);
    CHECK(grid.dt * static_cast<double>(grid.steps) == doctest::Approx(1.0).epsilon(1e-12));
    HjbGridOptions opt;
    opt.dt = 10.0 * grid.dt;
    CHECK_THROWS_AS((void)make_hjb_grid(p, g, 0.01, opt), NumericalError);
    opt.dt = 0.0;
    opt.max_stored_layers = 0;
    CHECK(make_hjb_grid(p, g, 0.01, opt).store_every == 1);
}

TEST_CASE("non-homogeneous drivers are rejected") {
    const DriverSpec square =
        DriverSpec::custom([](double, std::span<const double> z) { return z[0] * z[0]; }, 10.0, 10.0);
    const ProblemDefinition p = testing::brownian_linear();
    CHECK_THROWS_AS((void)solve_hjb(p, square, make_hjb_grid(p, DriverSpec::scaled_abs(1.0), 0.05)),
                    ValidationError);
}

TEST_CASE("hamiltonian_residual examples") {
    const double kappa = 0.5;
    const ProblemDefinition p = testing::brownian_linear();
    const DriverSpec g = DriverSpec::scaled_abs(kappa);

    SUBCASE("exact affine field has zero residual") {
        ValueField exact = solve(p, g, 0.02);
        for (std::size_t k = 0; k < exact.time_count(); ++k)
            for (std::size_t i = 0; i < exact.space_count(); ++i)
                exact.at(k, i) = exact.space()[i] + kappa * (1.0 - exact.times()[k]);
        CHECK(hamiltonian_residual(exact, p, g).max_norm <= 1e-10);
    }
    SUBCASE("zero field with unit running cost") {
        ScalarProblemBuilder b;
        b.running_cost = [](double, double, double) { return 1.0; };
        b.terminal_cost = [](double) { return 0.0; };
        const ProblemDefinition q = b.build();
        ValueField zero = solve(q, DriverSpec::zero(), 0.05);
        for (std::size_t k = 0; k < zero.time_count(); ++k)
            for (std::size_t i = 0; i < zero.space_count(); ++i) zero.at(k, i) = 0.0;
        const HamiltonianReport r = hamiltonian_residual(zero, q, DriverSpec::zero());
        for (std::size_t k = 0; k < r.times.size(); ++k)
            for (std::size_t i = 1; i + 1 < r.space.count; ++i)
                CHECK(r.residual[k * r.space.count + i] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("solved heat field: residual within dx² + dt away from the boundary") {
        // The reflecting boundary at the default radius pollutes |x| <= 2 by
        // early times; radius 10 keeps the window clean.
        const ProblemDefinition q = testing::heat_quadratic();
        for (double dx : {0.08, 0.04}) {
            HjbGridOptions opt;
            opt.radius = 10.0;
            opt.max_stored_layers = 0;
            const HjbGrid grid = make_hjb_grid(q, DriverSpec::zero(), dx, opt);
            const ValueField v = solve_hjb(q, DriverSpec::zero(), grid);
            CHECK(inner_residual(hamiltonian_residual(v, q, DriverSpec::zero()), 2.0) <= dx * dx + grid.dt);
        }
    }
}

TEST_CASE("extract_policy examples") {
    SUBCASE("two actions pick alpha = -1") {
        const ProblemDefinition p = testing::two_action_drift();
        const ValueField v = solve(p, DriverSpec::zero(), 0.05);
        const PolicyField pol = extract_policy(v, p, DriverSpec::zero());
        for (std::size_t k = 0; k < pol.interval_count(); ++k)
            for (std::size_t i = 0; i < pol.space().count; ++i)
                if (std::abs(pol.space()[i]) <= 4.0) CHECK(pol.index(k, i) == 0);
    }
    SUBCASE("cost alpha² + alpha over five controls picks -0.5") {
        ScalarProblemBuilder b;
        b.controls = testing::finite_controls({-1.0, -0.5, 0.0, 0.5, 1.0});
        b.drift = [](double, double, double a) { return a; };
        b.running_cost = [](double, double, double a) { return a * a; };
        const ProblemDefinition p = b.build();
        const ValueField v = solve(p, DriverSpec::zero(), 0.05);
        const PolicyField pol = extract_policy(v, p, DriverSpec::zero());
        const std::size_t mid = pol.space().nearest(0.0);
        for (std::size_t k = 0; k < pol.interval_count(); ++k) CHECK(pol.index(k, mid) == 1);
    }
    SUBCASE("singleton control everywhere") {
        const ProblemDefinition p = testing::brownian_linear();
        const PolicyField pol = extract_policy(solve(p, DriverSpec::scaled_abs(0.3), 0.1), p,
                                               DriverSpec::scaled_abs(0.3));
        for (std::size_t k = 0; k < pol.interval_count(); ++k)
            for (std::size_t i = 0; i < pol.space().count; ++i) CHECK(pol.index(k, i) == 0);
    }
}

TEST_CASE("scheme properties") {
    const DriverSpec g = DriverSpec::scaled_abs(0.4);
    ScalarProblemBuilder b;
    b.controls = testing::finite_controls({-1.0, 1.0});
    b.drift = [](double, double, double a) { return a; };
    b.terminal_cost = [](double x) { return std::sin(x); };
    const ProblemDefinition base = b.build();
    const ValueField v = solve(base, g, 0.05);

    SUBCASE("comparison in the terminal data") {
        b.terminal_cost = [](double x) { return std::sin(x) + 0.2 * std::exp(-x * x); };
        const ValueField w = solve(b.build(), g, 0.05);
        for (std::size_t i = 0; i < v.space_count(); ++i) CHECK(w.at(0, i) >= v.at(0, i));
    }
    SUBCASE("translation of the terminal data") {
        b.terminal_cost = [](double x) { return std::sin(x) + 3.0; };
        const ValueField w = solve(b.build(), g, 0.05);
        for (std::size_t i = 0; i < v.space_count(); ++i)
            CHECK(w.at(0, i) - v.at(0, i) == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("driver monotonicity") {
        const ValueField w = solve(base, DriverSpec::positive_part(0.4), 0.05);
        for (std::size_t i = 0; i < v.space_count(); ++i) CHECK(v.at(0, i) >= w.at(0, i) - 1e-12);
    }
}

TEST_CASE("HJB and DP approach the same closed form on the toy") {
    const ValueField v = solve(testing::brownian_linear(), DriverSpec::scaled_abs(0.5), 0.02);
    CHECK(std::abs(v.value_at(0, 0.0) - 0.5) <= 1e-6);
}
