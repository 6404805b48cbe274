// SPDX-License-Identifier: MIT
#include "support.hpp"

#include "riskdrift/dp.hpp"
#include "riskdrift/errors.hpp"
#include "riskdrift/mollify.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace riskdrift;

namespace {

ValueField filled(std::size_t times, double dt, double dx, std::size_t half_nodes, double (*f)(double, double)) {
    std::vector<double> ts(times);
    for (std::size_t k = 0; k < times; ++k) ts[k] = static_cast<double>(k) * dt;
    ValueField v(ts, UniformGrid::centered(0.0, dx, half_nodes), FieldProducer::V_tilde);
    for (std::size_t k = 0; k < v.time_count(); ++k)
        for (std::size_t i = 0; i < v.space_count(); ++i) v.at(k, i) = f(ts[k], v.space()[i]);
    return v;
}

} // namespace

TEST_CASE("mollifier mass") {
    for (double eps : {0.1, 0.3, 1.0}) {
        const Mollifier m(eps);
        CHECK(std::abs(m.mass() - 1.0) <= 1e-6);
        CHECK(std::abs(m.rescaled_mass() - 1.0) <= 1e-6);
        double total = 0.0;
        for (const auto& q : m.nodes()) total += q.weight;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
    const Mollifier m(0.5);
    CHECK(m(-0.5, 1.0) == 0.0);
    CHECK(m(0.1, 0.0) == 0.0);
    CHECK(m(-0.5, 0.3) == doctest::Approx(m(-0.5, -0.3)));
    CHECK_THROWS_AS(Mollifier(0.0), ValidationError);
}

TEST_CASE("mollify_convolve examples") {
    const Mollifier m(0.2);
    SUBCASE("constant field stays constant") {
        const ValueField v = filled(41, 0.025, 0.05, 60, [](double, double) { return 2.5; });
        const ValueField w = mollify_convolve(v, m);
        CHECK(w.times().back() <= 1.0 - 0.04 + 1e-12);
        for (double x : w.values()) CHECK(x == doctest::Approx(2.5).epsilon(1e-14));
    }
    SUBCASE("a field linear in x keeps its slope and moves by the mean shift") {
        // w(t, x) = x convolved with a kernel symmetric in zeta is x again.
        const ValueField v = filled(41, 0.025, 0.05, 60, [](double, double x) { return x; });
        const ValueField w = mollify_convolve(v, m);
        const std::size_t mid = w.space().nearest(0.0);
        for (std::size_t k = 0; k < w.time_count(); ++k)
            for (std::size_t i = mid - 20; i <= mid + 20; ++i) CHECK(std::abs(w.at(k, i) - w.space()[i]) <= 1e-12);
    }
    SUBCASE("monotone in the field") {
        const ValueField lo = filled(41, 0.025, 0.05, 60, [](double t, double x) { return std::sin(x) + t; });
        const ValueField hi =
            filled(41, 0.025, 0.05, 60, [](double t, double x) { return std::sin(x) + t + 0.1 * std::exp(-x * x); });
        const ValueField a = mollify_convolve(lo, m), b = mollify_convolve(hi, m);
        for (std::size_t j = 0; j < a.values().size(); ++j) CHECK(b.values()[j] >= a.values()[j]);
    }
    SUBCASE("requested times beyond T - eps^2 are rejected") {
        const ValueField v = filled(41, 0.025, 0.05, 60, [](double, double x) { return x; });
        CHECK_THROWS_AS((void)mollify_convolve(v, m, std::vector<double>{0.99}), ValidationError);
    }
}

TEST_CASE("seminorm_estimate examples") {
    SUBCASE("zero field") {
        const SeminormReport r = seminorm_estimate(filled(21, 0.05, 0.1, 20, [](double, double) { return 0.0; }));
        CHECK(r.total() == 0.0);
    }
    SUBCASE("w = x") {
        const SeminormReport r = seminorm_estimate(filled(21, 0.05, 0.1, 20, [](double, double x) { return x; }));
        CHECK(r.sup_dx == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.sup_dxx <= 1e-10);
        CHECK(r.sup_dt == 0.0);
        CHECK(r.holder_dxx <= 1e-8);
        CHECK(r.holder_dt == 0.0);
    }
    SUBCASE("w = x² + t") {
        const SeminormReport r =
            seminorm_estimate(filled(21, 0.05, 0.1, 20, [](double t, double x) { return x * x + t; }));
        CHECK(r.sup_dxx == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(r.sup_dt == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("too few nodes") {
        CHECK_THROWS_AS((void)seminorm_estimate(filled(4, 0.05, 0.1, 20, [](double, double) { return 0.0; })),
                        ValidationError);
    }
}

TEST_CASE("perturbed DP") {
    const ProblemDefinition p = testing::two_action_drift();
    const DriverSpec g = DriverSpec::scaled_abs(0.3);
    const double h = 0.3, eps = 0.3, inner = 0.01;

    SUBCASE("zero-perturbation limit reproduces dp_solve") {
        const PerturbedSolution t = perturbed_dp_solve(p, g, h, eps, inner, {Perturbation{-1e-9, 0.0}});
        const DpSolution s = dp_solve(p, g, h, inner, 0.0);
        CHECK(std::abs(t.value_at(0.0) - s.value_at(0.0)) <= 1e-6);
    }
    SUBCASE("minimizing over more perturbations is no worse than any single one") {
        const auto grid = perturbation_grid(3);
        REQUIRE(grid.size() == 9);
        const PerturbedSolution all = perturbed_dp_solve(p, g, h, eps, inner, grid);
        for (const auto& beta : {grid.front(), grid[4], grid.back()}) {
            const PerturbedSolution one = perturbed_dp_solve(p, g, h, eps, inner, {beta});
            const std::size_t mid = one.field.space().nearest(0.0);
            for (std::size_t i = mid - 10; i <= mid + 10; ++i) CHECK(all.field.at(0, i) <= one.field.at(0, i) + 1e-12);
        }
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS((void)perturbed_dp_solve(p, g, h, 0.2, inner, 3), ValidationError);  // eps < h
        CHECK_THROWS_AS((void)perturbed_dp_solve(p, g, 0.6, 0.9, 0.04, 3), ValidationError); // eps² + h² > T
        CHECK_THROWS_AS((void)perturbed_dp_solve(p, g, h, eps, inner, {Perturbation{0.0, 0.0}}), ValidationError);
        CHECK_THROWS_AS((void)perturbed_dp_solve(p, g, h, eps, inner, std::vector<Perturbation>{}), ValidationError);
    }
}

TEST_CASE("perturbation grid layout") {
    const auto grid = perturbation_grid(2);
    REQUIRE(grid.size() == 4);
    CHECK(grid[0].tau == doctest::Approx(-1.0 / 3.0));
    CHECK(grid[0].zeta == doctest::Approx(-1.0 / 3.0));
    CHECK(grid[1].zeta == doctest::Approx(1.0 / 3.0));
    CHECK(grid[2].tau == doctest::Approx(-2.0 / 3.0));
    for (const auto& b : grid) CHECK(b.in_box());
}

TEST_CASE("a martingale field has no DP gap") {
    // Ψ(x) = x with zero driver: every layer equals x, so V̂ = x too.
    const ProblemDefinition p = testing::brownian_linear();
    const double h = 0.2, eps = 0.3;
    const PerturbedSolution t = perturbed_dp_solve(p, DriverSpec::zero(), h, eps, h * h / 10.0, 2);
    const ValueField hat = mollify_convolve(t.field, Mollifier(eps));
    GapOptions opt;
    opt.half_width = 2.0;
    const GapReport r = mollified_dp_gap(p, DriverSpec::zero(), h, eps, hat, opt);
    CHECK(r.samples > 0);
    CHECK(std::abs(r.max_gap) <= 1e-6);
}
