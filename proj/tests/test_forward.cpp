// SPDX-License-Identifier: MIT
#include "support.hpp"

#include "riskdrift/forward.hpp"
#include "riskdrift/numeric.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace riskdrift;

namespace {

std::vector<double> terminals(const PathEnsemble& e) {
    std::vector<double> v(e.paths);
    for (std::size_t p = 0; p < e.paths; ++p) v[p] = e.terminal(p);
    return v;
}

} // namespace

TEST_CASE("deterministic ODE paths end at the exact value") {
    ScalarProblemBuilder b;
    b.drift = [](double, double, double) { return 1.0; };
    b.diffusion = [](double, double, double) { return 0.0; };
    const double x0[1] = {0.0};
    for (std::size_t steps : {1u, 7u, 64u}) {
        const PathEnsemble e = simulate_paths(b.build(), ControlValue{{0.0}}, 0.0, x0, steps, 16, 3);
        for (std::size_t p = 0; p < e.paths; ++p) CHECK(e.terminal(p) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("driftless martingale: terminal mean and Ito variance") {
    const double x0[1] = {0.0};
    const std::size_t paths = 20000;
    const PathEnsemble e = simulate_paths(testing::brownian_linear(), ControlValue{{0.0}}, 0.0, x0, 50, paths, 9);
    const auto xt = terminals(e);
    CHECK(std::abs(sample_mean(xt)) <= 5.0 / std::sqrt(static_cast<double>(paths)));
    // Var of the sample variance of N(0,1) is about 2/n.
    const double var_se = std::sqrt(2.0 / static_cast<double>(paths));
    CHECK(std::abs(sample_variance(xt) - 1.0) <= 5.0 * var_se);
}

TEST_CASE("ensemble invariants: initial state and increment variance") {
    const double x0[1] = {0.7};
    const std::size_t paths = 4000, steps = 20;
    const PathEnsemble e = simulate_paths(testing::brownian_linear(), ControlValue{{0.0}}, 0.0, x0, steps, paths, 4);
    for (std::size_t p = 0; p < paths; ++p) CHECK(e.state(p, 0) == 0.7);
    const double dt = 1.0 / static_cast<double>(steps);
    std::vector<double> sq(paths * steps);
    for (std::size_t p = 0; p < paths; ++p)
        for (std::size_t k = 0; k < steps; ++k) sq[p * steps + k] = e.increment(p, k) * e.increment(p, k);
    CHECK(std::abs(sample_mean(sq) - dt) <= 5.0 * standard_error(sq));
}

TEST_CASE("same seed gives identical paths, different seed differs") {
    const double x0[1] = {0.0};
    const ProblemDefinition p = testing::brownian_linear();
    const auto a = simulate_paths(p, ControlValue{{0.0}}, 0.0, x0, 10, 100, 21);
    const auto b = simulate_paths(p, ControlValue{{0.0}}, 0.0, x0, 10, 100, 21);
    const auto c = simulate_paths(p, ControlValue{{0.0}}, 0.0, x0, 10, 100, 22);
    CHECK(a.states == b.states);
    CHECK(a.states != c.states);
}

TEST_CASE("Brownian refinement keeps the same path across resolutions") {
    const CounterRng rng(5);
    const double dt = 0.1;
    const double coarse = brownian_increment(rng, 3, 1, 0, dt, 1);
    const double fine = brownian_increment(rng, 3, 2, 0, dt / 2.0, 1) + brownian_increment(rng, 3, 3, 0, dt / 2.0, 1);
    const double refined = brownian_increment(rng, 3, 1, 0, dt, 2);
    CHECK(refined == doctest::Approx(fine).epsilon(1e-14));
    CHECK(coarse != refined);
}

TEST_CASE("policy-driven simulation follows the feedback rule") {
    ScalarProblemBuilder b;
    b.controls = testing::finite_controls({-1.0, 1.0});
    b.drift = [](double, double, double a) { return a; };
    b.diffusion = [](double, double, double) { return 0.0; };
    PolicyField policy({0.0, 0.5, 1.0}, UniformGrid::centered(0.0, 0.5, 4));
    for (std::size_t i = 0; i < policy.space().count; ++i) {
        policy.index(0, i) = 1; // +1 on the first half
        policy.index(1, i) = 0; // -1 on the second half
    }
    const double x0[1] = {0.0};
    const PathEnsemble e = simulate_paths(b.build(), std::cref(static_cast<const FeedbackPolicy&>(policy)), 0.0, x0,
                                          10, 3, 1);
    for (std::size_t p = 0; p < e.paths; ++p) CHECK(e.terminal(p) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(e.state(0, 5) == doctest::Approx(0.5));
}

TEST_CASE("CSV export has a header and one row per (path, step)") {
    const double x0[1] = {0.0};
    const PathEnsemble e = simulate_paths(testing::brownian_linear(), ControlValue{{0.0}}, 0.0, x0, 4, 2, 1);
    std::ostringstream out;
    write_paths_csv(e, out);
    const std::string s = out.str();
    CHECK(s.rfind("path,step,t,x1\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : s) lines += c == '\n';
    CHECK(lines == 1 + 2 * 5);
}

TEST_CASE("Doleans exponential examples") {
    SUBCASE("gamma = 0 gives Gamma = 1") {
        const GammaEnsemble e = doleans_exponential(GammaRule::constant(0.0), 0.0, 1.0, 1000, 20, 3);
        for (double g : e.gamma) CHECK(g == 1.0);
    }
    SUBCASE("gamma = 1 on a unit interval: E(Gamma - 1)^2 = e - 1") {
        const GammaEnsemble e = doleans_exponential(GammaRule::constant(1.0), 0.0, 1.0, 100000, 50, 3);
        const GammaBoundReport r = gamma_bound_check(e, 1.0, 0.0, 1.0);
        CHECK(std::abs(r.second_moment - (std::exp(1.0) - 1.0)) <= 5.0 * r.std_error);
        CHECK(std::abs(r.mean - 1.0) <= 5.0 * r.mean_std_error);
    }
    SUBCASE("gamma = 0.5 on 0.4") {
        const GammaEnsemble e = doleans_exponential(GammaRule::constant(0.5), 0.0, 0.4, 100000, 20, 4);
        const GammaBoundReport r = gamma_bound_check(e, 0.5, 0.0, 0.4);
        CHECK(r.bound == doctest::Approx(std::exp(0.1) - 1.0));
        CHECK(r.second_moment <= r.bound + 5.0 * r.std_error);
        CHECK(r.pass);
    }
}

TEST_CASE("gamma_bound_check examples") {
    SUBCASE("zero ensemble passes with zero bound") {
        const GammaEnsemble e = doleans_exponential(GammaRule::constant(0.0), 0.0, 1.0, 500, 10, 1);
        const GammaBoundReport r = gamma_bound_check(e, 0.0, 0.0, 1.0);
        CHECK(r.pass);
        CHECK(r.bound == 0.0);
        CHECK(r.second_moment == 0.0);
    }
    SUBCASE("constant u is near equality") {
        const GammaEnsemble e = doleans_exponential(GammaRule::constant(0.5), 0.0, 1.0, 100000, 50, 2);
        const GammaBoundReport r = gamma_bound_check(e, 0.5, 0.0, 1.0);
        CHECK(r.pass);
        CHECK(std::abs(r.second_moment - r.bound) <= 5.0 * r.std_error);
    }
    SUBCASE("alternating sign has the same bound") {
        const GammaEnsemble e = doleans_exponential(GammaRule::alternating(0.5), 0.0, 1.0, 100000, 50, 2);
        const GammaBoundReport r = gamma_bound_check(e, 0.5, 0.0, 1.0);
        CHECK(r.pass);
        CHECK(std::abs(r.second_moment - r.bound) <= 5.0 * r.std_error);
    }
    SUBCASE("an understated u fails") {
        const GammaEnsemble e = doleans_exponential(GammaRule::constant(1.0), 0.0, 1.0, 100000, 50, 2);
        CHECK_FALSE(gamma_bound_check(e, 0.5, 0.0, 1.0).pass);
    }
}

TEST_CASE("admissible overload rejects rules outside the subgradient set") {
    const SubgradientSet s = driver_subgradient_interval(DriverSpec::positive_part(0.5));
    CHECK_NOTHROW((void)doleans_exponential(GammaRule::constant(0.25), s, 0.0, 1.0, 10, 5, 1));
    CHECK_THROWS((void)doleans_exponential(GammaRule::alternating(0.25), s, 0.0, 1.0, 10, 5, 1));
}
