// SPDX-License-Identifier: MIT
#include "riskdrift/model.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace riskdrift {

// ----------------------------------------------------------------------------
// ControlSet
// ----------------------------------------------------------------------------

ControlSet ControlSet::finite(const std::vector<ControlValue>& values) {
    ControlSet set;
    if (values.empty()) return set;
    set.dim_ = values.front().components.size();
    if (set.dim_ == 0) throw ValidationError("control values must have at least one component");
    for (const auto& v : values) {
        if (v.components.size() != set.dim_) throw ValidationError("control values differ in dimension");
        set.flat_.insert(set.flat_.end(), v.components.begin(), v.components.end());
    }
    return set;
}

ControlSet ControlSet::box(const std::vector<double>& lower, const std::vector<double>& upper,
                           const std::vector<std::size_t>& counts) {
    if (lower.empty() || lower.size() != upper.size() || lower.size() != counts.size())
        throw ValidationError("control box bounds and counts must have equal, nonzero length");
    const std::size_t m = lower.size();
    std::size_t total = 1;
    for (std::size_t j = 0; j < m; ++j) {
        if (counts[j] == 0) throw ValidationError("control box count must be positive");
        if (upper[j] < lower[j]) throw ValidationError("control box upper < lower");
        total *= counts[j];
    }
    ControlSet set;
    set.dim_ = m;
    set.flat_.reserve(total * m);
    std::vector<std::size_t> idx(m, 0);
    for (std::size_t k = 0; k < total; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
            const double frac = counts[j] == 1 ? 0.5 : static_cast<double>(idx[j]) / static_cast<double>(counts[j] - 1);
            set.flat_.push_back(counts[j] == 1 ? 0.5 * (lower[j] + upper[j])
                                               : lower[j] + frac * (upper[j] - lower[j]));
        }
        for (std::size_t j = m; j-- > 0;) {
            if (++idx[j] < counts[j]) break;
            idx[j] = 0;
        }
    }
    return set;
}

ControlSet ControlSet::singleton(double value) { return finite({ControlValue{{value}}}); }

ControlValue ControlSet::value(std::size_t i) const {
    const auto v = (*this)[i];
    return ControlValue{{v.begin(), v.end()}};
}

std::size_t ControlSet::index_of(std::span<const double> a, double tol) const {
    if (a.size() != dim_) return size();
    for (std::size_t i = 0; i < size(); ++i) {
        const auto v = (*this)[i];
        bool same = true;
        for (std::size_t j = 0; j < dim_ && same; ++j) same = std::abs(v[j] - a[j]) <= tol;
        if (same) return i;
    }
    return size();
}

// ----------------------------------------------------------------------------
// ProblemDefinition
// ----------------------------------------------------------------------------

void ProblemDefinition::check() const {
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");
    if (controls.empty()) throw ValidationError("control set must be nonempty");
    if (!drift || !diffusion || !running_cost || !terminal_cost)
        throw ValidationError("all four coefficients (b, sigma, c, Psi) must be set");
    if (state_dim == 0 || noise_dim == 0) throw ValidationError("state and noise dimensions must be positive");
}

double ProblemDefinition::drift_at(double t, double x, Control a) const {
    double out = 0.0;
    drift(std::max(t, 0.0), State(&x, 1), a, std::span<double>(&out, 1));
    return out;
}

double ProblemDefinition::diffusion_at(double t, double x, Control a) const {
    double out = 0.0;
    diffusion(std::max(t, 0.0), State(&x, 1), a, std::span<double>(&out, 1));
    return out;
}

double ProblemDefinition::running_cost_at(double t, double x, Control a) const {
    return running_cost(std::max(t, 0.0), State(&x, 1), a);
}

double ProblemDefinition::terminal_at(double x) const { return terminal_cost(State(&x, 1)); }

void ProblemDefinition::drift_into(double t, State x, Control a, std::span<double> out) const {
    drift(std::max(t, 0.0), x, a, out);
}

void ProblemDefinition::diffusion_into(double t, State x, Control a, std::span<double> out) const {
    diffusion(std::max(t, 0.0), x, a, out);
}

double ProblemDefinition::running_cost_at(double t, State x, Control a) const {
    return running_cost(std::max(t, 0.0), x, a);
}

ProblemDefinition ScalarProblemBuilder::build() const {
    ProblemDefinition p;
    auto b = drift;
    auto s = diffusion;
    auto c = running_cost;
    auto psi = terminal_cost;
    p.drift = [b](double t, State x, Control a, std::span<double> out) { out[0] = b(t, x[0], a[0]); };
    p.diffusion = [s](double t, State x, Control a, std::span<double> out) { out[0] = s(t, x[0], a[0]); };
    p.running_cost = [c](double t, State x, Control a) { return c(t, x[0], a[0]); };
    p.terminal_cost = [psi](State x) { return psi(x[0]); };
    p.horizon = horizon;
    p.controls = controls;
    p.lipschitz_K = lipschitz_K;
    p.bound_K = bound_K;
    p.check();
    return p;
}

// ----------------------------------------------------------------------------
// DriverSpec
// ----------------------------------------------------------------------------

std::string to_string(DriverKind kind) {
    switch (kind) {
    case DriverKind::zero: return "zero";
    case DriverKind::linear: return "linear";
    case DriverKind::scaled_abs: return "scaled_abs";
    case DriverKind::positive_part: return "positive_part";
    case DriverKind::custom: return "custom";
    }
    return "unknown";
}

DriverSpec DriverSpec::zero(std::size_t noise_dim) {
    DriverSpec d;
    d.kind_ = DriverKind::zero;
    d.noise_dim_ = noise_dim;
    d.label_ = "zero";
    return d;
}

DriverSpec DriverSpec::linear(std::vector<double> gamma) {
    if (gamma.empty()) throw ValidationError("linear driver needs a nonempty gamma");
    DriverSpec d;
    d.kind_ = DriverKind::linear;
    d.noise_dim_ = gamma.size();
    const double norm = std::sqrt(std::inner_product(gamma.begin(), gamma.end(), gamma.begin(), 0.0));
    d.lipschitz_K_ = norm;
    d.subgradient_u_ = norm;
    d.gamma_ = std::move(gamma);
    d.label_ = "linear";
    return d;
}

DriverSpec DriverSpec::scaled_abs(double kappa, std::size_t noise_dim) {
    if (!(kappa > 0.0)) throw ValidationError("scaled_abs driver needs kappa > 0");
    DriverSpec d;
    d.kind_ = DriverKind::scaled_abs;
    d.noise_dim_ = noise_dim;
    d.kappa_ = kappa;
    d.lipschitz_K_ = kappa;
    d.subgradient_u_ = kappa;
    d.label_ = "scaled_abs";
    return d;
}

DriverSpec DriverSpec::positive_part(double kappa) {
    if (!(kappa > 0.0)) throw ValidationError("positive_part driver needs kappa > 0");
    DriverSpec d;
    d.kind_ = DriverKind::positive_part;
    d.noise_dim_ = 1;
    d.kappa_ = kappa;
    d.lipschitz_K_ = kappa;
    d.subgradient_u_ = kappa;
    d.label_ = "positive_part";
    return d;
}

DriverSpec DriverSpec::custom(CustomFn fn, double lipschitz_K, double subgradient_bound_u,
                              std::size_t noise_dim, std::string label) {
    if (!fn) throw ValidationError("custom driver needs a callable");
    if (!(lipschitz_K > 0.0)) throw ValidationError("custom driver needs lipschitz_K > 0");
    if (subgradient_bound_u < 0.0) throw ValidationError("subgradient bound must be nonnegative");
    DriverSpec d;
    d.kind_ = DriverKind::custom;
    d.noise_dim_ = noise_dim;
    d.lipschitz_K_ = lipschitz_K;
    d.subgradient_u_ = subgradient_bound_u;
    d.custom_ = std::move(fn);
    d.label_ = std::move(label);
    return d;
}

double DriverSpec::operator()(double t, std::span<const double> z) const {
    const double tc = std::max(t, 0.0);
    switch (kind_) {
    case DriverKind::zero: return 0.0;
    case DriverKind::linear: {
        double s = 0.0;
        for (std::size_t i = 0; i < gamma_.size() && i < z.size(); ++i) s += gamma_[i] * z[i];
        return s;
    }
    case DriverKind::scaled_abs: {
        if (z.size() == 1) return kappa_ * std::abs(z[0]);
        double s = 0.0;
        for (double v : z) s += v * v;
        return kappa_ * std::sqrt(s);
    }
    case DriverKind::positive_part: return kappa_ * std::max(z[0], 0.0);
    case DriverKind::custom: return custom_(tc, z);
    }
    return 0.0;
}

SubgradientSet driver_subgradient_interval(const DriverSpec& driver) {
    SubgradientSet s;
    const std::size_t d = driver.noise_dim();
    s.center.assign(d, 0.0);
    switch (driver.kind()) {
    case DriverKind::zero: s.shape = SubgradientSet::Shape::point; break;
    case DriverKind::linear:
        s.shape = SubgradientSet::Shape::point;
        s.center = driver.gamma();
        s.lower = s.upper = d == 1 ? driver.gamma()[0] : 0.0;
        break;
    case DriverKind::scaled_abs:
        if (d == 1) {
            s.shape = SubgradientSet::Shape::interval;
            s.lower = -driver.kappa();
            s.upper = driver.kappa();
        } else {
            s.shape = SubgradientSet::Shape::ball;
        }
        s.radius = driver.kappa();
        break;
    case DriverKind::positive_part:
        s.shape = SubgradientSet::Shape::interval;
        s.lower = 0.0;
        s.upper = driver.kappa();
        s.radius = driver.kappa();
        break;
    case DriverKind::custom:
        s.shape = SubgradientSet::Shape::ball;
        s.radius = driver.subgradient_bound_u();
        if (d == 1) {
            s.lower = -s.radius;
            s.upper = s.radius;
        }
        break;
    }
    return s;
}

bool SubgradientSet::contains(std::span<const double> gamma, double tol) const {
    switch (shape) {
    case Shape::point: {
        for (std::size_t i = 0; i < gamma.size(); ++i) {
            const double c = i < center.size() ? center[i] : 0.0;
            if (std::abs(gamma[i] - c) > tol) return false;
        }
        return true;
    }
    case Shape::interval: return gamma.size() == 1 && gamma[0] >= lower - tol && gamma[0] <= upper + tol;
    case Shape::ball: {
        double s = 0.0;
        for (std::size_t i = 0; i < gamma.size(); ++i) {
            const double c = i < center.size() ? center[i] : 0.0;
            s += (gamma[i] - c) * (gamma[i] - c);
        }
        return std::sqrt(s) <= radius + tol;
    }
    }
    return false;
}

// ----------------------------------------------------------------------------
// validate_problem
// ----------------------------------------------------------------------------

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

struct SampleMaxima {
    std::array<double, 4> lip{};
    std::array<double, 4> holder{};
    std::array<double, 4> mag{};
};

} // namespace

const CoefficientStats& AssumptionReport::at(const std::string& name) const {
    for (const auto& c : coefficients)
        if (c.name == name) return c;
    throw ValidationError("no coefficient named " + name);
}

AssumptionReport validate_problem(const ProblemDefinition& problem, std::size_t samples, Seed seed,
                                  const ValidationOptions& options) {
    problem.check();
    if (samples < 2) throw ValidationError("validate_problem needs at least 2 samples");

    const std::size_t n = problem.state_dim;
    const std::size_t d = problem.noise_dim;
    const double radius = options.state_radius;
    const double T = problem.horizon;
    const CounterRng rng(seed);
    const std::size_t nu = problem.controls.size();

    constexpr std::size_t chunk = 256;
    const std::size_t chunks = (samples + chunk - 1) / chunk;
    std::vector<SampleMaxima> partial(chunks);

    parallel_for(chunks, [&](std::size_t c) {
        SampleMaxima m;
        std::vector<double> x1(n), x2(n), b1(n), b2(n), s1(n * d), s2(n * d);
        const std::size_t lo = c * chunk;
        const std::size_t hi = std::min(samples, lo + chunk);
        for (std::size_t k = lo; k < hi; ++k) {
            std::uint64_t lane = 0;
            auto u = [&] { return rng.uniform(k, 0, lane++); };
            const double t = u() * T;
            const double s = u() * T;
            const bool local = u() < 0.5;
            for (std::size_t i = 0; i < n; ++i) {
                x1[i] = radius * (2.0 * u() - 1.0);
                x2[i] = local ? std::clamp(x1[i] + 1e-3 * radius * (2.0 * u() - 1.0), -radius, radius)
                              : radius * (2.0 * u() - 1.0);
            }
            const auto i1 = std::min(nu - 1, static_cast<std::size_t>(u() * static_cast<double>(nu)));
            const auto i2 = local && u() < 0.5 ? i1 : std::min(nu - 1, static_cast<std::size_t>(u() * static_cast<double>(nu)));
            const auto a1 = problem.controls[i1];
            const auto a2 = problem.controls[i2];
            const double denom = dist(x1, x2) + dist(a1, a2);

            problem.drift_into(t, x1, a1, b1);
            problem.drift_into(t, x2, a2, b2);
            problem.diffusion_into(t, x1, a1, s1);
            problem.diffusion_into(t, x2, a2, s2);
            const double c1 = problem.running_cost_at(t, State(x1), a1);
            const double c2 = problem.running_cost_at(t, State(x2), a2);
            const double p1 = problem.terminal_cost(x1);
            const double p2 = problem.terminal_cost(x2);

            m.mag[0] = std::max({m.mag[0], norm2(b1), norm2(b2)});
            m.mag[1] = std::max({m.mag[1], norm2(s1), norm2(s2)});
            m.mag[2] = std::max({m.mag[2], std::abs(c1), std::abs(c2)});
            m.mag[3] = std::max({m.mag[3], std::abs(p1), std::abs(p2)});
            if (denom > 0.0) {
                m.lip[0] = std::max(m.lip[0], dist(b1, b2) / denom);
                m.lip[1] = std::max(m.lip[1], dist(s1, s2) / denom);
                m.lip[2] = std::max(m.lip[2], std::abs(c1 - c2) / denom);
            }
            const double dx = dist(x1, x2);
            if (dx > 0.0) m.lip[3] = std::max(m.lip[3], std::abs(p1 - p2) / dx);

            const double dt = std::abs(t - s);
            if (dt > 0.0) {
                const double root = std::sqrt(dt);
                problem.drift_into(s, x1, a1, b2);
                problem.diffusion_into(s, x1, a1, s2);
                const double cs = problem.running_cost_at(s, State(x1), a1);
                m.holder[0] = std::max(m.holder[0], dist(b1, b2) / root);
                m.holder[1] = std::max(m.holder[1], dist(s1, s2) / root);
                m.holder[2] = std::max(m.holder[2], std::abs(c1 - cs) / root);
            }
        }
        partial[c] = m;
    });

    SampleMaxima total;
    for (const auto& m : partial)
        for (std::size_t j = 0; j < 4; ++j) {
            total.lip[j] = std::max(total.lip[j], m.lip[j]);
            total.holder[j] = std::max(total.holder[j], m.holder[j]);
            total.mag[j] = std::max(total.mag[j], m.mag[j]);
        }

    AssumptionReport report;
    report.samples = samples;
    const std::array<const char*, 4> names{"drift", "diffusion", "running_cost", "terminal_cost"};
    bool pass = true;
    for (std::size_t j = 0; j < 4; ++j) {
        report.coefficients.push_back({names[j], total.lip[j], total.holder[j], total.mag[j]});
        pass = pass && total.lip[j] <= problem.lipschitz_K && total.holder[j] <= problem.lipschitz_K &&
               total.mag[j] <= problem.bound_K;
    }
    report.pass = pass;
    return report;
}

// ----------------------------------------------------------------------------
// driver_axiom_check
// ----------------------------------------------------------------------------

DriverAxiomReport driver_axiom_check(const DriverSpec& driver, std::size_t samples, Seed seed, double horizon) {
    if (samples < 1) throw ValidationError("driver_axiom_check needs at least one sample");
    constexpr double tol = 1e-12;
    constexpr double zscale = 10.0;
    const std::size_t d = driver.noise_dim();
    const CounterRng rng(seed);
    DriverAxiomReport r;
    r.samples = samples;

    std::vector<double> z1(d), z2(d), mix(d), scaled(d), zero(d, 0.0);
    bool conv_ok = true, hom_ok = true, norm_ok = true, lip_ok = true, ext_ok = true;
    for (std::size_t k = 0; k < samples; ++k) {
        std::uint64_t lane = 0;
        auto u = [&] { return rng.uniform(k, 1, lane++); };
        const double t = u() * horizon;
        const double lambda = u();
        const double beta = zscale * u();
        for (std::size_t i = 0; i < d; ++i) {
            z1[i] = zscale * (2.0 * u() - 1.0);
            z2[i] = zscale * (2.0 * u() - 1.0);
            mix[i] = lambda * z1[i] + (1.0 - lambda) * z2[i];
            scaled[i] = beta * z1[i];
        }
        const double g1 = driver(t, z1);
        const double g2 = driver(t, z2);

        const double g0 = std::abs(driver(t, zero));
        r.max_normalization_error = std::max(r.max_normalization_error, g0);
        norm_ok = norm_ok && g0 <= tol;

        const double rhs = lambda * g1 + (1.0 - lambda) * g2;
        const double conv = driver(t, mix) - rhs;
        r.max_convexity_violation = std::max(r.max_convexity_violation, conv);
        conv_ok = conv_ok && conv <= tol * (1.0 + std::abs(rhs));

        const double hom = std::abs(driver(t, scaled) - beta * g1);
        r.max_homogeneity_error = std::max(r.max_homogeneity_error, hom);
        hom_ok = hom_ok && hom <= tol * (1.0 + std::abs(beta * g1));

        const double lip = std::abs(g1 - g2) - driver.lipschitz_K() * dist(z1, z2);
        r.max_lipschitz_excess = std::max(r.max_lipschitz_excess, lip);
        lip_ok = lip_ok && lip <= tol * (1.0 + std::abs(g1) + std::abs(g2));

        const double ext = std::abs(driver(-u(), z1) - driver(0.0, z1));
        r.max_time_extension_error = std::max(r.max_time_extension_error, ext);
        ext_ok = ext_ok && ext == 0.0;
    }
    if (!norm_ok) r.failures.emplace_back("normalization");
    if (!conv_ok) r.failures.emplace_back("convexity");
    if (!hom_ok) r.failures.emplace_back("positive homogeneity");
    if (!lip_ok) r.failures.emplace_back("lipschitz");
    if (!ext_ok) r.failures.emplace_back("time extension");
    r.pass = r.failures.empty();
    return r;
}

} // namespace riskdrift
