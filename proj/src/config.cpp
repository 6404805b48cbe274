// SPDX-License-Identifier: MIT
#include "riskdrift/config.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace riskdrift {

namespace {

using Coefficient = std::function<double(double x, double a)>;

std::vector<double> params_of(const Json& spec, std::size_t max_count) {
    std::vector<double> p;
    if (spec.contains("params")) {
        if (!spec["params"].is_array()) throw ValidationError("coefficient params must be an array");
        for (const auto& v : spec["params"]) p.push_back(v.get<double>());
    }
    if (p.size() > max_count) throw ValidationError("too many coefficient params for family");
    p.resize(max_count, 0.0);
    return p;
}

/// Piecewise-linear table in x, flat outside the sampled range.
double table_lookup(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return (1.0 - w) * ys[j - 1] + w * ys[j];
}

Coefficient tabulated(const Json& spec, const ControlSet& controls) {
    if (!spec.contains("x") || !spec.contains("values")) throw ValidationError("tabulated family needs x and values");
    const auto xs = spec["x"].get<std::vector<double>>();
    if (xs.size() < 2) throw ValidationError("tabulated family needs at least two x samples");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ValidationError("tabulated x samples must increase");
    const Json& values = spec["values"];
    if (!values.is_array() || values.empty()) throw ValidationError("tabulated values must be a nonempty array");
    std::vector<std::vector<double>> rows;
    if (values.front().is_array()) {
        for (const auto& r : values) rows.push_back(r.get<std::vector<double>>());
        if (rows.size() != controls.size()) throw ValidationError("tabulated rows must match the control count");
    } else {
        rows.push_back(values.get<std::vector<double>>());
    }
    for (const auto& r : rows)
        if (r.size() != xs.size()) throw ValidationError("tabulated values must match the x samples");
    if (rows.size() == 1)
        return [xs, row = rows.front()](double x, double) { return table_lookup(xs, row, x); };
    auto shared = std::make_shared<const ControlSet>(controls);
    return [xs, rows, shared](double x, double a) {
        const double av = a;
        const std::size_t idx = shared->index_of(std::span<const double>(&av, 1), 1e-9);
        if (idx >= rows.size()) throw ValidationError("tabulated coefficient queried at an unknown control");
        return table_lookup(xs, rows[idx], x);
    };
}

Coefficient coefficient_from_json(const Json& spec, const ControlSet& controls, const std::string& what) {
    if (!spec.is_object() || !spec.contains("family"))
        throw ValidationError(what + ": coefficient needs a \"family\"");
    const std::string family = spec["family"].get<std::string>();
    Coefficient f;
    if (family == "zero") {
        f = [](double, double) { return 0.0; };
    } else if (family == "constant") {
        const auto p = params_of(spec, 1);
        f = [c = p[0]](double, double) { return c; };
    } else if (family == "affine") {
        const auto p = params_of(spec, 3);
        f = [p](double x, double a) { return p[0] + p[1] * x + p[2] * a; };
    } else if (family == "linear") {
        const auto p = params_of(spec, 2);
        f = [p](double x, double) { return p[0] + p[1] * x; };
    } else if (family == "quadratic") {
        const auto p = params_of(spec, 5);
        f = [p](double x, double a) { return p[0] + p[1] * x + p[2] * x * x + p[3] * a + p[4] * a * a; };
    } else if (family == "tabulated") {
        f = tabulated(spec, controls);
    } else {
        throw ValidationError(what + ": unknown coefficient family \"" + family + "\"");
    }
    if (spec.contains("clip")) {
        const auto c = spec["clip"].get<std::vector<double>>();
        if (c.size() != 2 || !(c[0] < c[1])) throw ValidationError(what + ": clip must be [lo, hi] with lo < hi");
        f = [f, lo = c[0], hi = c[1]](double x, double a) { return f(std::clamp(x, lo, hi), a); };
    }
    return f;
}

ControlSet controls_from_json(const Json& spec) {
    if (spec.is_null()) return ControlSet::singleton();
    if (spec.contains("values")) {
        std::vector<ControlValue> values;
        for (const auto& v : spec["values"]) values.push_back(ControlValue{{v.get<double>()}});
        return ControlSet::finite(values);
    }
    if (spec.contains("lower") && spec.contains("upper")) {
        const auto count = spec.value("count", std::size_t{2});
        return ControlSet::box({spec["lower"].get<double>()}, {spec["upper"].get<double>()}, {count});
    }
    throw ValidationError("controls need \"values\" or \"lower\"/\"upper\"/\"count\"");
}

} // namespace

ProblemDefinition problem_from_json(const Json& p) {
    if (!p.is_object()) throw ValidationError("problem must be an object");
    ScalarProblemBuilder b;
    b.horizon = p.value("horizon", 1.0);
    b.controls = controls_from_json(p.contains("controls") ? p["controls"] : Json());
    b.lipschitz_K = p.value("lipschitz_K", 1.0);
    b.bound_K = p.value("bound_K", 10.0);
    auto wrap = [](Coefficient f) { return [f](double, double x, double a) { return f(x, a); }; };
    if (p.contains("drift")) b.drift = wrap(coefficient_from_json(p["drift"], b.controls, "drift"));
    if (p.contains("diffusion")) b.diffusion = wrap(coefficient_from_json(p["diffusion"], b.controls, "diffusion"));
    if (p.contains("running_cost"))
        b.running_cost = wrap(coefficient_from_json(p["running_cost"], b.controls, "running_cost"));
    if (p.contains("terminal_cost")) {
        const Coefficient f = coefficient_from_json(p["terminal_cost"], b.controls, "terminal_cost");
        b.terminal_cost = [f](double x) { return f(x, 0.0); };
    }
    ProblemDefinition def = b.build();
    def.check();
    return def;
}

DriverSpec driver_from_json(const Json& d) {
    if (!d.is_object() || !d.contains("kind")) throw ValidationError("driver needs a \"kind\"");
    const std::string kind = d["kind"].get<std::string>();
    if (kind == "zero") return DriverSpec::zero();
    if (kind == "linear") return DriverSpec::linear({d.value("gamma", 0.0)});
    if (kind == "scaled_abs") return DriverSpec::scaled_abs(d.value("kappa", 0.5));
    if (kind == "positive_part") return DriverSpec::positive_part(d.value("kappa", 0.5));
    if (kind == "power") {
        const double c = d.value("coefficient", 1.0);
        const double e = d.value("exponent", 2.0);
        if (!(e > 0.0)) throw ValidationError("power driver needs exponent > 0");
        return DriverSpec::custom(
            [c, e](double, std::span<const double> z) { return c * std::pow(std::abs(z[0]), e); },
            d.value("lipschitz_K", 1.0), d.value("subgradient_bound_u", 0.0), 1,
            "power(" + format_number(c) + "," + format_number(e) + ")");
    }
    throw ValidationError("unknown driver kind \"" + kind + "\"");
}

Json default_config_document() {
    return Json{{"problem",
                 {{"horizon", 1.0},
                  {"drift", {{"family", "zero"}}},
                  {"diffusion", {{"family", "constant"}, {"params", {1.0}}}},
                  {"running_cost", {{"family", "zero"}}},
                  {"terminal_cost", {{"family", "linear"}, {"params", {0.0, 1.0}}}},
                  {"lipschitz_K", 1.0},
                  {"bound_K", 10.0}}},
                {"driver", {{"kind", "scaled_abs"}, {"kappa", 0.5}}},
                {"evaluation", {{"t0", 0.0}, {"x0", 0.0}}}};
}

namespace {

LoadedConfig load_config_unchecked(const Json& document) {
    if (!document.is_object()) throw ValidationError("config must be a JSON object");
    if (!document.contains("problem")) throw ValidationError("config needs a \"problem\" section");
    LoadedConfig c{problem_from_json(document["problem"]),
                   document.contains("driver") ? driver_from_json(document["driver"]) : DriverSpec::zero(),
                   0.0,
                   0.0,
                   document};
    if (document.contains("evaluation")) {
        c.t0 = document["evaluation"].value("t0", 0.0);
        c.x0 = document["evaluation"].value("x0", 0.0);
    }
    return c;
}

} // namespace

LoadedConfig load_config(const Json& document) {
    try {
        return load_config_unchecked(document);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("invalid config value: ") + e.what());
    }
}

LoadedConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError("malformed config " + path.string() + ": " + e.what());
    }
    return load_config(doc);
}

std::string config_hash(const Json& document) {
    const std::string text = document.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace riskdrift
