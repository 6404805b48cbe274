// SPDX-License-Identifier: MIT
#include "riskdrift/value_field.hpp"

#include "riskdrift/errors.hpp"

#include <algorithm>
#include <cmath>

namespace riskdrift {

UniformGrid UniformGrid::centered(double center, double step, std::size_t half_nodes) {
    if (!(step > 0.0)) throw ValidationError("grid step must be positive");
    return {center - static_cast<double>(half_nodes) * step, step, 2 * half_nodes + 1};
}

UniformGrid UniformGrid::covering(double center, double step, double radius) {
    if (!(radius > 0.0)) throw ValidationError("grid radius must be positive");
    const auto half = static_cast<std::size_t>(std::ceil(radius / step - 1e-9));
    return centered(center, step, std::max<std::size_t>(half, 1));
}

std::size_t UniformGrid::nearest(double x) const {
    const double s = std::round((x - origin) / step);
    if (s <= 0.0) return 0;
    return std::min(count - 1, static_cast<std::size_t>(s));
}

std::pair<std::size_t, double> UniformGrid::locate(double x) const {
    const double s = (x - origin) / step;
    if (s <= 0.0) return {0, 0.0};
    if (s >= static_cast<double>(count - 1)) return {count - 2, 1.0};
    const double fl = std::floor(s);
    return {static_cast<std::size_t>(fl), s - fl};
}

double UniformGrid::interpolate(std::span<const double> values, double x) const {
    if (count == 1) return values[0];
    const auto [i, w] = locate(x);
    if (w == 0.0) return values[i];
    if (w == 1.0) return values[i + 1];
    return (1.0 - w) * values[i] + w * values[i + 1];
}

std::string to_string(FieldProducer p) {
    switch (p) {
    case FieldProducer::Vh: return "Vh";
    case FieldProducer::V_hjb: return "V_hjb";
    case FieldProducer::V_tilde: return "V_tilde";
    case FieldProducer::V_hat: return "V_hat";
    case FieldProducer::V_policy: return "V_policy";
    }
    return "unknown";
}

ValueField::ValueField(std::vector<double> times, UniformGrid space, FieldProducer producer)
    : times_(std::move(times)), space_(space), producer_(producer), values_(times_.size() * space.count, 0.0) {
    if (times_.empty() || space_.count == 0) throw ValidationError("value field needs nonempty grids");
    if (!std::is_sorted(times_.begin(), times_.end())) throw ValidationError("value field times must increase");
}

std::size_t ValueField::time_index(double t, double tol) const {
    for (std::size_t k = 0; k < times_.size(); ++k)
        if (std::abs(times_[k] - t) <= tol) return k;
    return times_.size();
}

double ValueField::interpolate(double t, double x) const {
    if (times_.size() == 1 || t <= times_.front()) return value_at(0, x);
    if (t >= times_.back()) return value_at(times_.size() - 1, x);
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
    const double a = value_at(k, x);
    if (w == 0.0) return a;
    return (1.0 - w) * a + w * value_at(k + 1, x);
}

PolicyField::PolicyField(std::vector<double> boundaries, UniformGrid space)
    : boundaries_(std::move(boundaries)), space_(space) {
    if (boundaries_.size() < 2) throw ValidationError("policy needs at least one interval");
    indices_.assign((boundaries_.size() - 1) * space_.count, 0);
}

std::size_t PolicyField::interval_of(double t) const {
    const double tol = 1e-10;
    const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), t + tol);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - boundaries_.begin() - 1, 0));
    return std::min(k, interval_count() - 1);
}

std::size_t PolicyField::control_index(double t, double x) const {
    return index(interval_of(t), space_.nearest(x));
}

double PolicyField::hold_until(double t) const { return boundaries_[interval_of(t) + 1]; }

std::vector<double> interval_boundaries(double t0, double T, double length, double tol) {
    if (!(length > 0.0)) throw ValidationError("interval length must be positive");
    if (!(T > t0)) throw ValidationError("interval end must exceed start");
    std::vector<double> b{t0};
    for (std::size_t k = 1;; ++k) {
        const double t = t0 + static_cast<double>(k) * length;
        if (t >= T - tol) break;
        b.push_back(t);
    }
    b.push_back(T);
    return b;
}

} // namespace riskdrift
