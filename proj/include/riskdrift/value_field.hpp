// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace riskdrift {

/// Uniform 1-D node set origin + i·step, i = 0..count-1.
struct UniformGrid {
    double origin = 0.0;
    double step = 1.0;
    std::size_t count = 0;

    /// Symmetric grid center ± half_nodes·step.
    static UniformGrid centered(double center, double step, std::size_t half_nodes);
    /// Smallest symmetric grid with step `step` reaching at least `radius` from `center`.
    static UniformGrid covering(double center, double step, double radius);

    [[nodiscard]] double operator[](std::size_t i) const { return origin + static_cast<double>(i) * step; }
    [[nodiscard]] double back() const { return (*this)[count - 1]; }
    [[nodiscard]] std::size_t nearest(double x) const;
    /// Left node index and weight of the right node for linear interpolation;
    /// x outside the grid clamps to the end value.
    [[nodiscard]] std::pair<std::size_t, double> locate(double x) const;
    [[nodiscard]] double interpolate(std::span<const double> values, double x) const;
};

enum class FieldProducer { Vh, V_hjb, V_tilde, V_hat, V_policy };

[[nodiscard]] std::string to_string(FieldProducer p);

/**
 * Value function on a (time × space) grid, row-major by time.
 *
 * Times are increasing and need not be uniform (the DP grid has a shorter
 * last interval). The last row is the terminal layer for every producer
 * except V_hat, whose domain stops at T - ε².
 */
class ValueField {
public:
    ValueField() = default;
    ValueField(std::vector<double> times, UniformGrid space, FieldProducer producer);

    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    [[nodiscard]] const UniformGrid& space() const { return space_; }
    [[nodiscard]] FieldProducer producer() const { return producer_; }
    [[nodiscard]] std::size_t time_count() const { return times_.size(); }
    [[nodiscard]] std::size_t space_count() const { return space_.count; }

    [[nodiscard]] std::span<double> layer(std::size_t k) {
        return {values_.data() + k * space_.count, space_.count};
    }
    [[nodiscard]] std::span<const double> layer(std::size_t k) const {
        return {values_.data() + k * space_.count, space_.count};
    }
    [[nodiscard]] double& at(std::size_t k, std::size_t i) { return values_[k * space_.count + i]; }
    [[nodiscard]] double at(std::size_t k, std::size_t i) const { return values_[k * space_.count + i]; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }

    /// Linear in x on layer k.
    [[nodiscard]] double value_at(std::size_t k, double x) const { return space_.interpolate(layer(k), x); }
    /// Bilinear in (t, x); t is clamped to the time range.
    [[nodiscard]] double interpolate(double t, double x) const;
    /// Index of the time node equal to t within tol, or time_count() when absent.
    [[nodiscard]] std::size_t time_index(double t, double tol = 1e-10) const;

private:
    std::vector<double> times_;
    UniformGrid space_;
    FieldProducer producer_ = FieldProducer::Vh;
    std::vector<double> values_;
};

/// Feedback rule queried by forward simulation: which control to apply at
/// (t, x), and until when it is held.
class FeedbackPolicy {
public:
    virtual ~FeedbackPolicy() = default;
    [[nodiscard]] virtual std::size_t control_index(double t, double x) const = 0;
    [[nodiscard]] virtual double hold_until(double t) const = 0;
    [[nodiscard]] virtual double start_time() const = 0;
    [[nodiscard]] virtual double end_time() const = 0;
};

/**
 * Control indices on a (decision time × space) grid. Decision k applies on
 * [times[k], times[k+1]); the control at x is the one stored at the nearest
 * space node.
 */
class PolicyField : public FeedbackPolicy {
public:
    PolicyField() = default;
    PolicyField(std::vector<double> boundaries, UniformGrid space);

    [[nodiscard]] std::size_t control_index(double t, double x) const override;
    [[nodiscard]] double hold_until(double t) const override;
    [[nodiscard]] double start_time() const override { return boundaries_.front(); }
    [[nodiscard]] double end_time() const override { return boundaries_.back(); }

    [[nodiscard]] std::size_t interval_count() const { return boundaries_.size() - 1; }
    [[nodiscard]] std::size_t interval_of(double t) const;
    [[nodiscard]] const std::vector<double>& boundaries() const { return boundaries_; }
    [[nodiscard]] const UniformGrid& space() const { return space_; }
    [[nodiscard]] std::size_t& index(std::size_t k, std::size_t i) { return indices_[k * space_.count + i]; }
    [[nodiscard]] std::size_t index(std::size_t k, std::size_t i) const { return indices_[k * space_.count + i]; }
    [[nodiscard]] std::span<const std::size_t> row(std::size_t k) const {
        return {indices_.data() + k * space_.count, space_.count};
    }

private:
    std::vector<double> boundaries_;
    UniformGrid space_;
    std::vector<std::size_t> indices_;
};

/// Markov policy frozen on intervals of length h² that tile [t, T], the last
/// one ending exactly at T.
class PiecewiseConstantPolicy : public PolicyField {
public:
    PiecewiseConstantPolicy() = default;
    PiecewiseConstantPolicy(std::vector<double> boundaries, UniformGrid space, double interval_length)
        : PolicyField(std::move(boundaries), space), interval_length_(interval_length) {}

    [[nodiscard]] double interval_length() const { return interval_length_; }

private:
    double interval_length_ = 0.0;
};

/// Boundaries t0, t0 + L, ..., T: the last interval is shorter when L does
/// not divide T - t0, and a remainder below `tol` is merged into the previous one.
[[nodiscard]] std::vector<double> interval_boundaries(double t0, double T, double length, double tol = 1e-10);

} // namespace riskdrift
