// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace riskdrift {

[[nodiscard]] double sample_mean(std::span<const double> v);
/// Unbiased sample variance; 0 for fewer than two values.
[[nodiscard]] double sample_variance(std::span<const double> v);
/// sqrt(variance / n).
[[nodiscard]] double standard_error(std::span<const double> v);

/// Shortest round-trip decimal form ("%.17g" trimmed), locale independent.
[[nodiscard]] std::string format_number(double x);

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
[[nodiscard]] QuadratureRule gauss_legendre(std::size_t points);
/// The same rule mapped affinely onto [a, b].
[[nodiscard]] QuadratureRule gauss_legendre(std::size_t points, double a, double b);

/// Ordinary least squares y ≈ slope·x + intercept.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
[[nodiscard]] LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

} // namespace riskdrift
