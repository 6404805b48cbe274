// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace riskdrift {

using Json = nlohmann::json;

/**
 * Problem, driver and evaluation point loaded from one JSON document.
 *
 * Coefficient families (time-homogeneous; a = first control component):
 *   {"family": "zero"}
 *   {"family": "constant",  "params": [c]}
 *   {"family": "affine",    "params": [p0, p1, p2]}          p0 + p1·x + p2·a
 *   {"family": "linear",    "params": [p0, p1]}              p0 + p1·x
 *   {"family": "quadratic", "params": [p0, p1, p2, p3, p4]}  p0 + p1·x + p2·x² + p3·a + p4·a²
 *   {"family": "tabulated", "x": [...], "values": [...]}     linear interpolation in x,
 *        flat outside; "values" may be one row per control instead
 * Any coefficient accepts "clip": [lo, hi] applied to x before evaluation
 * (truncation, e.g. 0.2·x on |x| <= 10).
 *
 * Drivers: {"kind": "zero" | "linear" (gamma) | "scaled_abs" (kappa) |
 * "positive_part" (kappa) | "power" (coefficient, exponent, lipschitz_K)}.
 * "power" is the custom driver c·|z|^p.
 *
 * Controls: {"values": [...]} | {"lower": l, "upper": u, "count": m};
 * omitted means the singleton {0}.
 */
struct LoadedConfig {
    ProblemDefinition problem;
    DriverSpec driver;
    double t0 = 0.0;
    double x0 = 0.0;
    Json document; // the document as read, used for hashing and experiment settings
};

[[nodiscard]] LoadedConfig load_config(const Json& document);
/// Reads and parses a file; IoError when unreadable, ValidationError when malformed.
[[nodiscard]] LoadedConfig load_config_file(const std::filesystem::path& path);

/// Built-in document: singleton control, b = 0, σ = 1, c = 0, Ψ(x) = x, driver scaled_abs(0.5), T = 1.
[[nodiscard]] Json default_config_document();

[[nodiscard]] ProblemDefinition problem_from_json(const Json& problem);
[[nodiscard]] DriverSpec driver_from_json(const Json& driver);

/// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const Json& document);

} // namespace riskdrift
