// SPDX-License-Identifier: MIT
#pragma once

#include "riskdrift/config.hpp"
#include "riskdrift/model.hpp"
#include "riskdrift/value_field.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace riskdrift {

/// Provenance carried by every emitted file.
struct Provenance {
    std::string config_hash;
    Seed seed = 0;
};

/// Columns t, x, value after a "# config_hash=..., seed=..." comment line.
void write_field_csv(const ValueField& field, const Provenance& provenance, std::ostream& out);

/// Columns t, x, control (first control component) for every decision
/// interval start and node.
void write_policy_csv(const PolicyField& policy, const ControlSet& controls, const Provenance& provenance,
                      std::ostream& out);

/// Adds "config_hash" and "seed" members to a JSON report object.
[[nodiscard]] Json with_provenance(Json report, const Provenance& provenance);

/// Writes text to a file, creating parent directories; IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Pretty JSON with a trailing newline.
[[nodiscard]] std::string json_text(const Json& value);

} // namespace riskdrift
