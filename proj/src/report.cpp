// SPDX-License-Identifier: MIT
#include "riskdrift/report.hpp"

#include "riskdrift/errors.hpp"
#include "riskdrift/numeric.hpp"

#include <fstream>
#include <ostream>

namespace riskdrift {

namespace {

void header(const Provenance& p, std::ostream& out) {
    out << "# config_hash=" << p.config_hash << ", seed=" << p.seed << '\n';
}

} // namespace

void write_field_csv(const ValueField& field, const Provenance& provenance, std::ostream& out) {
    header(provenance, out);
    out << "t,x,value\n";
    for (std::size_t k = 0; k < field.time_count(); ++k)
        for (std::size_t i = 0; i < field.space_count(); ++i)
            out << format_number(field.times()[k]) << ',' << format_number(field.space()[i]) << ','
                << format_number(field.at(k, i)) << '\n';
}

void write_policy_csv(const PolicyField& policy, const ControlSet& controls, const Provenance& provenance,
                      std::ostream& out) {
    header(provenance, out);
    out << "t,x,control\n";
    for (std::size_t k = 0; k < policy.interval_count(); ++k)
        for (std::size_t i = 0; i < policy.space().count; ++i)
            out << format_number(policy.boundaries()[k]) << ',' << format_number(policy.space()[i]) << ','
                << format_number(controls[policy.index(k, i)][0]) << '\n';
}

Json with_provenance(Json report, const Provenance& provenance) {
    report["config_hash"] = provenance.config_hash;
    report["seed"] = provenance.seed;
    return report;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string json_text(const Json& value) { return value.dump(2) + "\n"; }

} // namespace riskdrift
