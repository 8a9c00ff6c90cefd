#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "lattice/lattice.hpp"
#include "lattice/student_sim.hpp"

namespace lattice {

// {"n_levels", "rows", "items_per_node", "threshold", "kind", "n_choices"}.
// kind is "completion" or "multiple_choice"; n_choices is only written for the latter.
nlohmann::json to_json(const LatticeConfig& cfg);
LatticeConfig config_from_json(const nlohmann::json& doc);

// Reads a whole file; throws NotFoundError.
std::string read_file(const std::string& path);
nlohmann::json parse_json(std::string_view text);

LatticeConfig load_config(const std::string& path);

// FNV-1a over the canonical (compact, key-sorted) JSON of the config, as 16 hex digits.
std::string config_hash(const LatticeConfig& cfg);

nlohmann::json to_json(const StudentProfile& profile);
StudentProfile profile_from_json(const nlohmann::json& doc);

std::string_view kind_name(TestKind kind);

// Delimited table with header "column<sep>grade<sep>mass<sep>count".
std::string distribution_table(const GradeDistribution& dist, const LatticeConfig& cfg,
                               char separator = '\t');

nlohmann::json to_json(const DistributionSummary& summary);

}  // namespace lattice
