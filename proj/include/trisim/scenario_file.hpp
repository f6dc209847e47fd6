#pragma once

#include <filesystem>
#include <string>

#include "trisim/sim.hpp"

namespace trisim {

/// Parses a YAML scenario. Omitted keys keep their compiled-in defaults.
/// Unknown keys, wrong types and invalid values raise ScenarioError with the
/// key path and line number.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Writes every field, so parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& scenario);

}  // namespace trisim
