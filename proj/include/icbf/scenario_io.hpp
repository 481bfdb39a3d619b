#pragma once

#include <string>
#include <vector>

#include "icbf/sim.hpp"

namespace icbf {

struct LoadedScenario {
  ScenarioConfig cfg;
  std::string canonical_json;  // parsed values re-serialized with sorted keys
  std::string digest;          // FNV-1a 64 of canonical_json, hex
};

// Throws ConfigError on schema or semantic problems; parse errors carry the
// line and column, semantic errors the offending field path.
LoadedScenario load_scenario_text(const std::string& json_text,
                                  const std::string& source_name);
LoadedScenario load_scenario_file(const std::string& path);

// `ref` is a builtin name or a path to a JSON file (paths win when both exist).
LoadedScenario resolve_scenario(const std::string& ref);

std::vector<std::string> builtin_names();
std::string builtin_json(const std::string& name);

std::string fnv1a_hex(const std::string& data);

}  // namespace icbf
